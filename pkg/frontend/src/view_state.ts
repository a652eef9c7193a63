import { Camera } from "./camera.js";
import type { ReportDoc, TrajectoryDoc, WorkspaceDoc } from "./types.js";

export type Tool =
  | "select"
  | "drawDemo"
  | "placeSphere"
  | "placeBox"
  | "placeObject"
  | "markKeypoint"
  | "dragWhatIf";

export interface Selection {
  kind: "demo" | "constraint" | "object" | "keypoint" | "chain";
  id: string;
}

export interface OverlayToggles {
  demo: boolean;
  fitPreview: boolean;
  solved: boolean;
  violations: boolean;
  ghost: boolean;
}

/** A mutation bounced with 409: kept so the user can reload and replay it. */
export interface ConflictPrompt {
  message: string;
  staleRevision: number;
  replay: () => Promise<void>;
}

export interface Banner {
  level: "info" | "warn" | "error";
  text: string;
}

/**
 * Single source of truth for what the workbench is showing.  `revision`
 * always equals the last revision the server acknowledged; overlays hold raw
 * response documents and nothing derived locally.
 */
export class ViewState {
  workspaceId: string | null = null;
  revision = 0;
  doc: WorkspaceDoc | null = null;

  readonly camera = new Camera();
  sketchPlaneZ = 0.0;

  private activeTool: Tool = "select";
  selection: Selection | null = null;

  overlays: OverlayToggles = {
    demo: true,
    fitPreview: true,
    solved: true,
    violations: true,
    ghost: true,
  };

  // last responses, verbatim
  fitPreview: TrajectoryDoc | null = null;
  fitRmse: number | null = null;
  solvedRollout: TrajectoryDoc | null = null;
  solveReports: ReportDoc[] = [];
  solvedChainId: string | null = null;
  ghostRollout: TrajectoryDoc | null = null;

  conflict: ConflictPrompt | null = null;
  banner: Banner | null = null;

  get tool(): Tool {
    return this.activeTool;
  }

  /** Switching tools is atomic — there is never more than one active. */
  setTool(tool: Tool): void {
    this.activeTool = tool;
    if (tool !== "select") {
      this.selection = null;
    }
  }

  acknowledge(revision: number): void {
    if (revision < this.revision) {
      // a response can tie (reads) but never moves the UI backwards
      return;
    }
    this.revision = revision;
  }

  loadWorkspace(doc: WorkspaceDoc, revision: number): void {
    this.workspaceId = doc.id;
    this.doc = doc;
    this.revision = revision;
    this.conflict = null;
  }

  notice(level: Banner["level"], text: string): void {
    this.banner = { level, text };
  }

  clearBanner(): void {
    this.banner = null;
  }
}
