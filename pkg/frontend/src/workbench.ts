import { ApiClient, ApiError, type WhatIfRequest } from "./api.js";
import { snapToSample } from "./sketch.js";
import type {
  ConstraintDoc,
  DemoDoc,
  DemoSample,
  KeypointDoc,
  ObjectDoc,
  SolveResponse,
  WorkspaceDoc,
} from "./types.js";
import { sig4 } from "./format.js";
import type { ViewState } from "./view_state.js";

export interface ClearanceReadout {
  /** min of the rollout's clearance samples; null when nothing is constrained */
  minClearance: string | null;
  maxViolation: string;
  converged: boolean;
}

type CollectionPayload =
  | { kind: "demonstrations"; value: Record<string, DemoDoc> }
  | { kind: "constraints"; value: ConstraintDoc[] }
  | { kind: "objects"; value: Record<string, ObjectDoc> }
  | { kind: "keypoints"; value: Record<string, KeypointDoc[]> };

interface CollectionEdit {
  describe: string;
  build: (doc: WorkspaceDoc) => CollectionPayload;
}

/**
 * Glue between ViewState and the service.  Every method here boils down to a
 * request plus bookkeeping; no dynamics, no SDF math, no trajectory synthesis.
 *
 * Concurrency rules (all enforced here, not in the DOM layer):
 *  - at most one solve in flight; callers check `solvePending` to disable the button
 *  - what-if rollouts collapse to one in-flight request, latest drag wins
 *  - a 409 on any mutation parks the edit in `state.conflict` for reload+replay
 */
export class Workbench {
  private readonly api: ApiClient;
  readonly state: ViewState;

  private solveInFlight = false;
  private whatIfBusy = false;
  private whatIfPending: WhatIfRequest | null = null;
  private whatIfIdleResolvers: (() => void)[] = [];

  constructor(api: ApiClient, state: ViewState) {
    this.api = api;
    this.state = state;
  }

  get solvePending(): boolean {
    return this.solveInFlight;
  }

  private requireDoc(): WorkspaceDoc {
    if (!this.state.doc || !this.state.workspaceId) {
      throw new Error("no workspace open");
    }
    return this.state.doc;
  }

  async create(id: string): Promise<void> {
    await this.api.createWorkspace(id);
    await this.open(id);
  }

  async open(id: string): Promise<void> {
    const resp = await this.api.getWorkspace(id);
    this.state.loadWorkspace(resp.workspace, resp.revision);
  }

  async reload(): Promise<void> {
    const id = this.state.workspaceId;
    if (!id) {
      return;
    }
    const resp = await this.api.getWorkspace(id);
    this.state.loadWorkspace(resp.workspace, resp.revision);
  }

  // ---- mutations ---------------------------------------------------------

  private async commitEdit(edit: CollectionEdit): Promise<boolean> {
    const doc = this.requireDoc();
    const id = this.state.workspaceId!;
    const payload = edit.build(doc);
    const revision = this.state.revision;
    try {
      let resp: { revision: number };
      switch (payload.kind) {
        case "demonstrations":
          resp = await this.api.putDemonstrations(id, revision, payload.value);
          break;
        case "constraints":
          resp = await this.api.putConstraints(id, revision, payload.value);
          break;
        case "objects":
          resp = await this.api.putObjects(id, revision, payload.value);
          break;
        case "keypoints":
          resp = await this.api.putKeypoints(id, revision, payload.value);
          break;
      }
      this.state.acknowledge(resp.revision);
      // the server stored exactly what we sent, so the local doc can follow
      switch (payload.kind) {
        case "demonstrations":
          doc.demonstrations = payload.value;
          break;
        case "constraints":
          doc.constraints = payload.value;
          break;
        case "objects":
          doc.objects = payload.value;
          break;
        case "keypoints":
          doc.keypoints = payload.value;
          break;
      }
      this.state.conflict = null;
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.isConflict) {
        this.state.conflict = {
          message: `${edit.describe}: ${err.message}`,
          staleRevision: revision,
          replay: async () => {
            await this.reload();
            await this.commitEdit(edit);
          },
        };
        return false;
      }
      if (err instanceof ApiError) {
        this.state.notice("error", `${edit.describe}: ${err.message}`);
        return false;
      }
      throw err;
    }
  }

  /** User answer to the 409 prompt. */
  async resolveConflict(choice: "replay" | "discard"): Promise<void> {
    const conflict = this.state.conflict;
    if (!conflict) {
      return;
    }
    this.state.conflict = null;
    if (choice === "replay") {
      await conflict.replay();
    } else {
      await this.reload();
    }
  }

  /**
   * Store a finished sketch as a demonstration and kick the automatic fit
   * preview.  Returns false when the stroke was rejected server-side.
   */
  async addDemonstration(demoId: string, samples: DemoSample[], frame = "world"): Promise<boolean> {
    const demo: DemoDoc = { id: demoId, frame, samples };
    const ok = await this.commitEdit({
      describe: `add demonstration ${demoId}`,
      build: (doc) => ({
        kind: "demonstrations",
        value: { ...doc.demonstrations, [demoId]: demo },
      }),
    });
    if (ok) {
      await this.runFit(demoId);
    }
    return ok;
  }

  async upsertConstraint(region: ConstraintDoc): Promise<boolean> {
    return this.commitEdit({
      describe: `edit constraint ${region.id}`,
      build: (doc) => {
        const rest = doc.constraints.filter((c) => c.id !== region.id);
        return { kind: "constraints", value: [...rest, region] };
      },
    });
  }

  async removeConstraint(regionId: string): Promise<boolean> {
    return this.commitEdit({
      describe: `remove constraint ${regionId}`,
      build: (doc) => ({
        kind: "constraints",
        value: doc.constraints.filter((c) => c.id !== regionId),
      }),
    });
  }

  async placeObject(obj: ObjectDoc): Promise<boolean> {
    return this.commitEdit({
      describe: `place object ${obj.id}`,
      build: (doc) => ({ kind: "objects", value: { ...doc.objects, [obj.id]: obj } }),
    });
  }

  /** Keypoints snap to the nearest demo sample time before being stored. */
  async markKeypoint(demoId: string, t: number, label: string): Promise<number | null> {
    const doc = this.requireDoc();
    const demo = doc.demonstrations[demoId];
    if (!demo) {
      this.state.notice("error", `no demonstration ${demoId}`);
      return null;
    }
    const snapped = snapToSample(demo.samples.map((row) => row[0]!), t);
    const existing = doc.keypoints[demoId] ?? [];
    const ok = await this.commitEdit({
      describe: `mark keypoint on ${demoId}`,
      build: (d) => ({
        kind: "keypoints",
        value: {
          ...d.keypoints,
          [demoId]: [...existing, { time: snapped, label }].sort((a, b) => a.time - b.time),
        },
      }),
    });
    return ok ? snapped : null;
  }

  // ---- compute -----------------------------------------------------------

  async runFit(demoId: string): Promise<number | null> {
    const id = this.state.workspaceId;
    if (!id) {
      return null;
    }
    try {
      const resp = await this.api.fit(id, demoId);
      this.state.acknowledge(resp.revision);
      this.state.fitPreview = resp.rollout;
      this.state.fitRmse = resp.rmse;
      return resp.rmse;
    } catch (err) {
      if (err instanceof ApiError) {
        this.state.notice("error", `fit ${demoId}: ${err.message}`);
        return null;
      }
      throw err;
    }
  }

  async runSolve(
    demoId: string,
    opts: { chainId?: string; segment?: boolean } = {},
  ): Promise<SolveResponse | null> {
    if (this.solveInFlight) {
      return null;
    }
    const id = this.state.workspaceId;
    if (!id) {
      return null;
    }
    this.solveInFlight = true;
    try {
      const resp = await this.api.solve(id, {
        demo_id: demoId,
        revision: this.state.revision,
        chain_id: opts.chainId,
        segment: opts.segment ?? false,
      });
      this.state.acknowledge(resp.revision);
      this.state.solvedRollout = resp.rollout;
      this.state.solveReports = resp.reports;
      this.state.solvedChainId = resp.chain_id;
      const doc = this.requireDoc();
      doc.chains[resp.chain_id] = resp.chain;
      const failed = resp.reports.filter((r) => !r.converged);
      if (failed.length > 0) {
        const notes = failed.flatMap((r) => r.notes).join("; ");
        this.state.notice("warn", `solve did not converge (${failed.length} segment(s)): ${notes}`);
      } else {
        this.state.clearBanner();
      }
      return resp;
    } catch (err) {
      if (err instanceof ApiError && err.isConflict) {
        this.state.conflict = {
          message: `solve ${demoId}: ${err.message}`,
          staleRevision: this.state.revision,
          replay: async () => {
            await this.reload();
            await this.runSolve(demoId, opts);
          },
        };
        return null;
      }
      if (err instanceof ApiError) {
        // degenerate/infeasible problems land here; the report must be loud
        this.state.notice("error", `solve ${demoId} failed [${err.code}]: ${err.message}`);
        return null;
      }
      throw err;
    } finally {
      this.solveInFlight = false;
    }
  }

  /**
   * What-if rollout (ghost trajectory).  Never mutates the workspace; the
   * acknowledged revision is left alone on purpose, so revision equality
   * before/after is a meaningful check.
   */
  whatIf(req: WhatIfRequest): Promise<void> {
    this.whatIfPending = req;
    if (this.whatIfBusy) {
      return this.whatIfIdle();
    }
    this.whatIfBusy = true;
    const drain = async () => {
      try {
        while (this.whatIfPending) {
          const next = this.whatIfPending;
          this.whatIfPending = null;
          try {
            const resp = await this.api.whatIf(this.state.workspaceId!, next);
            this.state.ghostRollout = resp.rollout;
            if (resp.revision !== this.state.revision) {
              this.state.notice("warn", "workspace changed in another session");
            }
          } catch (err) {
            if (err instanceof ApiError) {
              this.state.notice("error", `what-if: ${err.message}`);
            } else {
              throw err;
            }
          }
        }
      } finally {
        this.whatIfBusy = false;
        const resolvers = this.whatIfIdleResolvers;
        this.whatIfIdleResolvers = [];
        for (const resolve of resolvers) {
          resolve();
        }
      }
    };
    return drain();
  }

  /** Resolves once no what-if request is in flight or queued. */
  whatIfIdle(): Promise<void> {
    if (!this.whatIfBusy) {
      return Promise.resolve();
    }
    return new Promise((resolve) => this.whatIfIdleResolvers.push(resolve));
  }

  dragObject(objectId: string, translation: [number, number, number]): Promise<void> {
    const doc = this.requireDoc();
    const obj = doc.objects[objectId];
    const chainId = this.state.solvedChainId;
    if (!obj || !chainId) {
      this.state.notice("error", "drag needs a placed object and a solved chain");
      return Promise.resolve();
    }
    return this.whatIf({
      chain_id: chainId,
      object_poses: { [objectId]: { rotation: obj.pose.rotation, translation } },
    });
  }

  // ---- readouts ----------------------------------------------------------

  clearanceReadout(): ClearanceReadout | null {
    const rollout = this.state.solvedRollout;
    const reports = this.state.solveReports;
    if (!rollout || reports.length === 0) {
      return null;
    }
    const sdf = rollout.min_sdf;
    const minClearance = sdf && sdf.length > 0 ? sig4(Math.min(...sdf)) : null;
    const maxViolation = sig4(Math.max(...reports.map((r) => r.max_violation)));
    return {
      minClearance,
      maxViolation,
      converged: reports.every((r) => r.converged),
    };
  }
}
