import { describe, expect, it } from "vitest";
import { drawRollout, drawScene, type Brush } from "../src/render.js";
import { ViewState } from "../src/view_state.js";
import type { TrajectoryDoc, Vec3, WorkspaceDoc } from "../src/types.js";

// Recording brush: keeps every stroked segment with the style it was drawn
// in, so tests can check *what* was rendered, not pixels.

interface Stroked {
  style: string;
  points: { x: number; y: number }[];
}

class Recorder implements Brush {
  strokeStyle: string | CanvasGradient | CanvasPattern = "#000";
  fillStyle: string | CanvasGradient | CanvasPattern = "#000";
  lineWidth = 1;
  strokes: Stroked[] = [];
  texts: string[] = [];
  private current: { x: number; y: number }[] = [];

  beginPath(): void {
    this.current = [];
  }
  moveTo(x: number, y: number): void {
    this.current.push({ x, y });
  }
  lineTo(x: number, y: number): void {
    this.current.push({ x, y });
  }
  arc(x: number, y: number, _r: number, _a0: number, _a1: number): void {
    this.current.push({ x, y });
  }
  stroke(): void {
    this.strokes.push({ style: String(this.strokeStyle), points: [...this.current] });
  }
  fill(): void {}
  clearRect(): void {
    this.strokes = [];
    this.texts = [];
  }
  fillText(text: string): void {
    this.texts.push(text);
  }
}

// A rollout as the service would return it: 6 samples, clearance dipping
// negative exactly at index 3.
const rolloutFixture: TrajectoryDoc = {
  dt: 0.01,
  tau: 1.0,
  frame: "world",
  times: [0, 0.01, 0.02, 0.03, 0.04, 0.05],
  positions: [
    [0.0, 0.0, 0.0],
    [0.1, 0.0, 0.0],
    [0.2, 0.05, 0.0],
    [0.3, 0.08, 0.0],
    [0.4, 0.05, 0.0],
    [0.5, 0.0, 0.0],
  ],
  velocities: [
    [1, 0, 0],
    [1, 0, 0],
    [1, 0, 0],
    [1, 0, 0],
    [1, 0, 0],
    [1, 0, 0],
  ],
  min_sdf: [0.2, 0.1, 0.02, -0.015, 0.03, 0.2],
  violating_region: ["", "", "", "ball", "", ""],
};

function docFixture(): WorkspaceDoc {
  return {
    schema_version: 1,
    id: "bench",
    demonstrations: {
      line: {
        id: "line",
        frame: "world",
        samples: [
          [0, 0, 0, 0],
          [1, 0.5, 0, 0],
          [2, 1, 0, 0],
        ],
      },
    },
    constraints: [
      { id: "ball", type: "sphere", margin: 0.02, center: [0.3, 0.05, 0], radius: 0.1 },
    ],
    objects: {
      cup: {
        id: "cup",
        pose: { rotation: [1, 0, 0, 0], translation: [1, 0, 0] },
        display_extent: [0.05, 0.05, 0.05],
      },
    },
    keypoints: {},
    chains: {},
    default_params: { fit: {}, solve: {} },
  };
}

describe("rollout rendering", () => {
  it("paints exactly the negative-clearance segments in the violation color", () => {
    const state = new ViewState();
    const brush = new Recorder();
    drawRollout(brush, state.camera, rolloutFixture, "#22aa66");
    expect(brush.strokes.length).toBe(5); // one per sample pair
    const violating = brush.strokes
      .map((s, i) => ({ i, s }))
      .filter(({ s }) => s.style === "#dd3344")
      .map(({ i }) => i);
    // clearance < 0 at sample 3 touches the segments 2-3 and 3-4
    expect(violating).toEqual([2, 3]);
  });

  it("renders positions straight from the document", () => {
    const state = new ViewState();
    state.camera.mode = "plan";
    const brush = new Recorder();
    drawRollout(brush, state.camera, rolloutFixture, "#22aa66");
    const drawn = brush.strokes.flatMap((s) => s.points);
    for (const [i, pos] of rolloutFixture.positions.entries()) {
      const expected = state.camera.worldToScreen(pos as Vec3);
      const hit = drawn.some(
        (p) => Math.abs(p.x - expected.x) < 1e-9 && Math.abs(p.y - expected.y) < 1e-9,
      );
      expect(hit, `sample ${i} missing from render`).toBe(true);
    }
  });

  it("a rollout without clearance data renders as one plain polyline", () => {
    const bare: TrajectoryDoc = { ...rolloutFixture, min_sdf: undefined, violating_region: undefined };
    const brush = new Recorder();
    drawRollout(brush, new ViewState().camera, bare, "#22aa66");
    expect(brush.strokes.length).toBe(1);
    expect(brush.strokes[0]!.style).toBe("#22aa66");
    expect(brush.strokes[0]!.points.length).toBe(bare.positions.length);
  });
});

describe("scene rendering from recorded responses", () => {
  it("draws demo, overlays, constraints and objects when toggled on", () => {
    const state = new ViewState();
    state.loadWorkspace(docFixture(), 1);
    state.fitPreview = { ...rolloutFixture, min_sdf: undefined, violating_region: undefined };
    state.solvedRollout = rolloutFixture;
    state.ghostRollout = { ...rolloutFixture, min_sdf: undefined, violating_region: undefined };
    const brush = new Recorder();
    drawScene(brush, state);
    const styles = new Set(brush.strokes.map((s) => s.style));
    expect(styles.has("#8899aa")).toBe(true); // demo
    expect(styles.has("#4488dd")).toBe(true); // fit preview
    expect(styles.has("#22aa66")).toBe(true); // solved
    expect(styles.has("#dd3344")).toBe(true); // violation ramp
    expect(styles.has("#bb77ee")).toBe(true); // ghost
    expect(styles.has("#cc8833")).toBe(true); // constraint
    expect(brush.texts).toContain("cup"); // object label
  });

  it("overlay toggles suppress their layers", () => {
    const state = new ViewState();
    state.loadWorkspace(docFixture(), 1);
    state.solvedRollout = rolloutFixture;
    state.ghostRollout = rolloutFixture;
    state.overlays.solved = false;
    state.overlays.ghost = false;
    state.overlays.demo = false;
    const brush = new Recorder();
    drawScene(brush, state);
    const styles = new Set(brush.strokes.map((s) => s.style));
    expect(styles.has("#22aa66")).toBe(false);
    expect(styles.has("#bb77ee")).toBe(false);
    expect(styles.has("#8899aa")).toBe(false);
    expect(styles.has("#cc8833")).toBe(true); // constraints always visible
  });

  it("sphere constraints draw the margin shell as a second circle", () => {
    const state = new ViewState();
    state.loadWorkspace(docFixture(), 1);
    const brush = new Recorder();
    drawScene(brush, state);
    const constraintStrokes = brush.strokes.filter((s) => s.style === "#cc8833");
    expect(constraintStrokes.length).toBe(2); // body + inflated margin
  });
});
