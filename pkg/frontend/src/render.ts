import type { Camera } from "./camera.js";
import type { ViewState } from "./view_state.js";
import type { ConstraintDoc, TrajectoryDoc, Vec3 } from "./types.js";

// Scene painting.  Everything drawn here comes out of a stored service
// response (or the workspace doc) — positions, clearances, violation flags.
// The structural Brush interface is satisfied by CanvasRenderingContext2D
// and by the recording stub the tests use.

export interface Brush {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

const DEMO_COLOR = "#8899aa";
const FIT_COLOR = "#4488dd";
const SOLVED_COLOR = "#22aa66";
const VIOLATION_COLOR = "#dd3344";
const GHOST_COLOR = "#bb77ee";
const CONSTRAINT_COLOR = "#cc8833";
const OBJECT_COLOR = "#557799";
const SKETCH_GRID_COLOR = "#e4e7ec";

function polyline(brush: Brush, camera: Camera, points: Vec3[], color: string, width = 1.5): void {
  if (points.length < 2) {
    return;
  }
  brush.strokeStyle = color;
  brush.lineWidth = width;
  brush.beginPath();
  const first = camera.worldToScreen(points[0]!);
  brush.moveTo(first.x, first.y);
  for (let i = 1; i < points.length; i++) {
    const s = camera.worldToScreen(points[i]!);
    brush.lineTo(s.x, s.y);
  }
  brush.stroke();
}

/**
 * Solved rollout with the per-sample clearance ramp: segments whose clearance
 * dips below zero are drawn in the violation color, everything else in the
 * solved color.  Clearance values come straight from the response.
 */
export function drawRollout(brush: Brush, camera: Camera, traj: TrajectoryDoc, baseColor: string): void {
  const sdf = traj.min_sdf;
  if (!sdf || sdf.length !== traj.positions.length) {
    polyline(brush, camera, traj.positions, baseColor, 2);
    return;
  }
  for (let i = 1; i < traj.positions.length; i++) {
    const violating = sdf[i]! < 0 || sdf[i - 1]! < 0;
    brush.strokeStyle = violating ? VIOLATION_COLOR : baseColor;
    brush.lineWidth = violating ? 3 : 2;
    brush.beginPath();
    const a = camera.worldToScreen(traj.positions[i - 1]!);
    const b = camera.worldToScreen(traj.positions[i]!);
    brush.moveTo(a.x, a.y);
    brush.lineTo(b.x, b.y);
    brush.stroke();
  }
}

function drawConstraint(brush: Brush, camera: Camera, region: ConstraintDoc): void {
  brush.strokeStyle = CONSTRAINT_COLOR;
  brush.lineWidth = 1;
  if (region.type === "sphere") {
    const c = camera.worldToScreen(region.center);
    brush.beginPath();
    brush.arc(c.x, c.y, region.radius * camera.zoom, 0, Math.PI * 2);
    brush.stroke();
    if (region.margin > 0) {
      brush.beginPath();
      brush.arc(c.x, c.y, (region.radius + region.margin) * camera.zoom, 0, Math.PI * 2);
      brush.stroke();
    }
    return;
  }
  // box: project the eight corners, trace the silhouette edges
  const he = region.half_extents;
  const t = region.pose.translation;
  const corners: Vec3[] = [];
  for (const sx of [-1, 1]) {
    for (const sy of [-1, 1]) {
      for (const sz of [-1, 1]) {
        corners.push([t[0] + sx * he[0], t[1] + sy * he[1], t[2] + sz * he[2]]);
      }
    }
  }
  const edges: [number, number][] = [
    [0, 1], [2, 3], [4, 5], [6, 7],
    [0, 2], [1, 3], [4, 6], [5, 7],
    [0, 4], [1, 5], [2, 6], [3, 7],
  ];
  for (const [a, b] of edges) {
    const pa = camera.worldToScreen(corners[a]!);
    const pb = camera.worldToScreen(corners[b]!);
    brush.beginPath();
    brush.moveTo(pa.x, pa.y);
    brush.lineTo(pb.x, pb.y);
    brush.stroke();
  }
}

export function drawScene(brush: Brush, state: ViewState): void {
  const camera = state.camera;
  brush.clearRect(0, 0, camera.viewportW, camera.viewportH);

  // sketch plane hint: a faint grid at the current plane height
  brush.strokeStyle = SKETCH_GRID_COLOR;
  brush.lineWidth = 1;
  for (let g = -1; g <= 3; g++) {
    const x0 = camera.worldToScreen([g * 0.5, -1.0, state.sketchPlaneZ]);
    const x1 = camera.worldToScreen([g * 0.5, 1.5, state.sketchPlaneZ]);
    brush.beginPath();
    brush.moveTo(x0.x, x0.y);
    brush.lineTo(x1.x, x1.y);
    brush.stroke();
    const y0 = camera.worldToScreen([-1.0, g * 0.5, state.sketchPlaneZ]);
    const y1 = camera.worldToScreen([2.0, g * 0.5, state.sketchPlaneZ]);
    brush.beginPath();
    brush.moveTo(y0.x, y0.y);
    brush.lineTo(y1.x, y1.y);
    brush.stroke();
  }

  const doc = state.doc;
  if (doc) {
    for (const region of doc.constraints) {
      drawConstraint(brush, camera, region);
    }
    for (const obj of Object.values(doc.objects)) {
      const c = camera.worldToScreen(obj.pose.translation);
      brush.strokeStyle = OBJECT_COLOR;
      brush.beginPath();
      brush.arc(c.x, c.y, Math.max(4, obj.display_extent[0] * camera.zoom), 0, Math.PI * 2);
      brush.stroke();
      brush.fillStyle = OBJECT_COLOR;
      brush.fillText(obj.id, c.x + 6, c.y - 6);
    }
    if (state.overlays.demo) {
      for (const demo of Object.values(doc.demonstrations)) {
        polyline(
          brush,
          camera,
          demo.samples.map((row) => [row[1]!, row[2]!, row[3]!] as Vec3),
          DEMO_COLOR,
        );
      }
    }
  }

  if (state.overlays.fitPreview && state.fitPreview) {
    polyline(brush, camera, state.fitPreview.positions, FIT_COLOR);
  }
  if (state.overlays.solved && state.solvedRollout) {
    drawRollout(brush, camera, state.solvedRollout, SOLVED_COLOR);
  }
  if (state.overlays.ghost && state.ghostRollout) {
    drawRollout(brush, camera, state.ghostRollout, GHOST_COLOR);
  }
}
