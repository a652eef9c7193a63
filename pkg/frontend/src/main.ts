import { ApiClient } from "./api.js";
import { drawScene } from "./render.js";
import { MIN_DEMO_SAMPLES, SketchCapture } from "./sketch.js";
import { makeSphere } from "./gizmo.js";
import { meters, sig4 } from "./format.js";
import { ViewState, type Tool } from "./view_state.js";
import { Workbench } from "./workbench.js";

// DOM bootstrap — the only module that touches document/window.  Everything
// it does is: translate input events into Workbench/ViewState calls, then
// repaint and refresh the inspector.

const SERVICE_URL =
  new URLSearchParams(window.location.search).get("service") ?? "http://127.0.0.1:8823";
const PLANE_STEP = 0.02; // meters per keypress while sketching

const state = new ViewState();
const bench = new Workbench(new ApiClient(SERVICE_URL), state);
const sketch = new SketchCapture();

const canvas = document.getElementById("scene") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const inspector = document.getElementById("inspector") as HTMLElement;
const bannerEl = document.getElementById("banner") as HTMLElement;
const solveBtn = document.getElementById("solveBtn") as HTMLButtonElement;

state.camera.viewportW = canvas.width;
state.camera.viewportH = canvas.height;

let demoCounter = 0;
let sphereCounter = 0;
let activeDemoId: string | null = null;

function repaint(): void {
  drawScene(ctx, state);
  refreshInspector();
}

function refreshInspector(): void {
  const lines: string[] = [];
  lines.push(`workspace: ${state.workspaceId ?? "—"} @ r${state.revision}`);
  lines.push(`tool: ${state.tool}  plane z: ${meters(state.sketchPlaneZ)}`);
  if (state.fitRmse !== null) {
    lines.push(`fit rmse: ${meters(state.fitRmse)}`);
  }
  const readout = bench.clearanceReadout();
  if (readout) {
    lines.push(
      `solve: ${readout.converged ? "converged" : "NOT CONVERGED"}` +
        `  max violation: ${readout.maxViolation}` +
        (readout.minClearance !== null ? `  min clearance: ${readout.minClearance}` : ""),
    );
  }
  for (const report of state.solveReports) {
    lines.push(
      `  segment: iters=${report.iterations} objective=${sig4(report.objective)}` +
        (report.notes.length ? ` (${report.notes.join("; ")})` : ""),
    );
  }
  inspector.textContent = lines.join("\n");

  if (state.conflict) {
    bannerEl.className = "banner conflict";
    bannerEl.innerHTML = "";
    bannerEl.append(`Edit conflicts with a newer revision: ${state.conflict.message} `);
    const replay = document.createElement("button");
    replay.textContent = "Reload & replay";
    replay.onclick = () => void bench.resolveConflict("replay").then(repaint);
    const discard = document.createElement("button");
    discard.textContent = "Discard my edit";
    discard.onclick = () => void bench.resolveConflict("discard").then(repaint);
    bannerEl.append(replay, discard);
  } else if (state.banner) {
    bannerEl.className = `banner ${state.banner.level}`;
    bannerEl.textContent = state.banner.text;
  } else {
    bannerEl.className = "banner hidden";
    bannerEl.textContent = "";
  }

  solveBtn.disabled = bench.solvePending || activeDemoId === null;
}

// ---- pointer input -------------------------------------------------------

canvas.addEventListener("pointerdown", (ev) => {
  canvas.setPointerCapture(ev.pointerId);
  if (state.tool === "drawDemo") {
    sketch.begin(state.camera, ev.offsetX, ev.offsetY, state.sketchPlaneZ, ev.timeStamp);
  } else if (state.tool === "placeSphere") {
    const world = state.camera.screenToPlane(ev.offsetX, ev.offsetY, state.sketchPlaneZ);
    if (world) {
      const region = makeSphere(`sphere${sphereCounter++}`, world, 0.1, 0.02);
      void bench.upsertConstraint(region).then(repaint);
    }
  }
});

canvas.addEventListener("pointermove", (ev) => {
  if (state.tool === "drawDemo" && sketch.active) {
    sketch.extend(state.camera, ev.offsetX, ev.offsetY, state.sketchPlaneZ, ev.timeStamp);
    repaint();
  } else if (state.tool === "select" && ev.buttons === 1 && state.camera.mode === "orbit") {
    state.camera.orbitBy(ev.movementX * 0.01, -ev.movementY * 0.01);
    repaint();
  }
});

canvas.addEventListener("pointerup", () => {
  if (state.tool !== "drawDemo" || !sketch.active) {
    return;
  }
  const result = sketch.end();
  if (result.discarded) {
    state.notice("warn", result.reason ?? `need at least ${MIN_DEMO_SAMPLES} samples`);
    repaint();
    return;
  }
  const demoId = `sketch${demoCounter++}`;
  activeDemoId = demoId;
  void bench.addDemonstration(demoId, result.samples).then(repaint);
});

// ---- keyboard ------------------------------------------------------------

window.addEventListener("keydown", (ev) => {
  if (ev.key === "[") {
    state.sketchPlaneZ -= PLANE_STEP;
  } else if (ev.key === "]") {
    state.sketchPlaneZ += PLANE_STEP;
  } else if (ev.key === "p") {
    state.camera.mode = state.camera.mode === "plan" ? "orbit" : "plan";
  } else {
    return;
  }
  repaint();
});

// ---- toolbar -------------------------------------------------------------

for (const tool of ["select", "drawDemo", "placeSphere"] as Tool[]) {
  const btn = document.getElementById(`tool-${tool}`);
  btn?.addEventListener("click", () => {
    state.setTool(tool);
    repaint();
  });
}

solveBtn.addEventListener("click", () => {
  if (activeDemoId === null) {
    return;
  }
  repaint(); // pick up the disabled state immediately
  void bench.runSolve(activeDemoId, { chainId: activeDemoId }).then(repaint);
});

// ---- boot ----------------------------------------------------------------

const wsId = new URLSearchParams(window.location.search).get("workspace") ?? "bench";
void bench
  .open(wsId)
  .catch(() => bench.create(wsId))
  .then(repaint)
  .catch((err) => {
    state.notice("error", `cannot reach service at ${SERVICE_URL}: ${err}`);
    repaint();
  });
