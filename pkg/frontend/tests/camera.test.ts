import { describe, expect, it } from "vitest";
import { Camera } from "../src/camera.js";
import type { Vec3 } from "../src/types.js";

describe("camera projection", () => {
  it("round-trips plane points in plan mode", () => {
    const cam = new Camera();
    cam.mode = "plan";
    const world: Vec3 = [0.73, -0.21, 0.05];
    const s = cam.worldToScreen(world);
    const back = cam.screenToPlane(s.x, s.y, 0.05);
    expect(back).not.toBeNull();
    expect(back![0]).toBeCloseTo(world[0], 10);
    expect(back![1]).toBeCloseTo(world[1], 10);
    expect(back![2]).toBeCloseTo(world[2], 10);
  });

  it("round-trips plane points in orbit mode", () => {
    const cam = new Camera();
    cam.mode = "orbit";
    cam.yawRad = 0.7;
    cam.pitchRad = -0.9;
    const world: Vec3 = [0.2, 0.4, -0.08];
    const s = cam.worldToScreen(world);
    const back = cam.screenToPlane(s.x, s.y, -0.08);
    expect(back![0]).toBeCloseTo(world[0], 9);
    expect(back![1]).toBeCloseTo(world[1], 9);
    expect(back![2]).toBeCloseTo(world[2], 9);
  });

  it("plan mode maps world x/y to screen axes top-down", () => {
    const cam = new Camera();
    cam.mode = "plan";
    const origin = cam.worldToScreen([cam.target[0], cam.target[1], 0]);
    const east = cam.worldToScreen([cam.target[0] + 0.1, cam.target[1], 0]);
    const north = cam.worldToScreen([cam.target[0], cam.target[1] + 0.1, 0]);
    expect(east.x).toBeGreaterThan(origin.x);
    expect(east.y).toBeCloseTo(origin.y, 10);
    expect(north.y).toBeLessThan(origin.y); // screen y grows downward
    expect(north.x).toBeCloseTo(origin.x, 10);
    // height is pure depth in plan view: no screen motion
    const up = cam.worldToScreen([cam.target[0], cam.target[1], 0.3]);
    expect(up.x).toBeCloseTo(origin.x, 10);
    expect(up.y).toBeCloseTo(origin.y, 10);
  });

  it("returns null when the sketch plane is seen edge-on", () => {
    const cam = new Camera();
    cam.mode = "orbit";
    cam.pitchRad = -Math.PI / 2; // looking horizontally, plane edge-on
    expect(cam.screenToPlane(450, 320, 0)).toBeNull();
  });

  it("orbit clamp keeps the plane sketchable", () => {
    const cam = new Camera();
    cam.mode = "orbit";
    cam.orbitBy(0, -10); // try to slam pitch past the limit
    expect(cam.screenToPlane(450, 320, 0)).not.toBeNull();
    cam.orbitBy(0, 10);
    expect(cam.screenToPlane(450, 320, 0)).not.toBeNull();
  });

  it("mode toggle preserves orbit parameters", () => {
    const cam = new Camera();
    cam.mode = "orbit";
    cam.yawRad = 1.1;
    cam.pitchRad = -0.6;
    cam.mode = "plan";
    const plan = cam.worldToScreen([0.6, 0.1, 0.0]);
    cam.mode = "orbit";
    const orbit = cam.worldToScreen([0.6, 0.1, 0.0]);
    expect(cam.yawRad).toBe(1.1);
    expect(cam.pitchRad).toBe(-0.6);
    expect(plan.x === orbit.x && plan.y === orbit.y).toBe(false);
  });
});
