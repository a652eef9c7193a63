import { describe, expect, it } from "vitest";
import {
  MIN_HALF_EXTENT,
  MIN_RADIUS,
  makeSphere,
  moveBox,
  moveSphere,
  resizeBox,
  resizeSphere,
  setMargin,
} from "../src/gizmo.js";
import type { BoxDoc } from "../src/types.js";

const box: BoxDoc = {
  id: "crate",
  type: "box",
  margin: 0.02,
  pose: { rotation: [1, 0, 0, 0], translation: [0.4, 0.1, 0.0] },
  half_extents: [0.1, 0.1, 0.1],
};

describe("sphere gizmo", () => {
  it("radius handle sets radius to the handle distance", () => {
    const sphere = makeSphere("ball", [0.5, 0.0, 0.0], 0.1);
    const edit = resizeSphere(sphere, [0.5, 0.25, 0.0]);
    expect(edit.doc.radius).toBeCloseTo(0.25, 12);
    expect(edit.clamped).toBeUndefined();
    // original untouched
    expect(sphere.radius).toBe(0.1);
  });

  it("dragging the handle into the center clamps with a warning", () => {
    const sphere = makeSphere("ball", [0.5, 0.0, 0.0], 0.1);
    const edit = resizeSphere(sphere, [0.5, 0.0, 0.0]);
    expect(edit.doc.radius).toBe(MIN_RADIUS);
    expect(edit.clamped).toContain("clamped");
  });

  it("move keeps radius and margin", () => {
    const sphere = makeSphere("ball", [0.5, 0.0, 0.0], 0.12, 0.03);
    const edit = moveSphere(sphere, [0.7, -0.1, 0.2]);
    expect(edit.doc.center).toEqual([0.7, -0.1, 0.2]);
    expect(edit.doc.radius).toBe(0.12);
    expect(edit.doc.margin).toBe(0.03);
  });
});

describe("box gizmo", () => {
  it("extent handle edits a single axis", () => {
    const edit = resizeBox(box, 2, 0.3);
    expect(edit.doc.half_extents).toEqual([0.1, 0.1, 0.3]);
    expect(box.half_extents).toEqual([0.1, 0.1, 0.1]);
  });

  it("collapsing an axis clamps instead of inverting", () => {
    const edit = resizeBox(box, 0, -0.05);
    expect(edit.doc.half_extents[0]).toBe(MIN_HALF_EXTENT);
    expect(edit.clamped).toBeDefined();
  });

  it("move changes only the translation", () => {
    const edit = moveBox(box, [1.0, 1.0, 1.0]);
    expect(edit.doc.pose.translation).toEqual([1.0, 1.0, 1.0]);
    expect(edit.doc.pose.rotation).toEqual([1, 0, 0, 0]);
    expect(edit.doc.half_extents).toEqual(box.half_extents);
  });
});

describe("margin field", () => {
  it("accepts a sane value", () => {
    const sphere = makeSphere("ball", [0, 0, 0], 0.1);
    expect(setMargin(sphere, 0.02).doc.margin).toBe(0.02);
  });

  it("clamps negatives and non-numbers to zero with a warning", () => {
    const sphere = makeSphere("ball", [0, 0, 0], 0.1);
    for (const bad of [-0.5, NaN, Infinity]) {
      const edit = setMargin(sphere, bad);
      expect(edit.doc.margin).toBe(0);
      expect(edit.clamped).toBeDefined();
    }
  });
});
