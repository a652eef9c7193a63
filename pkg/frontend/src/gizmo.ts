import type { BoxDoc, ConstraintDoc, SphereDoc, Vec3 } from "./types.js";

// Drag-handle edits for constraint volumes.  Every function returns a fresh
// doc ready for a collection PUT; the originals are never mutated, so a
// rejected round trip leaves the local state untouched.

export const MIN_RADIUS = 0.005;
export const MIN_HALF_EXTENT = 0.005;
export const MIN_MARGIN = 0.0;

export interface GizmoEdit<T extends ConstraintDoc> {
  doc: T;
  /** set when the drag asked for an impossible shape and the value was clamped */
  clamped?: string;
}

export function makeSphere(id: string, center: Vec3, radius: number, margin = 0.0): SphereDoc {
  return {
    id,
    type: "sphere",
    margin,
    center: [...center] as Vec3,
    radius: Math.max(MIN_RADIUS, radius),
  };
}

export function moveSphere(doc: SphereDoc, center: Vec3): GizmoEdit<SphereDoc> {
  return { doc: { ...doc, center: [...center] as Vec3 } };
}

/** Radius handle: distance from center to the dragged handle position. */
export function resizeSphere(doc: SphereDoc, handleWorld: Vec3): GizmoEdit<SphereDoc> {
  const dx = handleWorld[0] - doc.center[0];
  const dy = handleWorld[1] - doc.center[1];
  const dz = handleWorld[2] - doc.center[2];
  const r = Math.sqrt(dx * dx + dy * dy + dz * dz);
  if (r < MIN_RADIUS) {
    return {
      doc: { ...doc, radius: MIN_RADIUS },
      clamped: `radius clamped to ${MIN_RADIUS} m`,
    };
  }
  return { doc: { ...doc, radius: r } };
}

export function moveBox(doc: BoxDoc, translation: Vec3): GizmoEdit<BoxDoc> {
  return { doc: { ...doc, pose: { ...doc.pose, translation: [...translation] as Vec3 } } };
}

export function resizeBox(doc: BoxDoc, axis: 0 | 1 | 2, halfExtent: number): GizmoEdit<BoxDoc> {
  const he = [...doc.half_extents] as Vec3;
  if (halfExtent < MIN_HALF_EXTENT) {
    he[axis] = MIN_HALF_EXTENT;
    return {
      doc: { ...doc, half_extents: he },
      clamped: `half extent clamped to ${MIN_HALF_EXTENT} m`,
    };
  }
  he[axis] = halfExtent;
  return { doc: { ...doc, half_extents: he } };
}

/** Margin comes from a numeric field, so it can arrive as any garbage. */
export function setMargin<T extends ConstraintDoc>(doc: T, margin: number): GizmoEdit<T> {
  if (!Number.isFinite(margin) || margin < MIN_MARGIN) {
    return { doc: { ...doc, margin: MIN_MARGIN }, clamped: "margin clamped to 0" };
  }
  return { doc: { ...doc, margin } };
}
