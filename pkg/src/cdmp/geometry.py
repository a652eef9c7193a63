"""Rigid transforms and signed distance fields for constraint regions.

Conventions
-----------
* Quaternions are ``(w, x, y, z)``, unit norm, renormalized on construction.
  Construction fails if the norm is zero or non-finite; after construction
  ``|norm - 1| < 1e-9`` always holds.
* Poses map points from a local frame into the world:
  ``p_world = R(q) @ p_local + t``.
* Signed distances are negative inside a shape, zero on its surface and
  positive outside.  Gradients are unit vectors pointing away from the
  shape; on interior ridges where several faces are equidistant the first
  achieving component (lowest axis index) wins, and at a sphere's exact
  center the gradient is defined as ``+x``.  These tie-breaks make the
  fields deterministic everywhere, which downstream solvers rely on.
* ``margin`` inflates a region only when distances are aggregated over a
  set of regions (:func:`min_sdf`); the raw ``sdf`` of a shape is the true
  geometric distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .common import as_vec3, dataclass_eq, check_identifier
from .errors import InvalidGeometryError

_ZERO_NORM_EPSILON = 1e-12


@dataclass(frozen=True)
class UnitQuat:
    """Unit quaternion ``(w, x, y, z)`` representing a 3-D rotation."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        vals = (float(self.w), float(self.x), float(self.y), float(self.z))
        if not all(math.isfinite(v) for v in vals):
            raise InvalidGeometryError(f"quaternion components must be finite: {vals}")
        norm = math.sqrt(sum(v * v for v in vals))
        if norm < _ZERO_NORM_EPSILON:
            raise InvalidGeometryError("cannot normalize a zero quaternion")
        w, x, y, z = (v / norm for v in vals)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @staticmethod
    def identity() -> "UnitQuat":
        return UnitQuat(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis, angle: float) -> "UnitQuat":
        ax = as_vec3(axis, "axis")
        n = float(np.linalg.norm(ax))
        if n < _ZERO_NORM_EPSILON:
            raise InvalidGeometryError("rotation axis must be nonzero")
        half = 0.5 * float(angle)
        s = math.sin(half) / n
        return UnitQuat(math.cos(half), ax[0] * s, ax[1] * s, ax[2] * s)

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def conjugate(self) -> "UnitQuat":
        return UnitQuat(self.w, -self.x, -self.y, -self.z)

    def multiply(self, other: "UnitQuat") -> "UnitQuat":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return UnitQuat(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def rotation_matrix(self) -> np.ndarray:
        """3x3 rotation matrix equivalent of this quaternion."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def rotate(self, v) -> np.ndarray:
        """Rotate one point (3,) or a batch (m, 3)."""
        arr = np.asarray(v, dtype=np.float64)
        return arr @ self.rotation_matrix().T

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: rotation followed by translation."""

    rotation: UnitQuat
    translation: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "translation", as_vec3(self.translation, "translation"))

    @staticmethod
    def identity() -> "Pose":
        return Pose(UnitQuat.identity(), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        """``self ∘ other``: apply ``other`` first, then ``self``."""
        return Pose(
            self.rotation.multiply(other.rotation),
            self.rotation.rotate(other.translation) + self.translation,
        )

    def invert(self) -> "Pose":
        inv_rot = self.rotation.conjugate()
        return Pose(inv_rot, -inv_rot.rotate(self.translation))

    def transform_point(self, p) -> np.ndarray:
        """Map a point (3,) or batch (m, 3) from local to world coordinates."""
        arr = np.asarray(p, dtype=np.float64)
        return self.rotation.rotate(arr) + self.translation

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float

    kind = "sphere"

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", as_vec3(self.center, "center"))
        r = float(self.radius)
        if not math.isfinite(r) or r <= 0.0:
            raise InvalidGeometryError(f"sphere radius must be positive, got {r}")
        object.__setattr__(self, "radius", r)

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Box:
    """Oriented box; ``half_extents`` are half side lengths along local axes."""

    pose: Pose
    half_extents: np.ndarray

    kind = "box"

    def __post_init__(self) -> None:
        he = as_vec3(self.half_extents, "half_extents")
        if np.any(he <= 0.0):
            raise InvalidGeometryError(
                f"box half extents must be positive, got {he.tolist()}"
            )
        object.__setattr__(self, "half_extents", he)

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


Shape = Sphere | Box


@dataclass(frozen=True, eq=False)
class ConstraintRegion:
    """A keep-out shape plus a safety margin used during aggregation."""

    id: str
    shape: Shape
    margin: float = 0.0

    def __post_init__(self) -> None:
        check_identifier(self.id, "constraint id")
        m = float(self.margin)
        if not math.isfinite(m) or m < 0.0:
            raise InvalidGeometryError(f"margin must be non-negative, got {m}")
        object.__setattr__(self, "margin", m)

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


def _sphere_sdf(shape: Sphere, p: np.ndarray) -> np.ndarray:
    return np.linalg.norm(p - shape.center, axis=-1) - shape.radius


def _box_local(shape: Box, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rot = shape.pose.rotation.rotation_matrix()
    local = (p - shape.pose.translation) @ rot  # == R^T (p - t) per row
    q = np.abs(local) - shape.half_extents
    return local, q


def _box_sdf(shape: Box, p: np.ndarray) -> np.ndarray:
    _, q = _box_local(shape, p)
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(np.max(q, axis=-1), 0.0)
    return outside + inside


def sdf(region: ConstraintRegion, p) -> float | np.ndarray:
    """Signed distance from point(s) ``p`` to the region's shape.

    Accepts a single point (3,) or a batch (m, 3); returns a scalar or an
    (m,) array accordingly.  The margin is *not* applied here.
    """
    arr = np.asarray(p, dtype=np.float64)
    single = arr.ndim == 1
    pts = arr[None, :] if single else arr
    if isinstance(region.shape, Sphere):
        vals = _sphere_sdf(region.shape, pts)
    else:
        vals = _box_sdf(region.shape, pts)
    return float(vals[0]) if single else vals


def sdf_gradient(region: ConstraintRegion, p) -> np.ndarray:
    """Unit gradient of the signed distance, away from the shape.

    Deterministic everywhere: ties on interior ridges go to the lowest
    axis index, and the gradient at a sphere's center is ``+x``.
    """
    arr = np.asarray(p, dtype=np.float64)
    single = arr.ndim == 1
    pts = arr[None, :] if single else arr
    if isinstance(region.shape, Sphere):
        diff = pts - region.shape.center
        norms = np.linalg.norm(diff, axis=-1)
        grads = np.zeros_like(diff)
        ok = norms > _ZERO_NORM_EPSILON
        grads[ok] = diff[ok] / norms[ok, None]
        grads[~ok] = (1.0, 0.0, 0.0)
    else:
        shape = region.shape
        local, q = _box_local(shape, pts)
        signs = np.where(local >= 0.0, 1.0, -1.0)
        pos = np.maximum(q, 0.0)
        out_norm = np.linalg.norm(pos, axis=-1)
        grads_local = np.zeros_like(pts)
        outside = out_norm > 0.0
        grads_local[outside] = signs[outside] * pos[outside] / out_norm[outside, None]
        # Inside: distance decreases fastest toward the nearest face, i.e.
        # along the axis with the largest (least negative) q component.
        inside_idx = np.flatnonzero(~outside)
        if inside_idx.size:
            nearest_axis = np.argmax(q[inside_idx], axis=-1)  # first max wins
            grads_local[inside_idx, nearest_axis] = signs[inside_idx, nearest_axis]
        rot = shape.pose.rotation.rotation_matrix()
        grads = grads_local @ rot.T
    return grads[0] if single else grads


def min_sdf(regions, p) -> tuple[float, str]:
    """Smallest margin-adjusted distance over ``regions`` at point ``p``.

    Returns ``(value, region_id)``; ties go to the region listed first.
    """
    regions = list(regions)
    if not regions:
        raise InvalidGeometryError("min_sdf needs at least one region")
    pt = as_vec3(p, "point")
    best_val = math.inf
    best_id = regions[0].id
    for region in regions:
        val = float(sdf(region, pt)) - region.margin
        if val < best_val:
            best_val = val
            best_id = region.id
    return best_val, best_id


def min_sdf_profile(regions, points: np.ndarray) -> tuple[np.ndarray, list[str | None]]:
    """Vectorized :func:`min_sdf` over an (m, 3) batch of points."""
    pts = np.asarray(points, dtype=np.float64)
    m = pts.shape[0]
    regions = list(regions)
    if not regions:
        return np.full(m, math.inf), [None] * m
    vals = np.stack([sdf(r, pts) - r.margin for r in regions], axis=0)
    idx = np.argmin(vals, axis=0)  # first achieving region wins ties
    ids: list[str | None] = [regions[i].id for i in idx]
    return vals[idx, np.arange(m)], ids


def transform_region(transform: Pose, region: ConstraintRegion) -> ConstraintRegion:
    """Rigidly move a constraint region by ``transform``."""
    shape = region.shape
    if isinstance(shape, Sphere):
        moved: Shape = Sphere(transform.transform_point(shape.center), shape.radius)
    else:
        moved = Box(transform.compose(shape.pose), shape.half_extents)
    return ConstraintRegion(region.id, moved, region.margin)
