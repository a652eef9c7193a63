"""Segmenting demonstrations at keypoints, per-segment solving, chaining.

A demonstration split at user-marked keypoints yields one sub-demonstration
per span; each is fitted and constraint-solved independently and the
results are chained.  Segments may be expressed in the world frame or in an
object-attached frame: the latter stores start/goal in the object's local
coordinates at teach time, so moving the object later re-targets the
segment (``g_world = object_pose * goal_in_frame``) without refitting.

Chained rollouts hand over state between segments: position continuity is
exact (the next segment starts from the previous final position) and the
physical end velocity carries over by rescaling the z state for the next
segment's timescale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .common import as_vec3, dataclass_eq, check_identifier
from .dmp import Demonstration, FitOptions, Trajectory, fit_lwr, rollout
from .errors import (
    CdmpError,
    DanglingReferenceError,
    InvalidDemonstrationError,
    InvalidGeometryError,
)
from .geometry import ConstraintRegion, Pose, transform_region
from .solver import Cdmp, SolveOptions, solve

WORLD_FRAME = "world"
_OBJECT_PREFIX = "object:"
MIN_KEYPOINT_GAP = 0.1  # seconds
MIN_SEGMENT_SAMPLES = 5
DEFAULT_HORIZON_FACTOR = 1.25


def object_frame(object_id: str) -> str:
    check_identifier(object_id, "object id")
    return _OBJECT_PREFIX + object_id


def frame_object_id(frame: str) -> str | None:
    """The object id of an object frame, or None for the world frame."""
    if frame == WORLD_FRAME:
        return None
    if frame.startswith(_OBJECT_PREFIX) and len(frame) > len(_OBJECT_PREFIX):
        return frame[len(_OBJECT_PREFIX) :]
    raise InvalidGeometryError(
        f"frame must be 'world' or 'object:<id>', got {frame!r}"
    )


@dataclass(frozen=True)
class Keypoint:
    """A user-marked instant splitting a demonstration into skill segments."""

    time: float
    label: str = ""

    def __post_init__(self) -> None:
        t = float(self.time)
        if not math.isfinite(t):
            raise InvalidGeometryError("keypoint time must be finite")
        object.__setattr__(self, "time", t)
        if not isinstance(self.label, str):
            raise InvalidGeometryError("keypoint label must be a string")


def validate_keypoints(demo: Demonstration, keypoints) -> list[Keypoint]:
    kps = list(keypoints)
    t0, t1 = float(demo.times[0]), float(demo.times[-1])
    prev = None
    for kp in kps:
        if not (t0 < kp.time < t1):
            raise InvalidGeometryError(
                f"keypoint at t={kp.time} lies outside the open span "
                f"({t0}, {t1}) of demonstration {demo.id!r}"
            )
        if prev is not None:
            if kp.time <= prev:
                raise InvalidGeometryError("keypoint times must strictly increase")
            if kp.time - prev < MIN_KEYPOINT_GAP:
                raise InvalidGeometryError(
                    f"keypoints must be >= {MIN_KEYPOINT_GAP} s apart"
                )
        prev = kp.time
    return kps


@dataclass(frozen=True, eq=False)
class SceneObject:
    """A named frame in the scene; the extent is for display only."""

    id: str
    pose: Pose
    display_extent: np.ndarray

    def __post_init__(self) -> None:
        check_identifier(self.id, "object id")
        object.__setattr__(
            self, "display_extent", as_vec3(self.display_extent, "display_extent")
        )

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class SkillSegment:
    """One constrained primitive with its start/goal in a reference frame."""

    cdmp: Cdmp
    frame: str
    start_in_frame: np.ndarray
    goal_in_frame: np.ndarray

    def __post_init__(self) -> None:
        frame_object_id(self.frame)  # validates the syntax
        object.__setattr__(self, "start_in_frame", as_vec3(self.start_in_frame, "start"))
        object.__setattr__(self, "goal_in_frame", as_vec3(self.goal_in_frame, "goal"))

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class SkillChain:
    id: str
    segments: tuple[SkillSegment, ...]

    def __post_init__(self) -> None:
        check_identifier(self.id, "chain id")
        segs = tuple(self.segments)
        if not segs:
            raise InvalidGeometryError("a skill chain needs at least one segment")
        object.__setattr__(self, "segments", segs)

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


def segment(demo: Demonstration, keypoints) -> list[Demonstration]:
    """Split at the samples nearest each keypoint; boundaries are shared.

    Each boundary sample ends one sub-demonstration and starts the next, and
    every sub-demonstration's timestamps are rebased to start at zero.
    """
    kps = validate_keypoints(demo, keypoints)
    cuts = [0]
    for kp in kps:
        cuts.append(int(np.argmin(np.abs(demo.times - kp.time))))
    cuts.append(len(demo) - 1)
    out = []
    for i in range(len(cuts) - 1):
        lo, hi = cuts[i], cuts[i + 1]
        if hi - lo + 1 < MIN_SEGMENT_SAMPLES:
            raise InvalidDemonstrationError(
                f"segment {i} of demonstration {demo.id!r} has only "
                f"{hi - lo + 1} samples (need >= {MIN_SEGMENT_SAMPLES})"
            )
        times = demo.times[lo : hi + 1] - demo.times[lo]
        orients = None if demo.orientations is None else demo.orientations[lo : hi + 1]
        out.append(
            Demonstration(
                f"{demo.id}#{i}", demo.frame, times, demo.positions[lo : hi + 1], orients
            )
        )
    return out


def _resolve_teach_pose(frame: str, objects: dict[str, SceneObject]) -> Pose:
    obj_id = frame_object_id(frame)
    if obj_id is None:
        return Pose.identity()
    if obj_id not in objects:
        raise DanglingReferenceError(f"frame references unknown object {obj_id!r}")
    return objects[obj_id].pose


def fit_chain(
    chain_id: str,
    segments: list[Demonstration],
    frames: list[str],
    constraints,
    objects,
    fit_opts: FitOptions | None = None,
    solve_opts: SolveOptions | None = None,
    per_segment_constraints: list | None = None,
) -> SkillChain:
    """Fit and solve each sub-demonstration, recording frame-local endpoints.

    ``constraints`` applies to every segment unless an entry of
    ``per_segment_constraints`` overrides it (None entries fall back).
    """
    if len(frames) != len(segments):
        raise InvalidGeometryError(
            f"got {len(segments)} segments but {len(frames)} frames"
        )
    if per_segment_constraints is not None and len(per_segment_constraints) != len(segments):
        raise InvalidGeometryError("per-segment constraint list length mismatch")
    fit_opts = fit_opts or FitOptions()
    object_map = _as_object_map(objects)
    built = []
    prev_goal_world: np.ndarray | None = None
    for i, (demo, frame) in enumerate(zip(segments, frames)):
        teach_pose = _resolve_teach_pose(frame, object_map)
        start_world = demo.positions[0]
        goal_world = demo.positions[-1]
        if prev_goal_world is not None and not np.allclose(
            start_world, prev_goal_world, atol=1e-9, rtol=0.0
        ):
            raise InvalidDemonstrationError(
                f"segment {i} starts at {start_world.tolist()} but the previous "
                f"segment ends at {prev_goal_world.tolist()}"
            )
        prev_goal_world = goal_world
        regions = constraints
        if per_segment_constraints is not None and per_segment_constraints[i] is not None:
            regions = per_segment_constraints[i]
        try:
            dmp = fit_lwr(
                demo,
                fit_opts.n_basis,
                fit_opts.gains,
                fit_opts.gate_forcing,
                fit_opts.smooth_window,
            )
            cdmp = solve(dmp, regions, solve_opts)
        except CdmpError as err:
            raise type(err)(f"segment {i}: {err}") from err
        inv = teach_pose.invert()
        built.append(
            SkillSegment(
                cdmp=cdmp,
                frame=frame,
                start_in_frame=inv.transform_point(start_world),
                goal_in_frame=inv.transform_point(goal_world),
            )
        )
    return SkillChain(chain_id, tuple(built))


def reparameterize_goal(seg: SkillSegment, new_pose: Pose) -> np.ndarray:
    """World-frame goal of an object-frame segment under a new object pose."""
    if frame_object_id(seg.frame) is None:
        raise InvalidGeometryError(
            "goal reparameterization applies to object-frame segments only"
        )
    return new_pose.transform_point(seg.goal_in_frame)


def resolve_goal(seg: SkillSegment, object_poses: dict[str, Pose]) -> np.ndarray:
    obj_id = frame_object_id(seg.frame)
    if obj_id is None:
        return np.asarray(seg.goal_in_frame)
    if obj_id not in object_poses:
        raise DanglingReferenceError(
            f"rollout needs a pose for object {obj_id!r} referenced by a segment"
        )
    return object_poses[obj_id].transform_point(seg.goal_in_frame)


def rollout_chain(
    chain: SkillChain,
    start,
    object_poses: dict[str, Pose] | None = None,
    dt: float = 0.01,
    horizons: list[float] | None = None,
    goal_overrides: dict[int, np.ndarray] | None = None,
) -> Trajectory:
    """Roll the chain segment by segment, handing over position and velocity.

    The concatenated trajectory has continuous timestamps and physical
    velocities in its z column (``tau = 1``).  ``goal_overrides`` maps a
    segment index to a world-frame goal replacing the frame-resolved one.
    """
    poses = dict(object_poses or {})
    overrides = dict(goal_overrides or {})
    if horizons is not None and len(horizons) != len(chain.segments):
        raise InvalidGeometryError("need one horizon per segment")
    y_current = as_vec3(start, "start")
    z_carry: np.ndarray | None = None
    prev_tau: float | None = None
    times_parts: list[np.ndarray] = []
    pos_parts: list[np.ndarray] = []
    vel_parts: list[np.ndarray] = []
    t_offset = 0.0
    for i, seg in enumerate(chain.segments):
        dmp = seg.cdmp.dmp
        goal = overrides.get(i)
        if goal is None:
            goal = resolve_goal(seg, poses)
        else:
            goal = as_vec3(goal, f"goal override {i}")
        horizon = horizons[i] if horizons is not None else DEFAULT_HORIZON_FACTOR * dmp.duration
        z0 = None
        if z_carry is not None and prev_tau is not None:
            z0 = z_carry * (dmp.canonical.tau / prev_tau)
        traj = rollout(
            dmp,
            seg.cdmp.zeta,
            y0=y_current,
            g=goal,
            z0=z0,
            dt=dt,
            horizon=horizon,
        )
        y_current = traj.positions[-1]
        z_carry = traj.scaled_velocities[-1]
        prev_tau = dmp.canonical.tau
        drop = 1 if times_parts else 0
        times_parts.append(t_offset + traj.times[drop:])
        pos_parts.append(traj.positions[drop:])
        vel_parts.append(traj.velocities()[drop:])
        t_offset += float(traj.times[-1])
    return Trajectory(
        dt=dt,
        frame=WORLD_FRAME,
        times=np.concatenate(times_parts),
        positions=np.concatenate(pos_parts, axis=0),
        scaled_velocities=np.concatenate(vel_parts, axis=0),
        tau=1.0,
    )


def repose_constraints(
    constraints,
    object_id: str,
    teach_pose: Pose,
    new_pose: Pose,
) -> list[ConstraintRegion]:
    """Rigidly carry constraint regions along with an object's pose change.

    Supports the what-if mode where safety volumes are attached to a moved
    object; the transform applied is ``new_pose * invert(teach_pose)``.
    """
    check_identifier(object_id, "object id")
    motion = new_pose.compose(teach_pose.invert())
    return [transform_region(motion, region) for region in constraints]


def _as_object_map(objects) -> dict[str, SceneObject]:
    if isinstance(objects, dict):
        return dict(objects)
    out: dict[str, SceneObject] = {}
    for obj in objects or []:
        out[obj.id] = obj
    return out
