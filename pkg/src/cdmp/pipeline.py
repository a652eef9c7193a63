"""Shared orchestration between the CLI and the HTTP service.

Both front ends call into these functions so that fitting, solving and
what-if rollouts produce bit-identical numbers no matter which door they
came through.  Everything here is a pure function of a Workspace value
plus explicit options.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .common import format_float
from .dmp import Dmp, FitOptions, Trajectory, fit_lwr, rollout
from .errors import InvalidGeometryError, NotFoundError
from .geometry import Pose, min_sdf_profile
from .skills import (
    WORLD_FRAME,
    SkillChain,
    fit_chain,
    frame_object_id,
    object_frame,
    repose_constraints,
    rollout_chain,
    segment as segment_demo,
)
from .solver import SolveOptions
from .workspace import Workspace

# A segment whose goal lies within this distance of an object's origin is
# taught relative to that object, so later object moves re-aim the goal.
FRAME_SNAP_RADIUS = 0.05

CSV_HEADER = "t,x,y,z,vx,vy,vz,min_sdf,violating_region"


@dataclass(frozen=True)
class FitSummary:
    demo_id: str
    dmp: Dmp
    trajectory: Trajectory
    rmse: float


@dataclass(frozen=True)
class RolloutResult:
    trajectory: Trajectory
    min_sdf: np.ndarray
    violating: tuple[str | None, ...]
    constraints: tuple


def merge_fit_options(base: FitOptions, **overrides) -> FitOptions:
    fields = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(base, **fields) if fields else base


def merge_solve_options(base: SolveOptions, **overrides) -> SolveOptions:
    fields = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(base, **fields) if fields else base


def fit_summary(ws: Workspace, demo_id: str, fit_opts: FitOptions | None = None) -> FitSummary:
    """Fit one demonstration and measure how well the rollout reproduces it."""
    demo = ws.demonstration(demo_id)
    opts = fit_opts or ws.default_params.fit
    dmp = fit_lwr(demo, opts.n_basis, opts.gains, opts.gate_forcing, opts.smooth_window)
    dt = ws.default_params.solve.dt
    traj = rollout(dmp, None, dt=dt, horizon=dmp.duration)
    rel = demo.times - demo.times[0]
    interp = np.column_stack(
        [np.interp(rel, traj.times, traj.positions[:, d]) for d in range(3)]
    )
    rmse = float(np.sqrt(np.mean(np.sum((interp - demo.positions) ** 2, axis=1))))
    return FitSummary(demo_id=demo_id, dmp=dmp, trajectory=traj, rmse=rmse)


def assign_frames(ws: Workspace, segments) -> list[str]:
    """Pick a frame per segment: the object whose origin its goal touches.

    Goals within FRAME_SNAP_RADIUS of an object origin become object-frame
    (closest object wins, ties broken by id order); everything else stays
    in the world frame.
    """
    frames = []
    ordered = sorted(ws.objects.items())
    for demo in segments:
        goal = demo.positions[-1]
        best: tuple[float, str] | None = None
        for obj_id, obj in ordered:
            dist = float(np.linalg.norm(goal - obj.pose.translation))
            if dist <= FRAME_SNAP_RADIUS and (best is None or dist < best[0]):
                best = (dist, obj_id)
        frames.append(object_frame(best[1]) if best else WORLD_FRAME)
    return frames


def solve_demo(
    ws: Workspace,
    demo_id: str,
    *,
    use_keypoints: bool = False,
    chain_id: str | None = None,
    fit_opts: FitOptions | None = None,
    solve_opts: SolveOptions | None = None,
) -> tuple[Workspace, SkillChain]:
    """Fit + solve a demonstration into a skill chain stored on the workspace.

    With ``use_keypoints`` the stored keypoints split the demonstration
    first; otherwise the whole demonstration becomes a single segment.
    """
    demo = ws.demonstration(demo_id)
    fit_opts = fit_opts or ws.default_params.fit
    solve_opts = solve_opts or ws.default_params.solve
    if use_keypoints:
        kps = ws.keypoints.get(demo_id, ())
        parts = segment_demo(demo, kps) if kps else [demo]
    else:
        parts = [demo]
    chain = fit_chain(
        chain_id or demo_id,
        parts,
        assign_frames(ws, parts),
        ws.constraints,
        ws.objects,
        fit_opts=fit_opts,
        solve_opts=solve_opts,
    )
    return ws.upsert_chain(chain), chain


def what_if_rollout(
    ws: Workspace,
    chain_id: str,
    *,
    start=None,
    object_poses: dict[str, Pose] | None = None,
    goal_overrides: dict[int, np.ndarray] | None = None,
    constraints_follow_object: tuple[str, ...] = (),
    dt: float | None = None,
) -> RolloutResult:
    """Roll a stored chain under hypothetical object poses, without mutating.

    ``constraints_follow_object`` names objects whose rigid motion drags the
    workspace constraint regions along (off by default — safety zones belong
    to the workspace, not the payload).
    """
    chain = ws.chain(chain_id)
    for obj_id in object_poses or {}:
        if obj_id not in ws.objects:
            raise NotFoundError(f"no object {obj_id!r}")
    # Teach-time poses fill in for any object the caller leaves alone.
    poses = {obj_id: obj.pose for obj_id, obj in ws.objects.items()}
    poses.update(object_poses or {})
    regions = list(ws.constraints)
    for obj_id in constraints_follow_object:
        if obj_id not in ws.objects:
            raise NotFoundError(f"no object {obj_id!r}")
        if object_poses and obj_id in object_poses:
            regions = repose_constraints(
                regions, obj_id, ws.objects[obj_id].pose, object_poses[obj_id]
            )
    if start is None:
        first = chain.segments[0]
        frame_id = frame_object_id(first.frame)
        if frame_id is not None:
            pose = poses.get(frame_id, ws.objects[frame_id].pose)
        else:
            pose = Pose.identity()
        start = pose.transform_point(first.start_in_frame)
    step = dt if dt is not None else ws.default_params.solve.dt
    traj = rollout_chain(chain, start, object_poses=poses, dt=step, goal_overrides=goal_overrides)
    vals, ids = min_sdf_profile(regions, traj.positions)
    violating = tuple(rid if v < 0 else None for v, rid in zip(vals, ids))
    return RolloutResult(
        trajectory=traj, min_sdf=vals, violating=violating, constraints=tuple(regions)
    )


def trajectory_csv(traj: Trajectory, result: RolloutResult | None = None) -> str:
    """Render a trajectory as CSV text (17 significant digits).

    The two constraint columns stay empty when no regions were supplied.
    """
    has_regions = result is not None and len(result.constraints) > 0
    vel = traj.velocities()
    lines = [CSV_HEADER]
    for i in range(len(traj)):
        cells = [format_float(traj.times[i])]
        cells += [format_float(v) for v in traj.positions[i]]
        cells += [format_float(v) for v in vel[i]]
        if has_regions:
            cells.append(format_float(result.min_sdf[i]))
            cells.append(result.violating[i] or "")
        else:
            cells += ["", ""]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def chain_csv(ws: Workspace, chain_id: str, **what_if) -> str:
    """What-if rollout rendered to CSV — the single exporter both front
    ends share."""
    result = what_if_rollout(ws, chain_id, **what_if)
    return trajectory_csv(result.trajectory, result)


def verify_chain(ws: Workspace, chain_id: str, fine_dt: float) -> RolloutResult:
    """Re-roll a chain on a fine grid at teach poses for a safety check."""
    if fine_dt <= 0:
        raise InvalidGeometryError(f"fine_dt must be positive, got {fine_dt}")
    return what_if_rollout(ws, chain_id, dt=fine_dt)
