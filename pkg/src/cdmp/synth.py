"""Synthetic demonstrations for fixtures, examples, and the CLI.

All generators produce minimum-jerk time profiles (zero velocity and
acceleration at the endpoints), the standard smooth point-to-point motion
model, so fitted primitives face realistic but noise-free input.
"""

from __future__ import annotations

import numpy as np

from .common import as_vec3
from .dmp import Demonstration
from .errors import InvalidGeometryError

SYNTH_KINDS = ("minjerk-line", "arc", "peg-insert")


def min_jerk_profile(u: np.ndarray) -> np.ndarray:
    """Normalized minimum-jerk position profile on u in [0, 1]."""
    return 10.0 * u**3 - 15.0 * u**4 + 6.0 * u**5


def line_demo(
    demo_id: str = "line",
    start=(0.0, 0.0, 0.0),
    end=(1.0, 0.0, 0.0),
    duration: float = 2.0,
    dt: float = 0.01,
) -> Demonstration:
    """Straight minimum-jerk reach from ``start`` to ``end``."""
    p0 = as_vec3(start, "start")
    p1 = as_vec3(end, "end")
    times, shape = _profile_grid(duration, dt)
    positions = p0 + shape[:, None] * (p1 - p0)
    return Demonstration(demo_id, "world", times, positions)


def arc_demo(
    demo_id: str = "arc",
    start=(0.0, 0.0, 0.0),
    end=(1.0, 0.0, 0.0),
    bulge: float = 0.5,
    duration: float = 2.0,
    dt: float = 0.01,
) -> Demonstration:
    """Planar arc from ``start`` to ``end`` bulging ``bulge`` meters in +y.

    The path is a half-sine lateral offset over a straight chord, traversed
    with a minimum-jerk profile along the chord parameter.
    """
    p0 = as_vec3(start, "start")
    p1 = as_vec3(end, "end")
    times, shape = _profile_grid(duration, dt)
    positions = p0 + shape[:, None] * (p1 - p0)
    positions = positions.copy()
    positions[:, 1] += bulge * np.sin(np.pi * shape)
    return Demonstration(demo_id, "world", times, positions)


def peg_insert_demo(
    demo_id: str = "peg",
    hole_center=(0.4, 0.0, 0.0),
    approach_height: float = 0.15,
    approach_from=(0.0, 0.0, 0.15),
    duration: float = 2.0,
    dt: float = 0.01,
) -> Demonstration:
    """L-shaped insertion: horizontal approach, then vertical descent.

    The first leg travels at ``approach_height`` above the hole plane to the
    point directly over the hole; the second leg descends into it.  Each leg
    is minimum-jerk (momentarily at rest at the corner), which is exactly the
    natural place to split the motion with a keypoint.
    """
    hole = as_vec3(hole_center, "hole_center")
    start = as_vec3(approach_from, "approach_from")
    if approach_height <= 0:
        raise InvalidGeometryError("approach_height must be positive")
    corner = np.array([hole[0], hole[1], hole[2] + approach_height])
    t_split = 0.6 * duration  # approach is the longer leg
    t1, s1 = _profile_grid(t_split, dt)
    t2, s2 = _profile_grid(duration - t_split, dt)
    leg1 = start + s1[:, None] * (corner - start)
    leg2 = corner + s2[:, None] * (hole - corner)
    times = np.concatenate([t1, t_split + t2[1:]])
    positions = np.concatenate([leg1, leg2[1:]], axis=0)
    return Demonstration(demo_id, "world", times, positions)


def peg_corner_time(duration: float = 2.0) -> float:
    """Time of the approach/descent corner in :func:`peg_insert_demo`."""
    return 0.6 * duration


def make_demo(kind: str, demo_id: str | None = None, duration: float = 2.0, dt: float = 0.01) -> Demonstration:
    """Dispatch used by the CLI's demo-synth subcommand."""
    if kind == "minjerk-line":
        return line_demo(demo_id or "line", duration=duration, dt=dt)
    if kind == "arc":
        return arc_demo(demo_id or "arc", duration=duration, dt=dt)
    if kind == "peg-insert":
        return peg_insert_demo(demo_id or "peg", duration=duration, dt=dt)
    raise InvalidGeometryError(f"unknown demo kind {kind!r}; expected one of {SYNTH_KINDS}")


def _profile_grid(duration: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    if duration <= 0 or dt <= 0:
        raise InvalidGeometryError("duration and dt must be positive")
    steps = max(int(round(duration / dt)), 4)
    times = np.linspace(0.0, duration, steps + 1)
    return times, min_jerk_profile(times / duration)
