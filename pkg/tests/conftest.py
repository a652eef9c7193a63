"""Shared fixtures.

The solver fixtures are session-scoped because a constrained solve costs a
second or two; everything they return is immutable, so sharing is safe.
"""

from __future__ import annotations

import numpy as np
import pytest

from cdmp import (
    ConstraintRegion,
    Keypoint,
    Pose,
    SceneObject,
    Sphere,
    UnitQuat,
    Workspace,
    fit_lwr,
    solve,
)
from cdmp.geometry import Box
from cdmp.synth import line_demo, peg_corner_time, peg_insert_demo


def sphere_at(region_id, center, radius, margin=0.0):
    return ConstraintRegion(region_id, Sphere(np.asarray(center, dtype=float), radius), margin)


def box_at(region_id, center, half_extents, margin=0.0, rotation=None):
    pose = Pose(rotation or UnitQuat.identity(), np.asarray(center, dtype=float))
    return ConstraintRegion(region_id, Box(pose, np.asarray(half_extents, dtype=float)), margin)


@pytest.fixture(scope="session")
def unit_line_demo():
    """Minimum-jerk straight line (0,0,0) -> (1,0,0), 2 s at 10 ms."""
    return line_demo()


@pytest.fixture(scope="session")
def unit_line_dmp(unit_line_demo):
    return fit_lwr(unit_line_demo, n=30)


@pytest.fixture(scope="session")
def blocking_sphere():
    return sphere_at("ball", (0.5, 0.0, 0.0), 0.15, margin=0.02)


@pytest.fixture(scope="session")
def blocking_box():
    return box_at("crate", (0.5, 0.0, 0.0), (0.15, 0.15, 0.15), margin=0.02)


@pytest.fixture(scope="session")
def sphere_solution(unit_line_dmp, blocking_sphere):
    return solve(unit_line_dmp, [blocking_sphere])


@pytest.fixture(scope="session")
def box_solution(unit_line_dmp, blocking_box):
    return solve(unit_line_dmp, [blocking_box])


@pytest.fixture(scope="session")
def peg_demo():
    return peg_insert_demo()


@pytest.fixture(scope="session")
def peg_keypoint():
    return Keypoint(peg_corner_time(2.0), "corner")


@pytest.fixture(scope="session")
def hole_object(peg_demo):
    return SceneObject(
        "hole",
        Pose(UnitQuat.identity(), peg_demo.positions[-1]),
        display_extent=(0.05, 0.05, 0.02),
    )


@pytest.fixture()
def empty_workspace():
    return Workspace(id="bench")
