"""Influence structure, augmented-Lagrangian gradients, and constrained solves."""

import numpy as np
import pytest

from cdmp import (
    Cdmp,
    DegenerateProblemError,
    InvalidGeometryError,
    SolveOptions,
    SolveReport,
    evaluate_violations,
    fit_lwr,
    influence_matrix,
    rollout,
    solve,
    verify,
)
from cdmp.dmp import Trajectory
from cdmp.solver import _AugmentedLagrangian
from cdmp.synth import line_demo

from conftest import box_at, sphere_at

FEAS_TOL = SolveOptions().feasibility_tol


def collocation_model(dmp, regions, dt=0.01, horizon=2.5, stride=2):
    nominal = rollout(dmp, None, dt=dt, horizon=horizon)
    steps = len(nominal) - 1
    idx = sorted(set(range(0, steps + 1, stride)) | {steps})
    grid = nominal.times[idx]
    phis = influence_matrix(dmp, grid, dt=dt, horizon=horizon)
    return _AugmentedLagrangian(nominal.positions[idx], phis, list(regions)), nominal, idx


# ---------------------------------------------------------------------------
# affine sensitivity structure


def test_influence_zero_perturbation_is_nominal(unit_line_dmp):
    dmp = unit_line_dmp
    nominal = rollout(dmp, None, dt=0.01, horizon=2.5)
    grid = nominal.times[::2]
    phis = influence_matrix(dmp, grid, dt=0.01, horizon=2.5)
    recon = nominal.positions[::2].copy()
    for d in range(3):
        recon[:, d] -= phis[d] @ np.zeros(dmp.basis.n)
    assert np.array_equal(recon, nominal.positions[::2])


def test_influence_columns_match_unit_rollouts(unit_line_dmp):
    dmp = unit_line_dmp
    n = dmp.basis.n
    nominal = rollout(dmp, None, dt=0.01, horizon=2.5)
    grid = nominal.times
    phis = influence_matrix(dmp, grid, dt=0.01, horizon=2.5)
    for d, k in ((0, 0), (0, 15), (1, 7), (2, 29), (1, 22), (2, 3)):
        zeta = np.zeros((3, n))
        zeta[d, k] = 1.0
        direct = rollout(dmp, zeta, dt=0.01, horizon=2.5)
        recon = nominal.positions[:, d] - phis[d][:, k]
        assert np.max(np.abs(recon - direct.positions[:, d])) < 1e-12


def test_affine_reconstruction_of_random_perturbations(unit_line_dmp):
    dmp = unit_line_dmp
    n = dmp.basis.n
    rng = np.random.default_rng(77)
    nominal = rollout(dmp, None, dt=0.01, horizon=2.5)
    phis = influence_matrix(dmp, nominal.times, dt=0.01, horizon=2.5)
    worst = 0.0
    for _ in range(100):
        zeta = rng.normal(size=(3, n))
        zeta *= rng.uniform(0.1, 10.0) / np.linalg.norm(zeta)
        recon = nominal.positions.copy()
        for d in range(3):
            recon[:, d] -= phis[d] @ zeta[d]
        direct = rollout(dmp, zeta, dt=0.01, horizon=2.5)
        worst = max(worst, float(np.max(np.abs(recon - direct.positions))))
    assert worst < 1e-8


def test_influence_grid_validation(unit_line_dmp):
    with pytest.raises(InvalidGeometryError):
        influence_matrix(unit_line_dmp, [0.0, 0.0153], dt=0.01, horizon=2.5)
    with pytest.raises(InvalidGeometryError):
        influence_matrix(unit_line_dmp, [0.0, 3.0], dt=0.01, horizon=2.5)


# ---------------------------------------------------------------------------
# augmented-Lagrangian gradient


def test_analytic_gradient_matches_central_differences(unit_line_dmp, blocking_sphere):
    model, _, _ = collocation_model(unit_line_dmp, [blocking_sphere])
    n = unit_line_dmp.basis.n
    rng = np.random.default_rng(2024)
    step = 1e-6
    for _ in range(20):
        zeta = rng.normal(size=(3, n)) * rng.uniform(5.0, 60.0)
        lam = rng.uniform(0.0, 2.0, size=(model.r, model.m))
        rho = 10.0 ** rng.uniform(0.0, 4.0)
        analytic = model.gradient(zeta, lam, rho)
        fd = np.zeros_like(analytic)
        for d in range(3):
            for k in range(n):
                probe = zeta.copy()
                probe[d, k] += step
                up = model.value(probe, lam, rho)
                probe[d, k] -= 2 * step
                down = model.value(probe, lam, rho)
                fd[d, k] = (up - down) / (2 * step)
        scale = max(float(np.max(np.abs(analytic))), 1e-8)
        rel = float(np.max(np.abs(fd - analytic))) / scale
        assert rel < 1e-5


# ---------------------------------------------------------------------------
# violation evaluation


def test_evaluate_violations_outside_and_empty(unit_line_dmp):
    traj = rollout(unit_line_dmp, dt=0.01)
    far = sphere_at("far", (0.5, 5.0, 0.0), 0.2)
    assert evaluate_violations(traj, [far]) == []
    assert evaluate_violations(traj, []) == []


def test_evaluate_violations_line_through_sphere_center():
    dt, speed = 0.01, 0.5
    times = np.arange(201) * dt
    positions = np.zeros((201, 3))
    positions[:, 0] = speed * times
    vel = np.zeros((201, 3))
    vel[:, 0] = speed
    traj = Trajectory(dt=dt, frame="world", times=times, positions=positions,
                      scaled_velocities=vel, tau=1.0)
    region = sphere_at("mid", (0.5, 0.0, 0.0), 0.1)
    hits = evaluate_violations(traj, [region])
    assert hits, "line through the sphere must report violations"
    assert all(rid == "mid" and v > 0 for _, rid, v in hits)
    ts = [t for t, _, _ in hits]
    assert ts == sorted(ts)
    deepest = max(v for _, _, v in hits)
    assert abs(deepest - 0.1) <= dt * speed + 1e-12


# ---------------------------------------------------------------------------
# solve


def test_solve_without_constraints_is_identity(unit_line_dmp):
    cdmp = solve(unit_line_dmp, [])
    assert np.all(cdmp.zeta == 0.0)
    assert cdmp.report.converged
    assert cdmp.report.objective == 0.0
    assert cdmp.report.max_violation == 0.0


def test_solve_keeps_zero_when_nominal_already_clear(unit_line_dmp):
    aside = sphere_at("aside", (0.5, 0.5, 0.0), 0.15, margin=0.02)
    cdmp = solve(unit_line_dmp, [aside])
    assert cdmp.report.converged
    assert float(np.max(np.abs(cdmp.zeta))) < 1e-8


def test_solve_line_through_sphere(sphere_solution):
    r = sphere_solution.report
    assert r.converged
    assert r.objective > 0.0
    assert r.max_violation <= FEAS_TOL
    fine = verify(sphere_solution, sphere_solution.dt / 8.0)
    assert fine.fine_check_violation <= FEAS_TOL
    assert np.linalg.norm(
        rollout(sphere_solution.dmp, sphere_solution.zeta, dt=0.01,
                horizon=sphere_solution.horizon).positions[-1]
        - sphere_solution.dmp.goal()
    ) < 0.01


def test_solve_line_through_box(box_solution):
    r = box_solution.report
    assert r.converged
    assert r.objective > 0.0
    fine = verify(box_solution, box_solution.dt / 8.0)
    assert fine.fine_check_violation <= FEAS_TOL


def test_solve_rejects_goal_inside_region(unit_line_dmp):
    trap = sphere_at("trap", (1.0, 0.0, 0.0), 0.1, margin=0.02)
    with pytest.raises(DegenerateProblemError, match="goal"):
        solve(unit_line_dmp, [trap])
    trap0 = sphere_at("trap0", (0.0, 0.0, 0.0), 0.1)
    with pytest.raises(DegenerateProblemError, match="start"):
        solve(unit_line_dmp, [trap0])


def test_solve_reports_monotone_progress(sphere_solution, box_solution):
    # Violations only ever increase when the collocation grid is refined,
    # which happens exclusively from an already-feasible iterate (the finer
    # measurement reveals inter-sample dips; the iterate itself is unchanged).
    for cdmp in (sphere_solution, box_solution):
        h = cdmp.report.violation_history
        assert len(h) == cdmp.report.iterations
        assert h[0] == max(h)
        for i in range(len(h) - 1):
            if h[i + 1] > h[i]:
                assert h[i] <= FEAS_TOL, (
                    f"violation rose from an infeasible iterate at step {i}: "
                    f"{h[i]:.3e} -> {h[i + 1]:.3e}"
                )
        assert h[-1] <= FEAS_TOL


def test_solve_determinism(unit_line_dmp, blocking_sphere, sphere_solution):
    again = solve(unit_line_dmp, [blocking_sphere])
    assert np.array_equal(again.zeta, sphere_solution.zeta)
    assert again.report.iterations == sphere_solution.report.iterations
    assert again.report.violation_history == sphere_solution.report.violation_history
    assert again.report.objective == sphere_solution.report.objective


def test_bigger_obstacle_needs_bigger_perturbation(unit_line_dmp, sphere_solution):
    norms = []
    for radius in (0.075, 0.3):
        region = sphere_at("ball", (0.5, 0.0, 0.0), radius, margin=0.02)
        cdmp = solve(unit_line_dmp, [region])
        assert cdmp.report.converged
        norms.append(float(np.linalg.norm(cdmp.zeta)))
    mid = float(np.linalg.norm(sphere_solution.zeta))
    assert norms[0] <= mid <= norms[1]


def test_converged_solutions_pass_fine_verification(sphere_solution, box_solution):
    for cdmp in (sphere_solution, box_solution):
        assert cdmp.report.converged
        checked = verify(cdmp, cdmp.dt / 4.0)
        assert checked.fine_check_violation <= FEAS_TOL


def test_ungated_forcing_solves_both_fixtures(blocking_sphere, blocking_box):
    dmp = fit_lwr(line_demo(), n=30, gate_forcing=False)
    for region in (blocking_sphere, blocking_box):
        cdmp = solve(dmp, [region])
        assert cdmp.report.converged
        assert verify(cdmp, cdmp.dt / 4.0).fine_check_violation <= FEAS_TOL


def test_solve_budget_exhaustion_returns_best_effort(unit_line_dmp, blocking_sphere):
    cdmp = solve(unit_line_dmp, [blocking_sphere], SolveOptions(time_budget=1e-9))
    assert not cdmp.report.converged
    assert "time budget exhausted" in cdmp.report.notes
    assert cdmp.zeta.shape == (3, unit_line_dmp.basis.n)


def test_solve_iteration_exhaustion_returns_best_effort(unit_line_dmp, blocking_sphere):
    opts = SolveOptions(max_outer_iterations=1, max_inner_iterations=2)
    cdmp = solve(unit_line_dmp, [blocking_sphere], opts)
    assert not cdmp.report.converged
    assert cdmp.report.max_violation > FEAS_TOL
    assert any("no feasible solution" in note for note in cdmp.report.notes)


def test_solve_options_validation():
    with pytest.raises(InvalidGeometryError):
        SolveOptions(dt=-0.01)
    with pytest.raises(InvalidGeometryError):
        SolveOptions(feasibility_tol=0.0)
    with pytest.raises(InvalidGeometryError):
        SolveOptions(collocation_dt=-1.0)
    with pytest.raises(InvalidGeometryError):
        SolveOptions(time_budget=float("nan"))


# ---------------------------------------------------------------------------
# verification


def test_verify_zero_perturbation_no_constraints(unit_line_dmp):
    cdmp = solve(unit_line_dmp, [])
    checked = verify(cdmp, 0.00125)
    assert checked.fine_check_violation == 0.0


def test_verify_rejects_coarser_grid(sphere_solution):
    with pytest.raises(InvalidGeometryError):
        verify(sphere_solution, sphere_solution.dt * 2.0)


def test_verify_catches_thin_wall_missed_by_coarse_sampling(unit_line_dmp):
    dmp = unit_line_dmp
    thin = box_at("wall", (0.43, 0.0, 0.0), (0.01, 0.2, 0.2))
    coarse_dt = 0.2  # 20x the usual rollout step
    coarse = rollout(dmp, None, dt=coarse_dt, horizon=dmp.duration)
    assert evaluate_violations(coarse, [thin]) == [], (
        "fixture needs the coarse grid to step across the wall"
    )
    report = SolveReport(
        converged=True, iterations=0, objective=0.0,
        max_violation=0.0, fine_check_violation=0.0, wall_time=0.0,
    )
    cdmp = Cdmp(dmp, np.zeros((3, dmp.basis.n)), (thin,), report, coarse_dt, dmp.duration)
    checked = verify(cdmp, 0.01)
    assert checked.fine_check_violation > 0.0
