"""Constrained trajectory optimization over forcing-weight perturbations.

The attractor dynamics are linear in (z, y) given the phase, and the
forcing term is affine in the perturbation weights zeta.  Positions along a
rollout are therefore exactly affine in zeta:

    y_d(t; zeta) = y_nominal_d(t) - Phi_d(t) @ zeta_d        (per axis d)

where column k of Phi_d is the response of axis d to a unit perturbation of
kernel k — obtained by integrating the difference dynamics once per gain
pair, independent of the fitted weights, start, or goal.  This reduces the
problem

    min 1/2 ||zeta||^2   s.t.   sdf_j(y(t_k; zeta)) >= margin_j
                                 for every region j and collocation time t_k

to a small smooth program solved with an augmented Lagrangian over hinge
constraints: the inner minimizer is gradient descent with backtracking
(Armijo), multipliers are updated outward, and the penalty grows only when
the worst violation stalls.  A post-solve verify rollout at dt/4 bounds the
inter-sample gap; if it finds a violation, the offending times join the
collocation grid once and the problem is re-solved.

Determinism: zeta starts at 0, iteration order is fixed, and there is no
randomness — identical inputs give identical results.  The wall-clock
budget is only consulted at outer-iteration boundaries so that a generous
budget never alters the iterate sequence.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .common import as_array, dataclass_eq
from .dmp import Dmp, Trajectory, rollout
from .errors import DegenerateProblemError, InvalidGeometryError
from .geometry import ConstraintRegion, min_sdf_profile, sdf, sdf_gradient

ARMIJO_C1 = 1e-4
BACKTRACK_FACTOR = 0.5
MIN_STEP = 1e-18
MAX_PENALTY = 1e8  # penalty growth cap; multiplier updates do the rest
FINE_CHECK_FACTOR = 4  # verify at dt / 4


@dataclass(frozen=True)
class SolveOptions:
    """Solver hyperparameters; defaults suit the desk-scale fixtures."""

    dt: float = 0.01
    horizon: float | None = None  # None -> 1.25 x primitive duration
    collocation_dt: float | None = None  # None -> 2 x dt
    max_outer_iterations: int = 30
    max_inner_iterations: int = 200
    penalty_init: float = 10.0
    penalty_growth: float = 5.0
    feasibility_tol: float = 1e-4
    gradient_tol: float = 1e-6
    time_budget: float = 10.0

    def __post_init__(self) -> None:
        positives = {
            "dt": self.dt,
            "max_outer_iterations": self.max_outer_iterations,
            "max_inner_iterations": self.max_inner_iterations,
            "penalty_init": self.penalty_init,
            "penalty_growth": self.penalty_growth,
            "feasibility_tol": self.feasibility_tol,
            "gradient_tol": self.gradient_tol,
            "time_budget": self.time_budget,
        }
        if self.horizon is not None:
            positives["horizon"] = self.horizon
        if self.collocation_dt is not None:
            positives["collocation_dt"] = self.collocation_dt
        for name, value in positives.items():
            if not math.isfinite(float(value)) or float(value) <= 0:
                raise InvalidGeometryError(f"{name} must be positive, got {value}")

    def effective_horizon(self, dmp: Dmp) -> float:
        if self.horizon is not None:
            return self.horizon
        return 1.25 * dmp.duration

    def effective_collocation_dt(self) -> float:
        return self.collocation_dt if self.collocation_dt is not None else 2.0 * self.dt


@dataclass(frozen=True, eq=False)
class SolveReport:
    converged: bool
    iterations: int
    objective: float
    max_violation: float
    fine_check_violation: float
    wall_time: float
    notes: tuple[str, ...] = ()
    violation_history: tuple[float, ...] = ()  # worst violation after each outer pass

    def __post_init__(self) -> None:
        object.__setattr__(self, "notes", tuple(self.notes))
        object.__setattr__(
            self, "violation_history", tuple(float(v) for v in self.violation_history)
        )

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Cdmp:
    """A primitive plus the perturbation that makes its rollout feasible."""

    dmp: Dmp
    zeta: np.ndarray  # (3, n)
    constraints: tuple[ConstraintRegion, ...]
    report: SolveReport
    dt: float
    horizon: float

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "zeta", as_array(self.zeta, "zeta", (3, self.dmp.basis.n))
        )
        object.__setattr__(self, "constraints", tuple(self.constraints))

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


def unit_responses(dmp: Dmp, alpha_z: float, beta_z: float, dt: float, steps: int) -> np.ndarray:
    """Response of one axis to a unit perturbation of each kernel.

    Integrates the difference dynamics (which a perturbation -e_k induces
    relative to the nominal rollout) for all kernels at once:

        tau * dDZ/dt = -alpha_z * (beta_z * DY + DZ) + gate(s) * psi_norm(s)
        tau * dDY/dt = DZ

    with the phase co-integrated by the same RK4 scheme as `rollout`, so the
    affine identity holds to integrator precision.  Returns (steps+1, n).
    """
    basis = dmp.basis
    centers, widths = basis.centers, basis.widths
    n = basis.n
    alpha_s = dmp.canonical.alpha_s
    tau = dmp.canonical.tau
    gate = dmp.gate_forcing

    def deriv(state: np.ndarray) -> np.ndarray:
        s = state[0]
        dz = state[1 : 1 + n]
        dy = state[1 + n :]
        psi = np.exp(-widths * (s - centers) ** 2)
        f = psi / psi.sum()
        if gate:
            f = f * s
        out = np.empty_like(state)
        out[0] = -alpha_s * s / tau
        out[1 : 1 + n] = (-alpha_z * (beta_z * dy + dz) + f) / tau
        out[1 + n :] = dz / tau
        return out

    x = np.zeros(1 + 2 * n)
    x[0] = 1.0
    responses = np.zeros((steps + 1, n))
    for i in range(steps):
        k1 = deriv(x)
        k2 = deriv(x + 0.5 * dt * k1)
        k3 = deriv(x + 0.5 * dt * k2)
        k4 = deriv(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        responses[i + 1] = x[1 + n :]
    return responses


def influence_matrix(dmp: Dmp, grid, dt: float = 0.01, horizon: float | None = None) -> list[np.ndarray]:
    """Per-axis matrices Phi_d with y_d(t; zeta) = y_nom_d(t) - Phi_d(t) zeta_d.

    ``grid`` holds times that must coincide with rollout steps of ``dt``.
    """
    grid = as_array(grid, "grid", (-1,))
    if horizon is None:
        horizon = float(grid.max()) if grid.size else dmp.duration
    steps = max(int(round(horizon / dt)), 1)
    idx = np.round(grid / dt).astype(int)
    if np.any(np.abs(grid - idx * dt) > 1e-9):
        raise InvalidGeometryError("grid times must be multiples of the rollout dt")
    if np.any(idx < 0) or np.any(idx > steps):
        raise InvalidGeometryError("grid times must lie within the rollout horizon")
    cache: dict[tuple[float, float], np.ndarray] = {}
    out = []
    for dim in dmp.dims:
        key = (dim.alpha_z, dim.beta_z)
        if key not in cache:
            cache[key] = unit_responses(dmp, dim.alpha_z, dim.beta_z, dt, steps)
        out.append(cache[key][idx])
    return out


def evaluate_violations(
    traj: Trajectory, constraints
) -> list[tuple[float, str, float]]:
    """All (time, region id, depth) where the trajectory breaches a margin."""
    regions = list(constraints)
    if not regions:
        return []
    out: list[tuple[float, str, float]] = []
    for region in regions:
        vals = np.asarray(sdf(region, traj.positions)) - region.margin
        for i in np.flatnonzero(vals < 0.0):
            out.append((float(traj.times[i]), region.id, float(-vals[i])))
    out.sort(key=lambda item: (item[0], item[1]))
    return out


def _endpoint_check(points: dict[str, np.ndarray], constraints) -> None:
    for name, p in points.items():
        for region in constraints:
            depth = float(sdf(region, p)) - region.margin
            if depth < 0.0:
                raise DegenerateProblemError(
                    f"{name} lies {-depth:.4g} m inside margin-inflated region "
                    f"{region.id!r}; no feasible trajectory can exist"
                )


class _AugmentedLagrangian:
    """Hinge-constraint AL model on a fixed collocation grid.

    The raw constraints c = margin - sdf live in meters while their
    gradients go through the influence matrices, whose entries are tiny
    (millimeter responses to unit weight perturbations).  The model
    therefore works on scaled constraints c / cscale, where cscale is the
    largest influence-row norm, so constraint gradients are O(1) in
    zeta-space and the penalty parameter stays in a sane range.  Violations
    are always reported in meters.
    """

    def __init__(
        self,
        y_nom: np.ndarray,  # (m, 3) nominal positions on the grid
        phis: list[np.ndarray],  # 3 x (m, n)
        regions: list[ConstraintRegion],
    ) -> None:
        self.y_nom = y_nom
        self.phis = phis
        self.regions = regions
        self.m = y_nom.shape[0]
        self.r = len(regions)
        row_sq = np.zeros(self.m)
        for phi in phis:
            row_sq += np.sum(phi**2, axis=1)
        self.cscale = max(float(np.sqrt(row_sq.max())), 1e-12)

    def positions(self, zeta: np.ndarray) -> np.ndarray:
        y = self.y_nom.copy()
        for d in range(3):
            y[:, d] -= self.phis[d] @ zeta[d]
        return y

    def constraint_values(self, zeta: np.ndarray) -> np.ndarray:
        """c[j, k] = margin_j - sdf_j(y_k) in meters; feasible iff all <= 0."""
        y = self.positions(zeta)
        c = np.empty((self.r, self.m))
        for j, region in enumerate(self.regions):
            c[j] = region.margin - np.asarray(sdf(region, y))
        return c

    def value(self, zeta: np.ndarray, lam: np.ndarray, rho: float) -> float:
        c = self.constraint_values(zeta) / self.cscale
        hinge = np.maximum(0.0, lam + rho * c)
        penalty = float(np.sum(hinge**2 - lam**2)) / (2.0 * rho)
        return 0.5 * float(np.sum(zeta**2)) + penalty

    def gradient(self, zeta: np.ndarray, lam: np.ndarray, rho: float) -> np.ndarray:
        y = self.positions(zeta)
        grad = zeta.copy()
        mult = np.empty((self.r, self.m))
        grads_jd = np.empty((self.r, self.m, 3))
        for j, region in enumerate(self.regions):
            c_j = (region.margin - np.asarray(sdf(region, y))) / self.cscale
            mult[j] = np.maximum(0.0, lam[j] + rho * c_j)
            grads_jd[j] = sdf_gradient(region, y)
        # d(c/cscale)/dzeta_d = +grad_sdf_d * Phi_d row / cscale
        for d in range(3):
            weights = np.sum(mult * grads_jd[:, :, d], axis=0)  # (m,)
            grad[d] += self.phis[d].T @ (weights / self.cscale)
        return grad

    def update_multipliers(self, zeta: np.ndarray, lam: np.ndarray, rho: float) -> np.ndarray:
        c = self.constraint_values(zeta) / self.cscale
        return np.maximum(0.0, lam + rho * c)

    def max_violation(self, zeta: np.ndarray) -> float:
        c = self.constraint_values(zeta)
        return max(0.0, float(c.max())) if c.size else 0.0


def _lateral_probe(
    model: _AugmentedLagrangian, zeta: np.ndarray, scale: float, axis: int
) -> np.ndarray:
    """Deterministic escape from a symmetric stall.

    A nominal path aimed straight through a region's center sees SDF
    gradients parallel to its own motion at every sample, so first-order
    steps can only tunnel along the path, never detour around.  This shifts
    the worst violating sample by ``scale`` meters along coordinate ``axis``
    (projected orthogonal to the local SDF normal), using the least-squares
    weight change.  Violation is at a lateral maximum there, so the shift
    strictly helps; picking the lowest dead axis keeps it deterministic.
    """
    c = model.constraint_values(zeta)
    if c.size == 0:
        return zeta
    j, k = np.unravel_index(int(np.argmax(c)), c.shape)
    y = model.positions(zeta)
    normal = sdf_gradient(model.regions[j], y[k])
    u = np.zeros(3)
    u[axis] = 1.0
    u -= float(u @ normal) * normal
    norm = float(np.linalg.norm(u))
    if norm < 1e-9:
        return zeta
    u /= norm
    out = zeta.copy()
    for d in range(3):
        row = model.phis[d][k]
        denom = float(row @ row)
        if denom > 0.0:
            # y_k = y_nom_k - Phi_k zeta: subtract to move y_k toward +u
            out[d] -= (scale * u[d] / denom) * row
    return out


def _minimize_inner(
    model: _AugmentedLagrangian,
    zeta: np.ndarray,
    lam: np.ndarray,
    rho: float,
    max_iters: int,
    gradient_tol: float,
) -> np.ndarray:
    """Gradient descent with Armijo backtracking on the AL at fixed (lam, rho).

    The stopping test is relative to the iterate scale; the absolute
    ``gradient_tol`` floor applies near zeta = 0.
    """
    value = model.value(zeta, lam, rho)
    step = 1.0
    for _ in range(max_iters):
        grad = model.gradient(zeta, lam, rho)
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= gradient_tol * max(1.0, float(np.max(np.abs(zeta)))):
            break
        gsq = float(np.sum(grad**2))
        step = min(step * 2.0, 1e6)
        while step > MIN_STEP:
            candidate = zeta - step * grad
            cand_value = model.value(candidate, lam, rho)
            if cand_value <= value - ARMIJO_C1 * step * gsq:
                zeta, value = candidate, cand_value
                break
            step *= BACKTRACK_FACTOR
        else:
            break  # no acceptable step remains; stationary enough
    return zeta


def solve(dmp: Dmp, constraints, opts: SolveOptions | None = None) -> Cdmp:
    """Find the smallest weight perturbation whose rollout clears all regions.

    Returns a Cdmp whose report says whether the collocation problem was
    solved *and* an independent fine-grid rollout (dt/4) stayed within
    ``feasibility_tol``.  On iteration/budget exhaustion the best iterate is
    returned with ``converged=False`` rather than raising.
    """
    start_time = time.monotonic()
    opts = opts or SolveOptions()
    regions = list(constraints)
    notes: list[str] = []
    dt = opts.dt
    horizon = opts.effective_horizon(dmp)
    nominal = rollout(dmp, None, dt=dt, horizon=horizon)
    n = dmp.basis.n

    if any(abs(d.z0) > 1e-9 for d in dmp.dims):
        notes.append("initial z taken from demonstration start velocity")

    if not regions:
        report = SolveReport(
            converged=True,
            iterations=0,
            objective=0.0,
            max_violation=0.0,
            fine_check_violation=0.0,
            wall_time=time.monotonic() - start_time,
            notes=tuple(notes),
        )
        return Cdmp(dmp, np.zeros((3, n)), (), report, dt, horizon)

    _endpoint_check({"start": dmp.y0(), "goal": dmp.goal()}, regions)

    steps = len(nominal) - 1
    cstride = max(int(round(opts.effective_collocation_dt() / dt)), 1)
    grid_idx = sorted(set(range(0, steps + 1, cstride)) | {steps})
    responses: dict[tuple[float, float, float], np.ndarray] = {}

    zeta = np.zeros((3, n))
    total_outer = 0
    refined = False

    def build_model(
        positions: np.ndarray, indices: list[int], step_dt: float, total: int
    ) -> _AugmentedLagrangian:
        idx = np.asarray(indices, dtype=int)
        phis = []
        for d in dmp.dims:
            key = (d.alpha_z, d.beta_z, step_dt)
            if key not in responses:
                responses[key] = unit_responses(dmp, d.alpha_z, d.beta_z, step_dt, total)
            phis.append(responses[key][idx])
        return _AugmentedLagrangian(positions[idx], phis, regions)

    def out_of_budget() -> bool:
        return time.monotonic() - start_time > opts.time_budget

    model = build_model(nominal.positions, grid_idx, dt, steps)
    coll_violation = model.max_violation(zeta)
    history: list[float] = []

    probed = False
    rho = opts.penalty_init

    while True:
        # rho intentionally survives a grid refinement: the warm-started
        # iterate is already near-feasible, and dropping back to a weak
        # penalty would let the objective drag it into the region again
        lam = np.zeros((model.r, model.m))
        prev_violation = math.inf
        best_zeta: np.ndarray | None = None
        best_objective = math.inf
        polish_left = 3
        for _ in range(opts.max_outer_iterations):
            if out_of_budget():
                notes.append("time budget exhausted")
                break
            total_outer += 1
            zeta = _minimize_inner(
                model, zeta, lam, rho, opts.max_inner_iterations, opts.gradient_tol
            )
            lam = model.update_multipliers(zeta, lam, rho)
            coll_violation = model.max_violation(zeta)
            history.append(coll_violation)
            if coll_violation <= opts.feasibility_tol:
                objective = 0.5 * float(np.sum(zeta**2))
                if objective < best_objective:
                    best_objective = objective
                    best_zeta = zeta.copy()
                polish_left -= 1
                if polish_left <= 0:
                    break
            else:
                if coll_violation > 0.9 * prev_violation:
                    # A symmetric scene can leave whole coordinates with
                    # exactly zero gradient (the path aims straight at a
                    # region's center); gradient steps alone never leave
                    # that subspace, so shift sideways once detected.
                    grad = model.gradient(zeta, lam, rho)
                    dead = [
                        d for d in range(3) if not zeta[d].any() and not grad[d].any()
                    ]
                    if dead:
                        zeta = _lateral_probe(model, zeta, coll_violation, dead[0])
                        coll_violation = model.max_violation(zeta)
                        if not probed:
                            probed = True
                            notes.append(
                                "applied deterministic lateral shift to break "
                                "a symmetric stall"
                            )
                if coll_violation > 0.25 * prev_violation:
                    rho = min(rho * opts.penalty_growth, MAX_PENALTY)
            prev_violation = coll_violation
        if best_zeta is not None:
            zeta = best_zeta
            coll_violation = model.max_violation(zeta)
        # Independent check between collocation points.
        fine = rollout(dmp, zeta, dt=dt / FINE_CHECK_FACTOR, horizon=horizon)
        fine_vals, _ = min_sdf_profile(regions, fine.positions)
        fine_violation = max(0.0, -float(fine_vals.min()))
        if (
            fine_violation > opts.feasibility_tol
            and not refined
            and coll_violation <= opts.feasibility_tol
            and not out_of_budget()
        ):
            # Re-collocate on the fine grid so the detected violation
            # times themselves become constraint points.  The affine
            # model's base is always the unperturbed rollout.
            refined = True
            fine_steps = len(fine) - 1
            bad = np.flatnonzero(-fine_vals > opts.feasibility_tol)
            # Re-collocate on the whole fine grid, not just the violating
            # samples: re-solving shifts the path, and leaving any gap near
            # the surface uncollocated invites the optimizer to cut through
            # it (getting closer to a region always shrinks the objective).
            merged = list(range(fine_steps + 1))
            notes.append(
                f"refined collocation grid with {len(bad)} violation times"
            )
            nominal_fine = rollout(dmp, None, dt=dt / FINE_CHECK_FACTOR, horizon=horizon)
            model = build_model(
                nominal_fine.positions, merged, dt / FINE_CHECK_FACTOR, fine_steps
            )
            coll_violation = model.max_violation(zeta)
            continue
        break

    objective = 0.5 * float(np.sum(zeta**2))
    converged = (
        coll_violation <= opts.feasibility_tol
        and fine_violation <= opts.feasibility_tol
    )
    if not converged:
        notes.append("no feasible solution found within iteration/time limits")
    report = SolveReport(
        converged=converged,
        iterations=total_outer,
        objective=objective,
        max_violation=coll_violation,
        fine_check_violation=fine_violation,
        wall_time=time.monotonic() - start_time,
        notes=tuple(notes),
        violation_history=tuple(history),
    )
    return Cdmp(dmp, zeta, tuple(regions), report, dt, horizon)


def verify(cdmp: Cdmp, fine_dt: float) -> SolveReport:
    """Re-roll at a finer step and report the worst margin violation."""
    if fine_dt > cdmp.dt + 1e-12:
        raise InvalidGeometryError(
            f"fine_dt {fine_dt} must not exceed the solve dt {cdmp.dt}"
        )
    traj = rollout(cdmp.dmp, cdmp.zeta, dt=fine_dt, horizon=cdmp.horizon)
    if cdmp.constraints:
        vals, _ = min_sdf_profile(cdmp.constraints, traj.positions)
        worst = max(0.0, -float(vals.min()))
    else:
        worst = 0.0
    return replace(cdmp.report, fine_check_violation=worst)
