"""Point-attractor movement primitives learned from a single demonstration.

Each spatial axis follows a second-order goal attractor driven by a learned
forcing term, with time replaced by a shared phase variable ``s``:

    tau * ds/dt = -alpha_s * s                      (phase, s(0) = 1)
    tau * dz/dt = alpha_z * (beta_z * (g - y) - z) + f(s)
    tau * dy/dt = z

The forcing term is a normalized Gaussian mixture over the phase,

    f(s) = sum_i (w_i - zeta_i) * psi_i(s) / sum_j psi_j(s),

optionally multiplied by ``s`` (``gate_forcing``) so that forcing dies out
as the phase decays and the system terminates exactly at the goal.  The
``zeta`` weights are perturbations applied by the constraint solver; plain
fitting and rollout use ``zeta = 0``.

``z`` is the scaled velocity (``dy/dt = z / tau``): it is invariant under
temporal rescaling, which is what makes a fitted primitive replayable at a
different speed by changing ``tau`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .common import as_array, as_vec3, dataclass_eq, check_identifier, moving_average
from .errors import (
    InvalidDemonstrationError,
    InvalidGeometryError,
    NonFiniteStateError,
)

DEFAULT_ALPHA_Z = 25.0
DEFAULT_BETA_Z = DEFAULT_ALPHA_Z / 4.0  # critical damping
DEFAULT_ALPHA_S = 4.6052  # phase reaches 0.01 after one tau
DEFAULT_N_BASIS = 30
LWR_RIDGE = 1e-10
RESAMPLE_DT_MIN = 1e-3
RESAMPLE_DT_MAX = 5e-2
DEFAULT_SMOOTH_WINDOW = 5

_WORLD_FRAME = "world"


def _check_positive(value: float, name: str) -> float:
    v = float(value)
    if not math.isfinite(v) or v <= 0.0:
        raise InvalidGeometryError(f"{name} must be positive and finite, got {value}")
    return v


@dataclass(frozen=True)
class Gains:
    """Attractor and phase gains shared by fitting and rollout."""

    alpha_z: float = DEFAULT_ALPHA_Z
    beta_z: float = DEFAULT_BETA_Z
    alpha_s: float = DEFAULT_ALPHA_S

    def __post_init__(self) -> None:
        for name in ("alpha_z", "beta_z", "alpha_s"):
            object.__setattr__(self, name, _check_positive(getattr(self, name), name))


@dataclass(frozen=True)
class CanonicalSystem:
    """Shared phase dynamics: s(t) = exp(-alpha_s * t / tau)."""

    alpha_s: float
    tau: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha_s", _check_positive(self.alpha_s, "alpha_s"))
        object.__setattr__(self, "tau", _check_positive(self.tau, "tau"))


def phase(cs: CanonicalSystem, t) -> float | np.ndarray:
    """Closed-form phase s(t); accepts a scalar or an array of times >= 0."""
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0.0):
        raise InvalidGeometryError("phase is defined for t >= 0 only")
    out = np.exp(-cs.alpha_s * arr / cs.tau)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Gaussian kernels in phase space; centers decrease from 1 toward 0."""

    centers: np.ndarray
    widths: np.ndarray

    def __post_init__(self) -> None:
        c = as_array(self.centers, "centers", (-1,))
        h = as_array(self.widths, "widths", (-1,))
        if c.shape[0] < 2:
            raise InvalidGeometryError("a basis needs at least 2 kernels")
        if c.shape != h.shape:
            raise InvalidGeometryError("centers and widths must have equal length")
        if abs(c[0] - 1.0) > 1e-9:
            raise InvalidGeometryError(f"first center must be 1.0, got {c[0]}")
        if np.any(np.diff(c) >= 0.0) or np.any(c <= 0.0):
            raise InvalidGeometryError("centers must be strictly decreasing in (0, 1]")
        if np.any(h <= 0.0):
            raise InvalidGeometryError("widths must be positive")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "widths", h)

    @property
    def n(self) -> int:
        return int(self.centers.shape[0])

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


def default_basis(n: int, cs: CanonicalSystem, duration: float) -> BasisSet:
    """Kernels equally spaced in time (exponentially spaced in phase).

    Widths are set so each kernel's spread matches its gap to the next
    center: h_i = 1 / (2 * (c_i - c_{i+1})^2), with the last width copied
    from its neighbour.
    """
    if n < 2:
        raise InvalidGeometryError(f"need at least 2 basis kernels, got {n}")
    duration = _check_positive(duration, "duration")
    times = np.arange(n) * (duration / (n - 1))
    centers = np.asarray(phase(cs, times))
    gaps = centers[:-1] - centers[1:]
    widths = np.empty(n)
    widths[:-1] = 1.0 / (2.0 * gaps**2)
    widths[-1] = widths[-2]
    return BasisSet(centers, widths)


def kernels(basis: BasisSet, s) -> np.ndarray:
    """Unnormalized kernel values exp(-h_i (s - c_i)^2); shape (..., n)."""
    arr = np.asarray(s, dtype=np.float64)
    diff = arr[..., None] - basis.centers
    return np.exp(-basis.widths * diff**2)


def basis_eval(basis: BasisSet, s: float) -> np.ndarray:
    """Normalized activations at phase ``s`` in [0, 1]; they sum to 1."""
    s = float(s)
    if s < -1e-12 or s > 1.0 + 1e-12:
        raise InvalidGeometryError(f"phase must lie in [0, 1], got {s}")
    psi = kernels(basis, s)
    return psi / psi.sum()


@dataclass(frozen=True, eq=False)
class DmpDim:
    """Per-axis attractor parameters and learned forcing weights."""

    alpha_z: float
    beta_z: float
    w: np.ndarray
    y0: float
    g: float
    z0: float = 0.0  # scaled initial velocity (tau * dy/dt at t=0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha_z", _check_positive(self.alpha_z, "alpha_z"))
        object.__setattr__(self, "beta_z", _check_positive(self.beta_z, "beta_z"))
        object.__setattr__(self, "w", as_array(self.w, "w", (-1,)))
        for name in ("y0", "g", "z0"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidGeometryError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class OrientationTrack:
    """Demonstrated orientations, kept only to re-emit on rollouts.

    ``fractions`` are sample times normalized by the demonstration span, so
    the track replays under temporal rescaling.  Orientations take no part
    in the dynamics.
    """

    fractions: np.ndarray  # (k,) in [0, 1], strictly increasing
    quats: np.ndarray  # (k, 4) unit rows, (w, x, y, z)

    def __post_init__(self) -> None:
        f = as_array(self.fractions, "fractions", (-1,))
        q = as_array(self.quats, "quats", (-1, 4))
        if f.shape[0] != q.shape[0] or f.shape[0] < 2:
            raise InvalidGeometryError("orientation track needs matching lengths >= 2")
        if np.any(np.diff(f) <= 0.0) or f[0] < 0.0 or f[-1] > 1.0 + 1e-12:
            raise InvalidGeometryError("fractions must increase within [0, 1]")
        norms = np.linalg.norm(q, axis=1)
        if np.any(norms < 1e-12):
            raise InvalidGeometryError("orientation rows must be nonzero")
        object.__setattr__(self, "fractions", f)
        q = q / norms[:, None]
        q.setflags(write=False)
        object.__setattr__(self, "quats", q)

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Dmp:
    """A fitted 3-axis primitive: shared phase/basis, one DmpDim per axis."""

    canonical: CanonicalSystem
    basis: BasisSet
    dims: tuple[DmpDim, DmpDim, DmpDim]
    duration: float
    gate_forcing: bool
    orientation_track: OrientationTrack | None = None

    def __post_init__(self) -> None:
        dims = tuple(self.dims)
        if len(dims) != 3:
            raise InvalidGeometryError(f"expected 3 spatial dims, got {len(dims)}")
        n = self.basis.n
        for d in dims:
            if d.w.shape[0] != n:
                raise InvalidGeometryError(
                    f"weight vector length {d.w.shape[0]} does not match basis n={n}"
                )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "duration", _check_positive(self.duration, "duration"))
        object.__setattr__(self, "gate_forcing", bool(self.gate_forcing))

    @property
    def n_basis(self) -> int:
        return self.basis.n

    def y0(self) -> np.ndarray:
        return np.array([d.y0 for d in self.dims])

    def goal(self) -> np.ndarray:
        return np.array([d.g for d in self.dims])

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


def forcing(dmp: Dmp, dim: int, s: float, zeta) -> float:
    """Forcing value for one axis at phase ``s`` under perturbation ``zeta``."""
    z = as_array(zeta, "zeta", (-1,))
    if z.shape[0] != dmp.basis.n:
        raise InvalidGeometryError(
            f"zeta length {z.shape[0]} does not match basis n={dmp.basis.n}"
        )
    act = basis_eval(dmp.basis, s)
    value = float(np.dot(dmp.dims[dim].w - z, act))
    return value * s if dmp.gate_forcing else value


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled rollout states.

    ``scaled_velocities`` holds the integrator state z = tau * dy/dt; use
    :meth:`velocities` for physical velocities.  Chained trajectories are
    emitted with ``tau = 1`` so their z column is already physical.
    """

    dt: float
    frame: str
    times: np.ndarray  # (m,)
    positions: np.ndarray  # (m, 3)
    scaled_velocities: np.ndarray  # (m, 3)
    tau: float
    orientations: np.ndarray | None = None  # (m, 4) or None

    def __post_init__(self) -> None:
        object.__setattr__(self, "dt", _check_positive(self.dt, "dt"))
        object.__setattr__(self, "tau", _check_positive(self.tau, "tau"))
        t = as_array(self.times, "times", (-1,))
        if t.shape[0] == 0:
            raise InvalidGeometryError("trajectory must be non-empty")
        if t.shape[0] > 1 and np.any(np.abs(np.diff(t) - self.dt) > 1e-9):
            raise InvalidGeometryError("trajectory times must be uniformly spaced")
        m = t.shape[0]
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", as_array(self.positions, "positions", (m, 3)))
        object.__setattr__(
            self,
            "scaled_velocities",
            as_array(self.scaled_velocities, "scaled_velocities", (m, 3)),
        )
        if self.orientations is not None:
            object.__setattr__(
                self, "orientations", as_array(self.orientations, "orientations", (m, 4))
            )

    def velocities(self) -> np.ndarray:
        return self.scaled_velocities / self.tau

    def __len__(self) -> int:
        return int(self.times.shape[0])

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Demonstration:
    """Raw recorded end-effector path; never stored resampled."""

    id: str
    frame: str
    times: np.ndarray  # (m,)
    positions: np.ndarray  # (m, 3)
    orientations: np.ndarray | None = None  # (m, 4) unit rows, optional

    def __post_init__(self) -> None:
        check_identifier(self.id, "demonstration id")
        try:
            t = as_array(self.times, "times", (-1,))
        except InvalidGeometryError as exc:
            raise InvalidDemonstrationError(f"demonstration {self.id!r}: {exc}") from None
        if t.shape[0] < 5:
            raise InvalidDemonstrationError(
                f"demonstration {self.id!r} needs >= 5 samples, got {t.shape[0]}"
            )
        if np.any(np.diff(t) <= 0.0):
            raise InvalidDemonstrationError(
                f"demonstration {self.id!r} timestamps must strictly increase"
            )
        m = t.shape[0]
        object.__setattr__(self, "times", t)
        try:
            positions = as_array(self.positions, "positions", (m, 3))
        except InvalidGeometryError as exc:
            raise InvalidDemonstrationError(
                f"demonstration {self.id!r}: {exc}"
            ) from None
        object.__setattr__(self, "positions", positions)
        if self.orientations is not None:
            q = as_array(self.orientations, "orientations", (m, 4))
            norms = np.linalg.norm(q, axis=1)
            if np.any(norms < 1e-12):
                raise InvalidDemonstrationError("orientation rows must be nonzero")
            q = q / norms[:, None]
            q.setflags(write=False)
            object.__setattr__(self, "orientations", q)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def __len__(self) -> int:
        return int(self.times.shape[0])

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class FitOptions:
    n_basis: int = DEFAULT_N_BASIS
    gains: Gains = field(default_factory=Gains)
    gate_forcing: bool = True
    smooth_window: int = DEFAULT_SMOOTH_WINDOW

    def __post_init__(self) -> None:
        if int(self.n_basis) < 2:
            raise InvalidGeometryError("n_basis must be >= 2")
        if int(self.smooth_window) < 1 or int(self.smooth_window) % 2 == 0:
            raise InvalidGeometryError("smooth_window must be odd and >= 1")
        object.__setattr__(self, "n_basis", int(self.n_basis))
        object.__setattr__(self, "smooth_window", int(self.smooth_window))
        object.__setattr__(self, "gate_forcing", bool(self.gate_forcing))


@dataclass(frozen=True, eq=False)
class TargetData:
    """Preprocessed demonstration plus the forcing values that reproduce it."""

    times: np.ndarray  # (m,) uniform grid starting at 0
    dt: float
    positions: np.ndarray  # (m, 3) resampled and smoothed
    velocities: np.ndarray  # (m, 3)
    accelerations: np.ndarray  # (m, 3)
    f_target: np.ndarray  # (m, 3)
    phases: np.ndarray  # (m,)
    y0: np.ndarray
    g: np.ndarray
    duration: float

    __eq__ = dataclass_eq  # type: ignore[assignment]
    __hash__ = None  # type: ignore[assignment]


def _resample(demo: Demonstration) -> tuple[np.ndarray, np.ndarray, float]:
    """Uniform grid over the demo span at roughly the median sample interval.

    The interval is clamped to [1 ms, 50 ms] and then adjusted so the grid
    lands exactly on both endpoints (at least 5 samples).
    """
    t = demo.times - demo.times[0]
    span = float(t[-1])
    raw = float(np.median(np.diff(t)))
    h = min(max(raw, RESAMPLE_DT_MIN), RESAMPLE_DT_MAX)
    intervals = max(int(round(span / h)), 4)
    grid = np.linspace(0.0, span, intervals + 1)
    pos = np.stack([np.interp(grid, t, demo.positions[:, k]) for k in range(3)], axis=1)
    return grid, pos, span / intervals


def _second_difference(pos: np.ndarray, h: float) -> np.ndarray:
    """Second time derivative, second-order accurate at the ends too.

    Central three-point stencil inside; four-point one-sided stencil at the
    boundaries (differentiating a first-derivative estimate twice would drop
    the boundary rows to first order).
    """
    acc = np.empty_like(pos)
    acc[1:-1] = (pos[2:] - 2.0 * pos[1:-1] + pos[:-2]) / h**2
    acc[0] = (2.0 * pos[0] - 5.0 * pos[1] + 4.0 * pos[2] - pos[3]) / h**2
    acc[-1] = (2.0 * pos[-1] - 5.0 * pos[-2] + 4.0 * pos[-3] - pos[-4]) / h**2
    return acc


def compute_targets(
    demo: Demonstration,
    gains: Gains | None = None,
    smooth_window: int = DEFAULT_SMOOTH_WINDOW,
) -> TargetData:
    """Invert the attractor dynamics to get per-axis forcing targets.

    The demonstration is resampled to a uniform grid, optionally smoothed,
    and differentiated with central differences (second-order one-sided at
    the ends).  With tau equal to the demonstration span and z = tau * dy/dt,
    the middle dynamics row solved for the forcing term gives

        f_target = tau^2 * ydd - alpha_z * (beta_z * (g - y) - tau * yd)
    """
    gains = gains or Gains()
    grid, pos, h = _resample(demo)
    pos = moving_average(pos, smooth_window)
    tau = float(grid[-1])
    vel = np.gradient(pos, h, axis=0, edge_order=2)
    acc = _second_difference(pos, h)
    y0 = pos[0].copy()
    g = pos[-1].copy()
    f_target = tau**2 * acc - gains.alpha_z * (gains.beta_z * (g - pos) - tau * vel)
    cs = CanonicalSystem(gains.alpha_s, tau)
    phases = np.asarray(phase(cs, grid))
    return TargetData(
        times=grid,
        dt=h,
        positions=pos,
        velocities=vel,
        accelerations=acc,
        f_target=f_target,
        phases=phases,
        y0=y0,
        g=g,
        duration=tau,
    )


def fit_lwr(
    demo: Demonstration,
    n: int = DEFAULT_N_BASIS,
    gains: Gains | None = None,
    gate_forcing: bool = True,
    smooth_window: int = DEFAULT_SMOOTH_WINDOW,
) -> Dmp:
    """Fit forcing weights by per-kernel weighted least squares.

    Each kernel's weight solves its own scalar problem
        w_k = sum_t psi_k(s_t) * xi_t * f_target(t)
            / (sum_t psi_k(s_t) * xi_t^2 + ridge)
    with xi_t = s_t under gating (the regressor the rollout actually sees)
    and xi_t = 1 otherwise.  The ridge keeps kernels with negligible total
    activation at weight ~0 instead of blowing up.
    """
    if n < 2:
        raise InvalidGeometryError(f"need at least 2 basis kernels, got {n}")
    gains = gains or Gains()
    data = compute_targets(demo, gains, smooth_window)
    cs = CanonicalSystem(gains.alpha_s, data.duration)
    basis = default_basis(n, cs, data.duration)
    psi = kernels(basis, data.phases)  # (m, n), unnormalized
    xi = data.phases if gate_forcing else np.ones_like(data.phases)
    denom = psi.T @ (xi * xi) + LWR_RIDGE  # (n,)
    dims = []
    z0 = data.duration * data.velocities[0]  # scaled initial velocity
    for d in range(3):
        numer = psi.T @ (xi * data.f_target[:, d])
        w = numer / denom
        dims.append(
            DmpDim(
                alpha_z=gains.alpha_z,
                beta_z=gains.beta_z,
                w=w,
                y0=float(data.y0[d]),
                g=float(data.g[d]),
                z0=float(z0[d]),
            )
        )
    track = None
    if demo.orientations is not None:
        t = demo.times - demo.times[0]
        track = OrientationTrack(t / t[-1], demo.orientations)
    return Dmp(
        canonical=cs,
        basis=basis,
        dims=(dims[0], dims[1], dims[2]),
        duration=data.duration,
        gate_forcing=gate_forcing,
        orientation_track=track,
    )


def _slerp_track(track: OrientationTrack, fractions: np.ndarray) -> np.ndarray:
    """Spherical interpolation of the stored orientation rows."""
    f = np.clip(fractions, 0.0, 1.0)
    idx = np.searchsorted(track.fractions, f, side="right")
    idx = np.clip(idx, 1, track.fractions.shape[0] - 1)
    lo, hi = idx - 1, idx
    q0 = track.quats[lo]
    q1 = track.quats[hi].copy()
    span = track.fractions[hi] - track.fractions[lo]
    u = np.where(span > 0, (f - track.fractions[lo]) / np.where(span > 0, span, 1.0), 0.0)
    dots = np.sum(q0 * q1, axis=1)
    flip = dots < 0.0
    q1[flip] = -q1[flip]
    dots = np.abs(dots)
    out = np.empty_like(q0)
    near = dots > 1.0 - 1e-9
    out[near] = q0[near] + u[near, None] * (q1[near] - q0[near])
    far = ~near
    if np.any(far):
        omega = np.arccos(np.clip(dots[far], -1.0, 1.0))
        so = np.sin(omega)
        a = np.sin((1.0 - u[far]) * omega) / so
        b = np.sin(u[far] * omega) / so
        out[far] = a[:, None] * q0[far] + b[:, None] * q1[far]
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def rollout(
    dmp: Dmp,
    zeta=None,
    *,
    y0=None,
    g=None,
    tau: float | None = None,
    z0=None,
    dt: float = 0.01,
    horizon: float | None = None,
) -> Trajectory:
    """Integrate the dynamics with fixed-step RK4.

    Overrides replace the fitted start/goal/timescale; ``zeta`` is the
    per-axis perturbation matrix (3, n) or None for zero.  Deterministic:
    identical inputs produce bit-identical trajectories.
    """
    dt = _check_positive(dt, "dt")
    n = dmp.basis.n
    if zeta is None:
        zeta_m = np.zeros((3, n))
    else:
        zeta_m = as_array(zeta, "zeta", (3, n))
    tau_eff = _check_positive(tau if tau is not None else dmp.canonical.tau, "tau")
    effective_duration = dmp.duration * tau_eff / dmp.canonical.tau
    if horizon is None:
        horizon = effective_duration
    if horizon < effective_duration - 1e-9:
        raise InvalidGeometryError(
            f"horizon {horizon} shorter than effective duration {effective_duration}"
        )
    y_start = as_vec3(y0, "y0") if y0 is not None else dmp.y0()
    goal = as_vec3(g, "g") if g is not None else dmp.goal()
    z_start = as_vec3(z0, "z0") if z0 is not None else np.array([d.z0 for d in dmp.dims])

    centers, widths = dmp.basis.centers, dmp.basis.widths
    alpha_s = dmp.canonical.alpha_s
    alpha = np.array([d.alpha_z for d in dmp.dims])
    beta = np.array([d.beta_z for d in dmp.dims])
    wz = np.stack([d.w for d in dmp.dims]) - zeta_m  # (3, n)
    gate = dmp.gate_forcing

    def deriv(x: np.ndarray) -> np.ndarray:
        s = x[0]
        z = x[1:4]
        y = x[4:7]
        psi = np.exp(-widths * (s - centers) ** 2)
        f = wz @ psi / psi.sum()
        if gate:
            f = f * s
        out = np.empty(7)
        out[0] = -alpha_s * s / tau_eff
        out[1:4] = (alpha * (beta * (goal - y) - z) + f) / tau_eff
        out[4:7] = z / tau_eff
        return out

    steps = max(int(round(horizon / dt)), 1)
    times = np.arange(steps + 1) * dt
    ys = np.empty((steps + 1, 3))
    zs = np.empty((steps + 1, 3))
    x = np.empty(7)
    x[0] = 1.0
    x[1:4] = z_start
    x[4:7] = y_start
    ys[0], zs[0] = x[4:7], x[1:4]
    # overflow is not an error condition here: it surfaces as a non-finite
    # state and gets reported with its step index
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(steps):
            k1 = deriv(x)
            k2 = deriv(x + 0.5 * dt * k1)
            k3 = deriv(x + 0.5 * dt * k2)
            k4 = deriv(x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise NonFiniteStateError(
                    f"non-finite state at step {i + 1} (t={times[i + 1]:.6g})"
                )
            ys[i + 1], zs[i + 1] = x[4:7], x[1:4]

    orientations = None
    if dmp.orientation_track is not None:
        orientations = _slerp_track(dmp.orientation_track, times / effective_duration)
    return Trajectory(
        dt=dt,
        frame=_WORLD_FRAME,
        times=times,
        positions=ys,
        scaled_velocities=zs,
        tau=tau_eff,
        orientations=orientations,
    )
