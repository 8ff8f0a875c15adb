"""Pseudo-spectral RK4 integration of the IPM equation.

Two forms are supported:

* perturbation: d_t eta + u.grad eta = -g'(x2) R1^2 eta, u = BS(eta)
* full:         d_t rho + u.grad rho = 0,                u = BS(rho)

The state is advanced in Fourier space; products are formed on the grid from
dealiased factors and the result is dealiased again.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .fields import Grid2D, RealField2D, fourier_interpolate, symbols


class BlowUpError(RuntimeError):
    def __init__(self, message: str, t: float, series=None):
        super().__init__(f"{message} (t={t:.6g})")
        self.t = t
        self.series = series


@dataclass(frozen=True, eq=False)
class StratProfile:
    """Background stratification, consumed only through g'(x2)."""

    grid: Grid2D
    gprime: np.ndarray  # shape (n,) as a function of x2, or broadcastable (n, n)
    gsecond: Optional[np.ndarray] = None

    def __post_init__(self):
        g = np.asarray(self.gprime, dtype=float)
        if g.ndim == 2:
            if np.abs(g - g[:1, :]).max() > 1e-12:
                raise ValueError("g' must depend on x2 only")
            g = g[0]
        if g.shape != (self.grid.n,):
            raise ValueError("g' must be sampled along x2")
        object.__setattr__(self, "gprime", g)

    @classmethod
    def constant(cls, grid: Grid2D, gamma: float) -> "StratProfile":
        return cls(grid, np.full(grid.n, float(gamma)), np.zeros(grid.n))

    @classmethod
    def from_function(cls, grid: Grid2D, gprime: Callable, gsecond: Callable | None = None):
        x2 = grid.x
        gs = None if gsecond is None else np.asarray(gsecond(x2), float) * np.ones(grid.n)
        return cls(grid, np.asarray(gprime(x2), float) * np.ones(grid.n), gs)

    @property
    def field2d(self) -> np.ndarray:
        """g' broadcast over the grid (rows index x1)."""
        return np.broadcast_to(self.gprime[None, :], (self.grid.n, self.grid.n))

    @property
    def sup(self) -> float:
        return float(np.abs(self.gprime).max())

    @property
    def is_constant(self) -> bool:
        return bool(np.ptp(self.gprime) == 0.0)

    def require_nontrivial(self):
        if self.sup == 0.0:
            raise ValueError("g' vanishes identically; no forcing to drive growth")

    def scaled(self, c: float) -> "StratProfile":
        gs = None if self.gsecond is None else c * self.gsecond
        return StratProfile(self.grid, c * self.gprime, gs)


@dataclass(frozen=True)
class SolverConfig:
    T: float = 1.0
    cfl_number: float = 0.5
    dt_max: float = 1e-2
    dealias: bool = True
    output_stride: int = 1
    formulation: str = "perturbation"
    besov_p: float = 2.0
    fixed_dt: Optional[float] = None
    blowup_factor: float = 1e3
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if not 0 < self.cfl_number <= 1:
            raise ValueError("cfl_number must lie in (0, 1]")
        if self.formulation not in ("perturbation", "full"):
            raise ValueError("formulation must be 'perturbation' or 'full'")
        if self.output_stride < 1:
            raise ValueError("output_stride must be >= 1")


EPS_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class FlowMapCloud:
    """Lagrangian particles; ``displacement`` is tracked without wrapping."""

    grid: Grid2D
    initial: np.ndarray  # (..., 2)
    displacement: np.ndarray

    @classmethod
    def on_grid(cls, grid: Grid2D, stride: int = 1) -> "FlowMapCloud":
        x = grid.x[::stride]
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        pts = np.stack([x1, x2], axis=-1)
        return cls(grid, pts, np.zeros_like(pts))

    @classmethod
    def from_points(cls, grid: Grid2D, pts) -> "FlowMapCloud":
        pts = np.asarray(pts, dtype=float)
        if pts.shape[-1] != 2:
            raise ValueError("points must have a trailing axis of length 2")
        return cls(grid, pts, np.zeros_like(pts))

    @property
    def positions(self) -> np.ndarray:
        L = self.grid.half_length
        return np.mod(self.initial + self.displacement + L, 2 * L) - L

    def max_displacement(self) -> float:
        d = self.displacement.reshape(-1, 2)
        return float(np.hypot(d[:, 0], d[:, 1]).max(initial=0.0))

    def moved(self, delta: np.ndarray) -> "FlowMapCloud":
        return FlowMapCloud(self.grid, self.initial, self.displacement + delta)


@dataclass(frozen=True, eq=False)
class SimState:
    t: float
    eta_hat: np.ndarray
    grid: Grid2D
    cloud: Optional[FlowMapCloud] = None

    @classmethod
    def from_field(cls, eta: RealField2D, t: float = 0.0, cloud=None) -> "SimState":
        if not np.all(np.isfinite(eta.samples)):
            raise ValueError("initial field is not finite")
        return cls(t, eta.grid.fft(eta.samples), eta.grid, cloud)

    @property
    def eta(self) -> RealField2D:
        return RealField2D(self.grid, self.grid.ifft(self.eta_hat))

    @property
    def u(self) -> tuple[RealField2D, RealField2D]:
        s = symbols(self.grid)
        g = self.grid
        u1, u2 = g.ifft_pair(s.u1 * self.eta_hat, s.u2 * self.eta_hat)
        return RealField2D(g, u1), RealField2D(g, u2)

    def u_sup(self) -> float:
        u1, u2 = self.u
        return float(np.hypot(u1.samples, u2.samples).max())


# ---------------------------------------------------------------------------
# right-hand sides (spectral in, spectral out)

def _rhs_hat(c: np.ndarray, grid: Grid2D, gprime2d, dealias: bool) -> np.ndarray:
    s = symbols(grid)
    if dealias:
        c = c * s.dealias_mask
    u1, u2 = grid.ifft_pair(s.u1 * c, s.u2 * c)
    e1, e2 = grid.ifft_pair(s.d1 * c, s.d2 * c)
    adv = u1 * e1 + u2 * e2
    if gprime2d is not None:
        # R1^2 eta has the same symbol as u2
        adv = adv + gprime2d * u2
    out = grid.fft(-adv)
    if dealias:
        out *= s.dealias_mask
    return out


def perturbation_rhs(eta: RealField2D, profile: StratProfile, dealias: bool = True) -> RealField2D:
    g = eta.grid
    return RealField2D(g, g.ifft(_rhs_hat(g.fft(eta.samples), g, profile.field2d, dealias)))


def full_rhs(rho: RealField2D, dealias: bool = True) -> RealField2D:
    g = rho.grid
    return RealField2D(g, g.ifft(_rhs_hat(g.fft(rho.samples), g, None, dealias)))


def cfl_dt(state: SimState, config: SolverConfig, profile: StratProfile | None = None) -> float:
    gsup = profile.sup if (profile is not None and config.formulation == "perturbation") else 0.0
    speed = max(state.u_sup(), gsup, EPS_FLOOR)
    return min(config.dt_max, config.cfl_number * state.grid.h / speed)


def _particle_velocity(c: np.ndarray, grid: Grid2D, cloud: FlowMapCloud, offset, dealias: bool):
    s = symbols(grid)
    if dealias:
        c = c * s.dealias_mask
    pts = cloud.initial + cloud.displacement + offset
    v1 = fourier_interpolate(s.u1 * c, grid, pts)
    v2 = fourier_interpolate(s.u2 * c, grid, pts)
    return np.stack([v1, v2], axis=-1)


def step_rk4(state: SimState, dt: float, profile: StratProfile | None,
             config: SolverConfig = SolverConfig()) -> SimState:
    """One classical RK4 step; particles, if present, ride the same stages."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = state.grid
    gp = None
    if config.formulation == "perturbation":
        if profile is None:
            raise ValueError("perturbation form needs a StratProfile")
        gp = profile.field2d
    c0 = state.eta_hat
    cloud = state.cloud

    def f(c):
        return _rhs_hat(c, grid, gp, config.dealias)

    k1 = f(c0)
    c2 = c0 + 0.5 * dt * k1
    k2 = f(c2)
    c3 = c0 + 0.5 * dt * k2
    k3 = f(c3)
    c4 = c0 + dt * k3
    k4 = f(c4)
    c_new = c0 + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(c_new)):
        raise BlowUpError("non-finite field during RK4 step; suspected blow-up", state.t)

    new_cloud = None
    if cloud is not None:
        dl = config.dealias
        p1 = _particle_velocity(c0, grid, cloud, 0.0, dl)
        p2 = _particle_velocity(c2, grid, cloud, 0.5 * dt * p1, dl)
        p3 = _particle_velocity(c3, grid, cloud, 0.5 * dt * p2, dl)
        p4 = _particle_velocity(c4, grid, cloud, dt * p3, dl)
        new_cloud = cloud.moved((dt / 6.0) * (p1 + 2 * p2 + 2 * p3 + p4))
    return SimState(state.t + dt, c_new, grid, new_cloud)


def run(eta0: RealField2D, profile: StratProfile | None, config: SolverConfig,
        observers: Sequence[Callable] = (), cloud: FlowMapCloud | None = None,
        record=None):
    """Integrate to ``config.T``; returns the NormSeries recorded every ``output_stride`` steps.

    Observers are called as ``obs(state)`` at each output; a truthy return
    stops the run.  ``record`` overrides the per-output diagnostic record.
    """
    from .diagnostics import NormSeries, make_recorder

    if profile is not None and profile.grid != eta0.grid:
        raise ValueError("profile and field live on different grids")
    state = SimState.from_field(eta0, 0.0, cloud)
    record = record or make_recorder(eta0.grid, config.besov_p, profile)
    series = NormSeries()
    eta_inf0 = max(eta0.max_abs(), EPS_FLOOR)

    def emit(st):
        series.append(record(st))
        return any(obs(st) for obs in observers)

    stop = emit(state)
    step = 0
    while not stop and state.t < config.T * (1 - 1e-14):
        if step >= config.max_steps:
            raise BlowUpError("step budget exhausted", state.t, series)
        dt = config.fixed_dt or cfl_dt(state, config, profile)
        dt = min(dt, config.T - state.t)
        try:
            state = step_rk4(state, dt, profile, config)
        except BlowUpError as exc:
            exc.series = series
            raise
        step += 1
        if state.eta.max_abs() > config.blowup_factor * eta_inf0:
            emit(state)
            raise BlowUpError(
                f"|eta|_inf exceeded {config.blowup_factor:g}x its initial value", state.t, series)
        if step % config.output_stride == 0:
            stop = emit(state)
    series.final_state = state
    series.steps = step
    return series
