"""Measured quantities along IPM runs: norms, flow map, Duhamel lower bound."""
from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .fields import Grid2D, RealField2D, fourier_interpolate, symbols
from .littlewood_paley import (BesovParams, DyadicPartition, besov_norm, block_norms,
                               build_partition)
from .solver import FlowMapCloud, SimState, StratProfile

__all__ = [
    "NormRecord", "NormSeries", "FlowMapCloud", "LowerBoundReport",
    "record_norms", "make_recorder", "leading_term", "advect_flowmap",
    "SnapshotVelocity", "commutator_probe", "envelope_upper", "gronwall_bound",
    "lower_bound_report", "growth_fit", "velocity_integral", "leading_term_at",
    "profile_besov_norm", "calibrate_envelope", "envelope_blowup_time", "forcing_field",
]

CSV_COLUMNS = ("t", "w1inf", "linf_theta", "besov_low", "besov_high", "u_inf", "flow_disp")


@dataclass(frozen=True)
class NormRecord:
    t: float
    grad_inf: float
    w1inf: float
    linf_theta: float
    besov_low: float
    besov_high: float
    u_inf: float
    flow_disp: float


class NormSeries:
    def __init__(self, records: Iterable[NormRecord] = ()):
        self.records: list[NormRecord] = []
        self.final_state: Optional[SimState] = None
        self.steps = 0
        for r in records:
            self.append(r)

    def append(self, rec: NormRecord) -> None:
        if self.records and not rec.t > self.records[-1].t:
            raise ValueError("records must have strictly increasing t")
        if not all(math.isfinite(v) for v in astuple(rec)):
            raise ValueError(f"non-finite entry in record at t={rec.t}")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i) -> NormRecord:
        return self.records[i]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def at(self, t: float, tol: float = 1e-12) -> NormRecord:
        ts = self.t
        if not len(ts) or t < ts[0] - tol or t > ts[-1] + tol:
            raise ValueError(f"t={t} outside recorded range")
        return self.records[int(np.argmin(np.abs(ts - t)))]

    def window(self, t0: float, t1: float) -> "NormSeries":
        return NormSeries(r for r in self.records if t0 - 1e-15 <= r.t <= t1 + 1e-15)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in self.records:
                w.writerow([repr(float(getattr(r, c))) for c in CSV_COLUMNS])

    @classmethod
    def read_csv(cls, path) -> "NormSeries":
        out = cls()
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                vals = {c: float(row[c]) for c in CSV_COLUMNS}
                out.append(NormRecord(grad_inf=vals["linf_theta"], **vals))
        return out


# ---------------------------------------------------------------------------

def _grad_sup(grid: Grid2D, c: np.ndarray) -> float:
    s = symbols(grid)
    return float(np.hypot(*grid.ifft_pair(s.d1 * c, s.d2 * c)).max())


def record_norms(state: SimState, partition: DyadicPartition, p: float = 2.0) -> NormRecord:
    g = state.grid
    c = state.eta_hat
    eta = state.eta
    grad = _grad_sup(g, c)
    eta_field = RealField2D(g, eta.samples)
    norms = block_norms(eta_field, partition, p)
    low = besov_norm(eta_field, BesovParams(2.0 / p, p, 1), partition, norms)
    high = besov_norm(eta_field, BesovParams(2.0 / p + 1, p, 1), partition, norms)
    disp = state.cloud.max_displacement() if state.cloud is not None else 0.0
    return NormRecord(
        t=state.t,
        grad_inf=grad,
        w1inf=eta.max_abs() + grad,
        # |grad_perp eta| = |grad eta| pointwise
        linf_theta=grad,
        besov_low=low,
        besov_high=high,
        u_inf=state.u_sup(),
        flow_disp=disp,
    )


def make_recorder(grid: Grid2D, p: float = 2.0, profile: StratProfile | None = None) -> Callable:
    partition = build_partition(grid)
    return lambda state: record_norms(state, partition, p)


def forcing_field(eta0: RealField2D, profile: StratProfile) -> tuple[np.ndarray, np.ndarray]:
    """Components of -g' R1^2 grad_perp eta0 on the grid."""
    g = eta0.grid
    s = symbols(g)
    c = g.fft(eta0.samples)
    gp = profile.field2d
    th1 = g.ifft(s.riesz1_sq * (-s.d2) * c)
    th2 = g.ifft(s.riesz1_sq * s.d1 * c)
    return -gp * th1, -gp * th2


def leading_term(eta0: RealField2D, profile: StratProfile) -> float:
    """||g' R1^2 grad_perp eta0||_inf (pointwise Euclidean magnitude)."""
    f1, f2 = forcing_field(eta0, profile)
    return float(np.hypot(f1, f2).max())


# ---------------------------------------------------------------------------
# flow map

class SnapshotVelocity:
    """Velocity history from snapshots, linear in time between them."""

    def __init__(self, times: Sequence[float], u1_hat: Sequence[np.ndarray], u2_hat: Sequence[np.ndarray]):
        self.times = np.asarray(times, float)
        self.u1_hat = list(u1_hat)
        self.u2_hat = list(u2_hat)
        if not (len(self.times) == len(self.u1_hat) == len(self.u2_hat)):
            raise ValueError("snapshot lists differ in length")

    @classmethod
    def from_fields(cls, times, velocities):
        u1 = [v[0].grid.fft(v[0].samples) for v in velocities]
        u2 = [v[1].grid.fft(v[1].samples) for v in velocities]
        return cls(times, u1, u2)

    def __call__(self, t: float):
        ts = self.times
        if t < ts[0] - 1e-12 or t > ts[-1] + 1e-12:
            raise ValueError(f"velocity history does not cover t={t}")
        if len(ts) == 1:
            return self.u1_hat[0], self.u2_hat[0]
        i = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2))
        w = (t - ts[i]) / (ts[i + 1] - ts[i])
        return ((1 - w) * self.u1_hat[i] + w * self.u1_hat[i + 1],
                (1 - w) * self.u2_hat[i] + w * self.u2_hat[i + 1])


def advect_flowmap(cloud: FlowMapCloud, velocity_history: Callable, dt_schedule: Sequence[float],
                   t0: float = 0.0) -> FlowMapCloud:
    """RK4 particle advection; ``velocity_history(t)`` returns FFT-ordered (u1_hat, u2_hat).

    Velocities are evaluated at particles by trigonometric interpolation.
    """
    grid = cloud.grid

    def vel(t, offset):
        c1, c2 = velocity_history(t)
        pts = cloud_pts + offset
        v = np.stack([fourier_interpolate(c1, grid, pts), fourier_interpolate(c2, grid, pts)], axis=-1)
        if not np.all(np.isfinite(v)):
            raise FloatingPointError("particle velocity interpolation failed")
        return v

    t = t0
    for dt in dt_schedule:
        cloud_pts = cloud.initial + cloud.displacement
        k1 = vel(t, 0.0)
        k2 = vel(t + dt / 2, dt / 2 * k1)
        k3 = vel(t + dt / 2, dt / 2 * k2)
        k4 = vel(t + dt, dt * k3)
        cloud = cloud.moved(dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
        t += dt
    return cloud


def velocity_integral(series: NormSeries) -> float:
    """Trapezoid rule for the integral of ||u||_inf over the series."""
    return float(np.trapezoid(series.column("u_inf"), series.t)) if len(series) > 1 else 0.0


def _fold_check(cloud: FlowMapCloud) -> None:
    d = cloud.displacement
    h = cloud.grid.h
    if d.shape[:2] != (cloud.grid.n, cloud.grid.n):
        raise ValueError("commutator probe needs particles seeded on the full grid")
    dd1 = (np.roll(d, -1, axis=0) - np.roll(d, 1, axis=0)) / (2 * h)
    dd2 = (np.roll(d, -1, axis=1) - np.roll(d, 1, axis=1)) / (2 * h)
    jac = (1 + dd1[..., 0]) * (1 + dd2[..., 1]) - dd1[..., 1] * dd2[..., 0]
    if jac.min() <= 0:
        raise ValueError("particle grid is folded (non-positive Jacobian)")


def commutator_probe(theta, cloud: FlowMapCloud) -> float:
    """max |R1^2(theta) o Phi - R1^2(theta o Phi)| over the particle grid.

    ``theta`` is a RealField2D or a tuple of them (taken componentwise, then
    the pointwise Euclidean magnitude).
    """
    comps = theta if isinstance(theta, (tuple, list)) else (theta,)
    grid = comps[0].grid
    _fold_check(cloud)
    g = grid
    s = symbols(g)
    pts = cloud.initial + cloud.displacement
    acc = np.zeros(pts.shape[:-1])
    for comp in comps:
        c = g.fft(comp.samples)
        first = fourier_interpolate(s.riesz1_sq * c, g, pts)
        composed = fourier_interpolate(c, g, pts)
        second = g.ifft(s.riesz1_sq * g.fft(composed))
        acc += (first - second) ** 2
    return float(np.sqrt(acc).max())


# ---------------------------------------------------------------------------
# a priori envelopes

def gronwall_bound(C0: float, a_integral: float, alpha: float = 1.0) -> float:
    """Bound on f(t) from f <= C0 + int a f^alpha, given A = int_0^t a."""
    if alpha == 1.0:
        try:
            return C0 * math.exp(a_integral)
        except OverflowError:
            return math.inf
    base = C0 ** (1 - alpha) + (1 - alpha) * a_integral
    if base <= 0:
        raise ValueError("Gronwall bound has blown up (base <= 0)")
    return base ** (1.0 / (1 - alpha))


def envelope_blowup_time(eta0_high: float, C: float, c_g: float) -> float:
    A = c_g / 2 + 2 * eta0_high
    return math.inf if C * A == 0 else 1.0 / (C * A)


def envelope_upper(t: float, eta0_norms: tuple[float, float], constants: tuple[float, float]) -> tuple[float, float]:
    """(bound on ||eta(t)||_{B^{2/p}_{p,1}}, bound on ||eta(t)||_{B^{2/p+1}_{p,1}}).

    ``eta0_norms`` is (low, high) at t = 0; ``constants`` is (C, c_g).
    """
    low0, high0 = eta0_norms
    C, c_g = constants
    A = c_g / 2 + 2 * high0
    t_star = envelope_blowup_time(high0, C, c_g)
    if t >= t_star:
        raise ValueError(f"t={t} is past the envelope blow-up time t*={t_star:.6g}")
    # alpha = 2 Gronwall with f = sqrt(c_g) |eta|^{1/2} + |eta|
    high = gronwall_bound(A, C * t, alpha=2.0)
    low = gronwall_bound(low0, t * (C * high + C * c_g), alpha=1.0)
    return low, high


# ---------------------------------------------------------------------------
# lower bound

@dataclass(frozen=True)
class LowerBoundReport:
    t: float
    theta_inf: float
    leading: float
    linear_term: float
    theta0_inf: float
    threshold: float
    verdict: bool
    commutator: Optional[float] = None
    remainder: Optional[float] = None

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def lower_bound_report(series: NormSeries, leading: float, t: float,
                       commutator: float | None = None, remainder: float | None = None) -> LowerBoundReport:
    """Compare ||Theta(t)||_inf with (1/2) t * leading - ||Theta_0||_inf."""
    rec = series.at(t)
    theta0 = series[0].linf_theta
    linear = rec.t * leading
    threshold = 0.5 * linear - theta0
    return LowerBoundReport(
        t=rec.t, theta_inf=rec.linf_theta, leading=leading, linear_term=linear,
        theta0_inf=theta0, threshold=threshold, verdict=bool(rec.linf_theta >= threshold),
        commutator=commutator, remainder=remainder)


def growth_fit(series: NormSeries, window: tuple[float, float]) -> float:
    """Least-squares slope of ||Theta(t)||_inf over ``window``."""
    sub = series.window(*window)
    if len(sub) < 3:
        raise ValueError(f"growth_fit needs >= 3 samples in the window, got {len(sub)}")
    slope, _ = np.polyfit(sub.t, sub.column("linf_theta"), 1)
    return float(slope)


def leading_term_at(eta0: RealField2D, profile: StratProfile, point) -> float:
    """|g' R1^2 grad_perp eta0| at a single point (trigonometric interpolation)."""
    f1, f2 = forcing_field(eta0, profile)
    g = eta0.grid
    pts = np.asarray(point, float).reshape(1, 2)
    v1 = fourier_interpolate(g.fft(f1), g, pts)[0]
    v2 = fourier_interpolate(g.fft(f2), g, pts)[0]
    return float(math.hypot(v1, v2))


def profile_besov_norm(profile: StratProfile, p: float = 2.0, partition: DyadicPartition | None = None) -> float:
    """||g'||_{B^{2/p+1}_{p,1}} on the box, the measured default for c_g."""
    g = profile.grid
    partition = partition or build_partition(g)
    f = RealField2D(g, np.array(profile.field2d))
    return besov_norm(f, BesovParams(2.0 / p + 1, p, 1), partition)


def calibrate_envelope(series: NormSeries, c_g: float, iters: int = 200) -> float:
    """Smallest C for which envelope_upper dominates both measured Besov norms on ``series``.

    Both envelopes increase with C below the cap where t* reaches the last
    sample, so the answer is found by bisection on [0, cap).  The result is
    meant to be frozen and reused on other runs.
    """
    low0, high0 = series[0].besov_low, series[0].besov_high
    A = c_g / 2 + 2 * high0
    t_last = series[-1].t

    def dominates(C):
        for r in series.records:
            try:
                low, high = envelope_upper(r.t, (low0, high0), (C, c_g))
            except ValueError:
                return False
            if high < r.besov_high or low < r.besov_low:
                return False
        return True

    if dominates(0.0):
        return 0.0
    if t_last <= 0 or A <= 0:
        raise ValueError("series too short to calibrate")
    lo, hi = 0.0, (1.0 - 1e-12) / (A * t_last)
    if not dominates(hi):
        raise ValueError("no envelope constant below the blow-up cap dominates this run")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if dominates(mid) else (mid, hi)
        if hi - lo <= 1e-12 * hi:
            break
    return hi
