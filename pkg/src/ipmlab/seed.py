"""The singular seed family f_N = d1 Lap(G_N chi) and its analytic jet.

G_N(x) = P(x) log(|x|^2 + 2^-N) with the harmonic quartic
P = x1^3 x2 - x1 x2^3.  The fourth derivative d1^3 d2 G_N carries the
term 6 log(|x|^2 + 2^-N), which is what drives the norm inflation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from .fields import Grid2D, RealField2D, symbols
from .littlewood_paley import smooth_step


def eval_harmonic_P(x1, x2):
    return x1**3 * x2 - x1 * x2**3


def eval_cutoff_radial(r, r_inner: float = 1.0, r_outer: float = 2.0):
    """psi(2-r) / (psi(2-r) + psi(r-1)) with psi(t) = exp(-1/t), rescaled to the radii."""
    return smooth_step((np.asarray(r, dtype=float) - r_inner) / (r_outer - r_inner))


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class SeedSpec:
    N: int
    grid: Grid2D = field(default_factory=Grid2D)
    x0: tuple[float, float] = (0.0, 0.0)
    r_inner: float = 1.0
    r_outer: float = 2.0
    strict: bool = True

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        L = self.grid.half_length
        reach = max(abs(self.x0[0]), abs(self.x0[1])) + self.r_outer
        if reach > 0.75 * L:
            raise ValueError(
                f"B(x0, {self.r_outer}) needs a margin of L/4 inside the box; "
                f"increase half_length above {reach / 0.75:g}")

    @property
    def delta(self) -> float:
        return 2.0 ** -self.N

    @property
    def core_scale(self) -> float:
        return 2.0 ** (-self.N / 2)

    @property
    def resolved(self) -> bool:
        return self.core_scale >= 4 * self.grid.h

    def min_resolving_n(self) -> int:
        need = 8 * self.grid.half_length / self.core_scale
        return 2 ** max(4, math.ceil(math.log2(need) - 1e-12))

    def check_resolution(self) -> None:
        if self.resolved:
            return
        msg = (f"log core 2^(-N/2) = {self.core_scale:.3g} is below 4h = {4 * self.grid.h:.3g} "
               f"for N={self.N}; need n >= {self.min_resolving_n()}")
        if self.strict:
            raise ResolutionError(msg)
        warnings.warn(msg, stacklevel=3)


def eval_G_N(spec: SeedSpec, x1, x2):
    return eval_harmonic_P(x1, x2) * np.log(x1**2 + x2**2 + spec.delta)


def eval_cutoff(spec: SeedSpec, x1, x2):
    r = np.hypot(np.asarray(x1) - spec.x0[0], np.asarray(x2) - spec.x0[1])
    return eval_cutoff_radial(r, spec.r_inner, spec.r_outer)


def sample_seed_product(spec: SeedSpec) -> RealField2D:
    """G_N(x - x0) chi(x - x0) on the grid."""
    x1, x2 = spec.grid.mesh
    y1, y2 = x1 - spec.x0[0], x2 - spec.x0[1]
    vals = eval_G_N(spec, y1, y2) * eval_cutoff_radial(np.hypot(y1, y2), spec.r_inner, spec.r_outer)
    return RealField2D(spec.grid, vals)


def build_f_N(spec: SeedSpec) -> RealField2D:
    spec.check_resolution()
    g = spec.grid
    s = symbols(g)
    c = g.fft(sample_seed_product(spec).samples)
    return RealField2D(g, g.ifft(s.d1 * s.lap * c))


def build_eta0(spec: SeedSpec) -> RealField2D:
    f = build_f_N(spec)
    return RealField2D(f.grid, f.samples / math.sqrt(spec.N))


# ---------------------------------------------------------------------------
# symbolic jet

_X1, _X2, _D = sp.symbols("x1 x2 delta", real=True)
_Q = _X1**2 + _X2**2 + _D
_G = (_X1**3 * _X2 - _X1 * _X2**3) * sp.log(_Q)


@lru_cache(maxsize=None)
def _derivative_expr(a1: int, a2: int, lap: bool) -> sp.Expr:
    e = _G
    if lap:
        e = sp.diff(e, _X1, 2) + sp.diff(e, _X2, 2)
    if a1:
        e = sp.diff(e, _X1, a1)
    if a2:
        e = sp.diff(e, _X2, a2)
    return sp.together(sp.expand(e))


@lru_cache(maxsize=None)
def _lambdified(a1: int, a2: int, lap: bool):
    return sp.lambdify((_X1, _X2, _D), _derivative_expr(a1, a2, lap), "numpy")


@lru_cache(maxsize=None)
def log_core_split() -> tuple[sp.Expr, sp.Expr]:
    """(6 log(q), G1) with d1^3 d2 G = 6 log q + G1 and G1 rational."""
    full = sp.expand(sp.diff(_G, _X1, 3, _X2))
    log_part = 6 * sp.log(_Q)
    rest = sp.simplify(full - log_part)
    if rest.has(sp.log):
        raise AssertionError("remainder of d1^3 d2 G_N still contains a logarithm")
    return log_part, rest


class AnalyticJet:
    """Closed-form derivatives of G_N (and of Lap G_N) at fixed N."""

    def __init__(self, N: int):
        self.N = N
        self.delta = 2.0 ** -N

    def G(self, x1, x2):
        return _lambdified(0, 0, False)(x1, x2, self.delta)

    def d(self, a1: int, a2: int, x1, x2):
        """d1^a1 d2^a2 G_N."""
        return _lambdified(a1, a2, False)(x1, x2, self.delta) + 0.0 * x1

    def d_lap(self, a1: int, a2: int, x1, x2):
        """d1^a1 d2^a2 Lap G_N."""
        return _lambdified(a1, a2, True)(x1, x2, self.delta) + 0.0 * x1

    def dx13_dx2(self, x1, x2):
        return self.d(3, 1, x1, x2)

    def remainder_G1(self, x1, x2):
        return _remainder_fn()(x1, x2, self.delta) + 0.0 * x1


@lru_cache(maxsize=None)
def _remainder_fn():
    return sp.lambdify((_X1, _X2, _D), log_core_split()[1], "numpy")


def analytic_dx13_dx2_G(spec: SeedSpec, x1, x2) -> tuple:
    """d1^3 d2 G_N at (x1, x2) split as (total, 6 log(|x|^2 + 2^-N), G1)."""
    jet = AnalyticJet(spec.N)
    log_part = 6.0 * np.log(np.asarray(x1, float) ** 2 + np.asarray(x2, float) ** 2 + spec.delta)
    rest = jet.remainder_G1(x1, x2)
    return log_part + rest, log_part, rest


def dx13_dx2_at_origin_symbolic(N: int) -> sp.Expr:
    """Exact value of d1^3 d2 G_N(0, 0) as a sympy number."""
    e = _derivative_expr(3, 1, False)
    return sp.simplify(e.subs({_X1: 0, _X2: 0, _D: sp.Rational(1, 2**N)}))


def lap_G_closed_form(N: int, x1, x2):
    """Lap G_N as (16 x1^3 x2 - 16 x1 x2^3) / q + 2^(2-N) P / q^2."""
    q = x1**2 + x2**2 + 2.0**-N
    return (16 * x1**3 * x2 - 16 * x1 * x2**3) / q + 2.0 ** (2 - N) * eval_harmonic_P(x1, x2) / q**2
