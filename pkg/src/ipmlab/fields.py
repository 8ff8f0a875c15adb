"""Periodic grid, spectral transforms and Fourier multipliers.

The box is ``[-L, L)^2`` sampled at ``n`` points per axis.  Coefficients are
stored in numpy FFT order with the forward transform scaled by ``1/n^2`` so
that the zero mode equals the field mean.
"""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np


@dataclass(frozen=True)
class Grid2D:
    half_length: float = 4.0
    n: int = 512

    def __post_init__(self):
        n = self.n
        if n < 16 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 16, got {n}")
        if not self.half_length > 0:
            raise ValueError("half_length must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.half_length / self.n

    @property
    def box_length(self) -> float:
        return 2.0 * self.half_length

    @cached_property
    def x(self) -> np.ndarray:
        return -self.half_length + self.h * np.arange(self.n)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.x, indexing="ij")

    @cached_property
    def m(self) -> np.ndarray:
        """Integer mode numbers in FFT order, in ``[-n/2, n/2)``."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)

    @cached_property
    def k(self) -> np.ndarray:
        return (np.pi / self.half_length) * self.m

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.k, self.k, indexing="ij")

    @cached_property
    def kabs(self) -> np.ndarray:
        k1, k2 = self.wavenumbers
        return np.hypot(k1, k2)

    @cached_property
    def nyquist_free(self) -> np.ndarray:
        """False on the row/column carrying the unpaired mode ``-n/2``."""
        m1, m2 = np.meshgrid(self.m, self.m, indexing="ij")
        half = self.n // 2
        return (m1 != -half) & (m2 != -half)

    @property
    def k_min(self) -> float:
        return np.pi / self.half_length

    @property
    def k_max(self) -> float:
        return float(self.kabs.max())

    def fft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.fft2(a) / self.n**2

    def ifft(self, c: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(c * self.n**2).real

    def ifft_pair(self, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Two real inverse transforms for the price of one (a, b Hermitian)."""
        z = np.fft.ifft2((a + 1j * b) * self.n**2)
        return z.real, z.imag

    def sample(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "RealField2D":
        x1, x2 = self.mesh
        return RealField2D(self, np.asarray(fn(x1, x2), dtype=float))

    def zeros(self) -> "RealField2D":
        return RealField2D(self, np.zeros((self.n, self.n)))


@dataclass(frozen=True, eq=False)
class RealField2D:
    grid: Grid2D
    samples: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        if self.samples.shape != (n, n):
            raise ValueError(f"samples must have shape {(n, n)}, got {self.samples.shape}")

    def __add__(self, other):
        return RealField2D(self.grid, self.samples + _values(other))

    def __sub__(self, other):
        return RealField2D(self.grid, self.samples - _values(other))

    def __mul__(self, other):
        return RealField2D(self.grid, self.samples * _values(other))

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return RealField2D(self.grid, -self.samples)

    def __truediv__(self, c: float):
        return RealField2D(self.grid, self.samples / c)

    def max_abs(self) -> float:
        return float(np.abs(self.samples).max())

    def mean(self) -> float:
        return float(self.samples.mean())


@dataclass(frozen=True, eq=False)
class SpectralField2D:
    grid: Grid2D
    coeffs: np.ndarray

    def hermitian_defect(self) -> float:
        """max |c(-k) - conj(c(k))| over the Nyquist-free lattice."""
        c = self.coeffs
        flipped = np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))
        return float(np.abs((flipped - c.conj())[self.grid.nyquist_free]).max(initial=0.0))


def _values(other):
    return other.samples if isinstance(other, RealField2D) else other


@dataclass(frozen=True, eq=False)
class MultiplierSpec:
    """Fourier multiplier sampled on the lattice of a grid.

    ``symbol[0, 0]`` is ignored; the zero mode always receives
    ``zero_mode_value``.
    """

    symbol: np.ndarray
    zero_mode_value: complex = 0.0

    @classmethod
    def from_function(cls, grid: Grid2D, fn, zero_mode_value: complex = 0.0, mask_nyquist=True):
        k1, k2 = grid.wavenumbers
        kk = grid.kabs.copy()
        kk[0, 0] = 1.0  # placeholder; zero mode is overwritten
        sym = np.asarray(fn(k1, k2, kk), dtype=complex)
        if mask_nyquist:
            sym = np.where(grid.nyquist_free, sym, 0.0)
        sym[0, 0] = zero_mode_value
        if not np.all(np.isfinite(sym)):
            raise ValueError("multiplier symbol is not finite on the lattice")
        return cls(sym, zero_mode_value)

    @property
    def full_symbol(self) -> np.ndarray:
        s = self.symbol.copy()
        s[0, 0] = self.zero_mode_value
        return s

    def __mul__(self, other: "MultiplierSpec") -> "MultiplierSpec":
        return MultiplierSpec(self.full_symbol * other.full_symbol,
                              self.zero_mode_value * other.zero_mode_value)


Field = Union[RealField2D, SpectralField2D]


def transform(field: Field, direction: str = "forward") -> Field:
    """Forward (real -> spectral) or inverse (spectral -> real) transform."""
    if direction == "forward":
        if not isinstance(field, RealField2D):
            raise TypeError("forward transform expects a RealField2D")
        if not np.all(np.isfinite(field.samples)):
            raise ValueError("field contains non-finite samples")
        return SpectralField2D(field.grid, field.grid.fft(field.samples))
    if direction == "inverse":
        if not isinstance(field, SpectralField2D):
            raise TypeError("inverse transform expects a SpectralField2D")
        if not np.all(np.isfinite(field.coeffs)):
            raise ValueError("coefficients contain non-finite values")
        return RealField2D(field.grid, field.grid.ifft(field.coeffs))
    raise ValueError(f"direction must be 'forward' or 'inverse', not {direction!r}")


def apply_multiplier(field: SpectralField2D, m: MultiplierSpec) -> SpectralField2D:
    if m.symbol.shape != field.coeffs.shape:
        raise ValueError("multiplier does not cover the field's lattice")
    return SpectralField2D(field.grid, field.coeffs * m.full_symbol)


# ---------------------------------------------------------------------------
# Standard symbols.  Odd symbols vanish on the Nyquist row/column.

class Symbols:
    """Precomputed multiplier arrays for one grid (shared, read-only)."""

    def __init__(self, grid: Grid2D, sign_riesz: float = 1.0):
        self.grid = grid
        k1, k2 = grid.wavenumbers
        ok = grid.nyquist_free
        kk = grid.kabs.copy()
        kk[0, 0] = 1.0
        self.d1 = np.where(ok, 1j * k1, 0.0)
        self.d2 = np.where(ok, 1j * k2, 0.0)
        self.lap = -(k1**2 + k2**2)
        self.inv_lambda = 1.0 / kk
        self.inv_lambda[0, 0] = 0.0
        # sign_riesz exists only so the verification suite can inject a fault
        self.riesz1 = sign_riesz * np.where(ok, 1j * k1 / kk, 0.0)
        self.riesz1[0, 0] = 0.0
        self.riesz1_sq = self.riesz1 * self.riesz1
        # u = grad_perp Lambda^{-1} R1 eta
        lam_r1 = self.inv_lambda * self.riesz1
        self.u1 = -self.d2 * lam_r1
        self.u2 = self.d1 * lam_r1
        m1, m2 = np.meshgrid(grid.m, grid.m, indexing="ij")
        cut = grid.n // 3
        self.dealias_mask = (np.abs(m1) <= cut) & (np.abs(m2) <= cut)


_SYMBOL_CACHE: dict[Grid2D, Symbols] = {}


def symbols(grid: Grid2D) -> Symbols:
    s = _SYMBOL_CACHE.get(grid)
    if s is None:
        s = _SYMBOL_CACHE[grid] = Symbols(grid)
    return s


@contextmanager
def riesz_sign_fault(grid: Grid2D):
    """Test hook: flip the sign of the R1 symbol on ``grid`` inside the block."""
    saved = _SYMBOL_CACHE.get(grid)
    _SYMBOL_CACHE[grid] = Symbols(grid, sign_riesz=-1.0)
    try:
        yield
    finally:
        if saved is None:
            _SYMBOL_CACHE.pop(grid, None)
        else:
            _SYMBOL_CACHE[grid] = saved


def multiplier(grid: Grid2D, name: str) -> MultiplierSpec:
    """Named multiplier: d1, d2, lap, inv_lambda, riesz1, riesz1_sq, identity."""
    if name == "identity":
        return MultiplierSpec(np.ones((grid.n, grid.n), complex), 1.0)
    sym = getattr(symbols(grid), name)
    return MultiplierSpec(np.asarray(sym, complex), complex(sym[0, 0]))


def _apply(field: RealField2D, sym: np.ndarray) -> RealField2D:
    g = field.grid
    return RealField2D(g, g.ifft(g.fft(field.samples) * sym))


def derivative(field: RealField2D, order1: int = 0, order2: int = 0) -> RealField2D:
    s = symbols(field.grid)
    return _apply(field, s.d1**order1 * s.d2**order2)


def laplacian(field: RealField2D) -> RealField2D:
    return _apply(field, symbols(field.grid).lap)


def riesz1(field: RealField2D) -> RealField2D:
    """R1 = d/dx1 (-Lap)^{-1/2}; the mean is sent to zero."""
    return _apply(field, symbols(field.grid).riesz1)


def riesz1_sq(field: RealField2D) -> RealField2D:
    return _apply(field, symbols(field.grid).riesz1_sq)


def grad_perp(field: RealField2D) -> tuple[RealField2D, RealField2D]:
    s = symbols(field.grid)
    return _apply(field, -s.d2), _apply(field, s.d1)


def gradient(field: RealField2D) -> tuple[RealField2D, RealField2D]:
    s = symbols(field.grid)
    return _apply(field, s.d1), _apply(field, s.d2)


def divergence(v1: RealField2D, v2: RealField2D) -> RealField2D:
    g = v1.grid
    s = symbols(g)
    return RealField2D(g, g.ifft(s.d1 * g.fft(v1.samples) + s.d2 * g.fft(v2.samples)))


def biot_savart(eta: RealField2D) -> tuple[RealField2D, RealField2D]:
    """IPM velocity u = grad_perp (-Lap)^{-1/2} R1 eta."""
    g = eta.grid
    s = symbols(g)
    c = g.fft(eta.samples)
    return RealField2D(g, g.ifft(s.u1 * c)), RealField2D(g, g.ifft(s.u2 * c))


def dealias(field: SpectralField2D) -> SpectralField2D:
    """2/3 rule: zero every mode with max(|m1|, |m2|) > n/3."""
    mask = symbols(field.grid).dealias_mask
    return SpectralField2D(field.grid, np.where(mask, field.coeffs, 0.0))


def fourier_interpolate(coeffs: np.ndarray, grid: Grid2D, points: np.ndarray, eps: float = 1e-13) -> np.ndarray:
    """Evaluate the trigonometric interpolant with FFT-ordered ``coeffs`` at ``points``.

    ``points`` has shape (..., 2).  Uses a type-2 non-uniform FFT.
    """
    import finufft

    pts = np.asarray(points, dtype=float)
    shape = pts.shape[:-1]
    flat = pts.reshape(-1, 2)
    scale = np.pi / grid.half_length
    # the DFT phase is referenced to the first sample at x = -L
    xs = (flat[:, 0] + grid.half_length) * scale
    ys = (flat[:, 1] + grid.half_length) * scale
    c = np.fft.fftshift(np.asarray(coeffs, dtype=complex))
    out = finufft.nufft2d2(xs, ys, c, isign=1, eps=eps, modeord=0)
    return out.real.reshape(shape)
