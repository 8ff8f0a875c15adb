"""Dyadic decomposition on the periodic lattice and the norms built on it."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .fields import Grid2D, RealField2D, gradient

CHI_INNER = 3.0 / 4.0
CHI_OUTER = 4.0 / 3.0


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 1 for t <= 0, 0 for t >= 1."""
    a = _psi(1.0 - np.asarray(t, dtype=float))
    b = _psi(t)
    return a / (a + b)


def chi_profile(rho):
    """Radial low-frequency cutoff: 1 on |xi| <= 3/4, 0 on |xi| >= 4/3."""
    return smooth_step((np.asarray(rho, dtype=float) - CHI_INNER) / (CHI_OUTER - CHI_INNER))


def phi_profile(rho):
    """Annular bump chi(xi/2) - chi(xi), supported in 3/4 <= |xi| <= 8/3."""
    rho = np.asarray(rho, dtype=float)
    return chi_profile(rho / 2.0) - chi_profile(rho)


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    grid: Grid2D
    j_min: int
    j_max: int
    _blocks: dict = field(default_factory=dict, repr=False)

    def symbol(self, j: int, homogeneous: bool = False) -> np.ndarray:
        lo = self.j_min if homogeneous else -1
        if not lo <= j <= self.j_max:
            kind = "homogeneous" if homogeneous else "nonhomogeneous"
            raise ValueError(f"block j={j} outside {kind} range [{lo}, {self.j_max}]")
        key = (j, homogeneous)
        sym = self._blocks.get(key)
        if sym is None:
            kk = self.grid.kabs
            if j == -1 and not homogeneous:
                sym = chi_profile(kk)
            else:
                sym = phi_profile(kk * 2.0**-j)
                sym[0, 0] = 0.0
            self._blocks[key] = sym
        return sym

    def block_range(self, homogeneous: bool = False) -> range:
        return range(self.j_min if homogeneous else -1, self.j_max + 1)

    @cached_property
    def lattice_sum(self) -> np.ndarray:
        return sum(self.symbol(j) for j in self.block_range())

    def partition_residual(self, homogeneous: bool = False) -> float:
        """max |1 - sum of block symbols| over the lattice (excluding 0 if homogeneous)."""
        total = sum(self.symbol(j, homogeneous) for j in self.block_range(homogeneous))
        err = np.abs(1.0 - total)
        if homogeneous:
            err[0, 0] = 0.0
        return float(err.max())


def build_partition(grid: Grid2D) -> DyadicPartition:
    k_max = grid.k_max
    j_max = math.ceil(math.log2(k_max))
    # lowest annulus must start below the first nonzero lattice shell
    j_min = math.floor(math.log2(grid.k_min / CHI_OUTER))
    if j_max - j_min < 2:
        raise ValueError("grid too small to host a full dyadic annulus")
    return DyadicPartition(grid, j_min, j_max)


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float = 2.0
    r: float = 1.0
    homogeneous: bool = False

    def __post_init__(self):
        if not 2 <= self.p < math.inf:
            raise ValueError(f"p must lie in [2, inf), got {self.p}")
        if not 1 <= self.r <= math.inf:
            raise ValueError(f"r must lie in [1, inf], got {self.r}")


def lp_norm(samples: np.ndarray, grid: Grid2D, p: float) -> float:
    a = np.abs(samples)
    if math.isinf(p):
        return float(a.max())
    return float((np.sum(a**p) * grid.h**2) ** (1.0 / p))


def dyadic_block(field: RealField2D, j: int, partition: DyadicPartition, homogeneous: bool = False) -> RealField2D:
    g = field.grid
    return RealField2D(g, g.ifft(g.fft(field.samples) * partition.symbol(j, homogeneous)))


def block_norms(field: RealField2D, partition: DyadicPartition, p: float, homogeneous: bool = False) -> dict[int, float]:
    """``{j: ||Delta_j f||_{L^p}}`` over the admissible range."""
    g = field.grid
    c = g.fft(field.samples)
    out = {}
    live = []
    for j in partition.block_range(homogeneous):
        if np.any(partition.symbol(j, homogeneous)):
            live.append(j)
        else:
            out[j] = 0.0
    # real radial symbols keep each block Hermitian, so blocks go through the FFT in pairs
    for a, b in zip(live[::2], live[1::2] + [None]):
        sa = partition.symbol(a, homogeneous)
        sb = partition.symbol(b, homogeneous) if b is not None else np.zeros_like(sa)
        ra, rb = g.ifft_pair(c * sa, c * sb)
        out[a] = lp_norm(ra, g, p)
        if b is not None:
            out[b] = lp_norm(rb, g, p)
    return dict(sorted(out.items()))


def check_mean_zero(field: RealField2D, rtol: float = 1e-10) -> None:
    mean = abs(field.mean())
    scale = field.max_abs()
    if mean > rtol * scale:
        raise ValueError(f"homogeneous norm needs a mean-zero field (|mean|={mean:.3e})")


def _lr(weights, r):
    w = np.asarray(weights, dtype=float)
    if math.isinf(r):
        return float(w.max(initial=0.0))
    return float(np.sum(w**r) ** (1.0 / r))


def besov_norm(field: RealField2D, params: BesovParams, partition: DyadicPartition,
               norms: dict[int, float] | None = None) -> float:
    if params.homogeneous:
        check_mean_zero(field)
    if norms is None:
        norms = block_norms(field, partition, params.p, params.homogeneous)
    weights = [2.0 ** (j * params.s) * v for j, v in sorted(norms.items())]
    return _lr(weights, params.r)


def w1inf_norm(field: RealField2D) -> float:
    """||f||_inf + ||grad f||_inf with the gradient taken spectrally."""
    g1, g2 = gradient(field)
    return field.max_abs() + float(np.hypot(g1.samples, g2.samples).max())


def log_interpolation_gap(field: RealField2D, s: float, nu: float, p: float = 2.0,
                          partition: DyadicPartition | None = None) -> float:
    """Ratio ||f||_{B^s_{p,1}} / (||f||_{B^s_{p,2}} (1 + sqrt(log((||f||_{B^{s-nu}_{p,2}} + ||f||_{B^{s+nu}_{p,2}}) / ||f||_{B^s_{p,2}})))).

    All norms homogeneous.  The log argument is >= 1 only when the outer
    norms dominate; it is clipped at 1 so the bracket stays >= 1.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    partition = partition or build_partition(field.grid)
    check_mean_zero(field)
    norms = block_norms(field, partition, p, homogeneous=True)
    if not any(v > 0 for v in norms.values()):
        raise ValueError("log interpolation ratio undefined for the zero field")

    def bn(sv, r):
        return besov_norm(field, BesovParams(sv, p, r, True), partition, norms)

    mid2 = bn(s, 2)
    outer = bn(s - nu, 2) + bn(s + nu, 2)
    bracket = 1.0 + math.sqrt(max(math.log(outer / mid2), 0.0))
    return bn(s, 1) / (mid2 * bracket)


# ---------------------------------------------------------------------------
# empirical inequality probes

def bernstein_ratio(field: RealField2D, j: int, p: float = 2.0) -> float:
    """||grad f||_p / (2^j ||f||_p) for a field with spectrum in 2^j * annulus."""
    g1, g2 = gradient(field)
    grad = lp_norm(np.hypot(g1.samples, g2.samples), field.grid, p)
    return grad / (2.0**j * lp_norm(field.samples, field.grid, p))


def sobolev_bracket(partition: DyadicPartition, s: float) -> float:
    """C* with C*^{-1} <= ||f||_{B^s_{2,2}} / ||f||_{H^s} <= C* for mean-zero f.

    Scans w(k) = sum_j 2^{2js} phi(2^-j k)^2 / |k|^{2s} over the lattice.
    """
    kk = partition.grid.kabs
    nz = kk > 0
    w = sum(2.0 ** (2 * j * s) * partition.symbol(j, True) ** 2 for j in partition.block_range(True))
    w = w[nz] / kk[nz] ** (2 * s)
    return float(math.sqrt(max(w.max(), 1.0 / w.min())))


def sobolev_norm(field: RealField2D, s: float) -> float:
    """(sum |k|^{2s} |f_k|^2)^{1/2} scaled to match the grid L^2 norm."""
    g = field.grid
    c = g.fft(field.samples)
    kk = g.kabs
    nz = kk > 0
    return float(math.sqrt(np.sum(kk[nz] ** (2 * s) * np.abs(c[nz]) ** 2)) * g.box_length)


def random_shell_field(grid: Grid2D, partition: DyadicPartition, j: int, rng: np.random.Generator) -> RealField2D:
    """White noise filtered to the j-th homogeneous annulus."""
    noise = rng.standard_normal((grid.n, grid.n))
    return dyadic_block(RealField2D(grid, noise), j, partition, homogeneous=True)
