"""Fourier multipliers on the periodic box and the dyadic partition behind the Besov norms.

Run: python demos/01_operators_and_partition.py
"""
import numpy as np

from ipmlab.fields import Grid2D, biot_savart, divergence, riesz1_sq
from ipmlab.littlewood_paley import (BesovParams, besov_norm, block_norms, build_partition,
                                     sobolev_bracket)

grid = Grid2D(half_length=4.0, n=128)
k = grid.k_min

# R1^2 has symbol -k1^2/|k|^2, so a mode with m = (3, 4) is scaled by -9/25
f = grid.sample(lambda x1, x2: np.cos(k * (3 * x1 + 4 * x2)))
print("R1^2 on a (3,4) mode, ratio:", (riesz1_sq(f).samples / f.samples)[5, 7])

# the IPM velocity is divergence free, and its second component is R1^2 of the density
rng = np.random.default_rng(0)
rho = grid.sample(lambda x1, x2: np.sin(k * x1) * np.cos(2 * k * x2))
u1, u2 = biot_savart(rho)
print("max |div u|:", divergence(u1, u2).max_abs())

part = build_partition(grid)
print(f"blocks j = {part.j_min} .. {part.j_max}, partition residual {part.partition_residual():.1e}")

g = grid.sample(lambda x1, x2: np.exp(-4 * (x1**2 + x2**2)))
g = g - g.mean()
for j, v in block_norms(g, part, 2.0).items():
    print(f"  ||Delta_{j:>2} g||_2 = {v:.3e}")
print("B^1_{2,1} norm:", besov_norm(g, BesovParams(1.0), part))
print("Sobolev bracket C* for s=1:", sobolev_bracket(part, 1.0))
