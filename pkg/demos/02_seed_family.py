"""The seed family f_N and where its forcing term lives.

The log core gives g' R1^2 grad_perp f_N the value 6 N log 2 at the seed
center, but the global sup is set by the cutoff annulus 1 < |x| < 2.

Run: python demos/02_seed_family.py  (about a minute at n = 1024)
"""
import math

from ipmlab.diagnostics import leading_term, leading_term_at
from ipmlab.fields import Grid2D
from ipmlab.littlewood_paley import w1inf_norm
from ipmlab.seed import SeedSpec, build_f_N, dx13_dx2_at_origin_symbolic
from ipmlab.solver import StratProfile

print("exact d1^3 d2 G_8(0):", dx13_dx2_at_origin_symbolic(8))

grid = Grid2D(4.0, 1024)
prof = StratProfile.constant(grid, 1.0)
print(f"{'N':>3} {'W1inf':>10} {'sup forcing':>12} {'center':>8} {'6N log2':>8}")
for N in (4, 6, 8, 10):
    spec = SeedSpec(N, grid)
    f = build_f_N(spec)
    print(f"{N:>3} {w1inf_norm(f):10.1f} {leading_term(f, prof):12.1f} "
          f"{leading_term_at(f, prof, (0.0, 0.0)):8.3f} {6 * N * math.log(2):8.3f}")
