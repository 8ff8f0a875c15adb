"""Solver sanity: steady stratification, single-mode growth, conservation, RK4 order.

Run: python demos/03_solver_checks.py
"""
import math

import numpy as np

from ipmlab.experiments import bandlimited_field, rk4_self_convergence
from ipmlab.fields import Grid2D
from ipmlab.solver import SolverConfig, StratProfile, run

grid = Grid2D(4.0, 128)
k = grid.k_min

eta = grid.sample(lambda x1, x2: np.sin(k * x2))
s = run(eta, StratProfile.constant(grid, 1.0), SolverConfig(T=1.0))
print("stratified data, drift after T=1:", (s.final_state.eta - eta).max_abs())

# eta = cos(k x1) with g' = gamma grows like exp(gamma t)
eta = grid.sample(lambda x1, x2: np.cos(k * x1))
s = run(eta, StratProfile.constant(grid, -0.7), SolverConfig(T=1.0, fixed_dt=1e-3))
print("single-mode rate (expect -0.7):", math.log(s.final_state.eta.max_abs()))

rho = bandlimited_field(grid, 8, np.random.default_rng(1))
s = run(rho, None, SolverConfig(T=1.0, formulation="full"))
l2 = lambda f: np.sqrt(np.sum(f.samples**2))
print("full system relative L2 drift:", abs(l2(s.final_state.eta) - l2(rho)) / l2(rho))

print("RK4 self-convergence orders:", rk4_self_convergence(grid))
