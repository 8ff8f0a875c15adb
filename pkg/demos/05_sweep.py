"""Sweep over N: eps_N = ||grad eta_0||_inf against M_N = sup_t ||grad eta(t)||_inf.

Both signs of g' are run.  Around eleven minutes on one core.

Run: python demos/05_sweep.py
"""
from pathlib import Path

from ipmlab.config import parse_config
from ipmlab.experiments import cmd_sweep

for gamma in (1.0, -1.0):
    cfg = parse_config(f"profile:\n  gamma: {gamma}\n")
    cmd_sweep(cfg, Path(f"runs/demo_sweep_gamma{gamma:+g}"), force=True)
