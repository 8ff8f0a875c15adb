"""One run from eta_0 = f_N / sqrt(N): gradient history against the Duhamel lower bound.

Writes runs/demo_N36/ (CSV series, JSON report, SVG).  About two minutes.

Run: python demos/04_lower_bound_run.py
"""
from pathlib import Path

from ipmlab.config import parse_config
from ipmlab.experiments import cmd_simulate

cfg = parse_config("seed:\n  N: [36]\n")
cmd_simulate(cfg, 36, Path("runs/demo_N36"), force=True)
