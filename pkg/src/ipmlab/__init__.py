"""Pseudo-spectral lab for the 2D IPM equation around stratified states."""
from .fields import Grid2D, RealField2D, SpectralField2D, MultiplierSpec
from .littlewood_paley import BesovParams, DyadicPartition, build_partition, besov_norm
from .seed import SeedSpec, build_f_N, build_eta0
from .solver import SolverConfig, StratProfile, SimState, BlowUpError, run, step_rk4
from .diagnostics import NormSeries, FlowMapCloud, leading_term, lower_bound_report, growth_fit

__version__ = "0.1.0"
