"""Coherent quench dynamics of the annealed transverse-field Ising chain.

Solvers (momentum modes, real-space BdG, TEBD, dense state vector), classical
annealing baselines, kink statistics, Kibble-Zurek / Landau-Zener theory and
a calibration-refinement loop.
"""
from .chain import ChainSpec
from .schedule import KZConstants, Schedule, critical_point, kz_b

__version__ = "0.1.0"

__all__ = ["ChainSpec", "KZConstants", "Schedule", "critical_point", "kz_b", "__version__"]
