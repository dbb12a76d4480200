"""Urn-process martingale couplings between finite-population sampling schemes,
with exact and Monte Carlo verification and transferred Chernoff bounds."""

from .coupling import CouplingModel, Trajectory, coupled_sums, run_kfold, run_replacement, run_surreplacement
from .population import Population, from_values, mean, multiply, two_color_urn
from .rng import RngStream

__all__ = [
    "CouplingModel",
    "Population",
    "RngStream",
    "Trajectory",
    "coupled_sums",
    "from_values",
    "mean",
    "multiply",
    "run_kfold",
    "run_replacement",
    "run_surreplacement",
    "two_color_urn",
]
