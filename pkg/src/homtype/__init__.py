"""Weighted variable Lebesgue spaces on finite spaces of homogeneous type."""
from .space import FiniteSpace, cantor, doubling_constant, euclidean_grid, explicit, generate_space, power_metric
from .exponents import ExponentFunction, conjugate, constant_exponent, ramp_exponent
from .lpvar import luxemburg_norm, luxemburg_norms, modular
from .weights import apq_constant, power_weight
from .dyadic import DyadicGrid, adjacent_family, build_grid, verify_grid
from .operators import dyadic_maximal, hl_maximal
from .czdecomp import cz_at_height, sparse_family
from .experiments import ExperimentConfig, blowup_scan, necessity_witness

__version__ = "0.1.0"

__all__ = [
    "FiniteSpace",
    "cantor",
    "doubling_constant",
    "euclidean_grid",
    "explicit",
    "generate_space",
    "power_metric",
    "ExponentFunction",
    "conjugate",
    "constant_exponent",
    "ramp_exponent",
    "luxemburg_norm",
    "luxemburg_norms",
    "modular",
    "apq_constant",
    "power_weight",
    "DyadicGrid",
    "adjacent_family",
    "build_grid",
    "verify_grid",
    "dyadic_maximal",
    "hl_maximal",
    "cz_at_height",
    "sparse_family",
    "ExperimentConfig",
    "blowup_scan",
    "necessity_witness",
]
