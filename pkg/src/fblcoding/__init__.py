"""Finite-blocklength channel coding: capacity, dispersion, second-order
rates, Gallager bounds and exact small-n coding oracles."""

__version__ = "0.1.0"

from .capacity import (
    AchieverPolytope,
    CapacityReport,
    achiever_polytope,
    capacity,
    capacity_with_cost,
)
from .channel import (
    CostFunction,
    DiscreteChannel,
    ProbabilityVector,
    kl_divergence,
    mutual_information,
    output_distribution,
    product_channel,
    product_cost,
    product_distribution,
)
from .dispersion import (
    DispersionReport,
    analyze,
    conditional_dispersion,
    dispersion_extremes,
    reference_dispersion,
    unconditional_dispersion,
)
from .errors import *  # noqa: F401,F403
from .gaussian import GaussianParams, gaussian_capacity, gaussian_dispersion
from .markov import MarkovNoise, entropy_rate, markov_capacity, markov_variance
from .normal import normal_cdf, normal_quantile
from .rates import SecondOrderReport, second_order
