"""Learning ferromagnetic RBMs and latent-variable Ising models.

Structure learning through conditional influence (greedy and exhaustive
search learners), potential recovery by local GLM regression, exact
RBM/MRF conversions, and a Taylor-series log-partition approximation,
all checked against exact enumeration oracles.
"""
from .convert import mrf_to_rbm, observed_marginal, rbm_to_mrf, solve_building_block, sparse_parity_rbm
from .errors import (
    AssumptionError,
    CapacityError,
    FormatError,
    InfeasibleError,
    InsufficientDataError,
    ParameterError,
    RbmLearnError,
)
from .exact import (
    ExactDistribution,
    InfluenceTable,
    distribution_from_potential,
    enumerate_model,
    exact_influence,
    fourier_of_log,
    marginal,
    observed_distribution,
    tv_distance,
)
from .influence import empirical_influence, exact_oracle, required_samples, sample_oracle
from .model import (
    IsingModel,
    LearnerConfig,
    MrfPotential,
    NondegeneracyParams,
    Rbm,
    as_ising,
    graph_blankets,
    validate_nondegeneracy,
)
from .partition import approximate_log_z, check_lee_yang, fugacity_polynomial
from .regression import glmtron_fit, learn_potential
from .sampler import SampleSet, sample_exact, sample_gibbs
from .structure import default_config, greedy_nbhd, greedy_nbhd_exact, learn_structure, search_nbhd, search_nbhd_exact

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "CapacityError",
    "ExactDistribution",
    "FormatError",
    "InfeasibleError",
    "InfluenceTable",
    "InsufficientDataError",
    "IsingModel",
    "LearnerConfig",
    "MrfPotential",
    "NondegeneracyParams",
    "ParameterError",
    "Rbm",
    "RbmLearnError",
    "SampleSet",
    "approximate_log_z",
    "as_ising",
    "check_lee_yang",
    "default_config",
    "distribution_from_potential",
    "empirical_influence",
    "enumerate_model",
    "exact_influence",
    "exact_oracle",
    "fourier_of_log",
    "fugacity_polynomial",
    "glmtron_fit",
    "graph_blankets",
    "greedy_nbhd",
    "greedy_nbhd_exact",
    "learn_potential",
    "learn_structure",
    "marginal",
    "mrf_to_rbm",
    "observed_distribution",
    "observed_marginal",
    "rbm_to_mrf",
    "required_samples",
    "sample_exact",
    "sample_gibbs",
    "sample_oracle",
    "search_nbhd",
    "search_nbhd_exact",
    "solve_building_block",
    "sparse_parity_rbm",
    "tv_distance",
    "validate_nondegeneracy",
]
