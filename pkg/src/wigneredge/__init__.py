"""Numerical laboratory for edge eigenvalue statistics of generalized
Wigner matrices: variance profiles, matrix sampling, resolvent diagnostics,
Tracy-Widom laws, interpolating flows, and a reproducible experiment
harness."""

from .ensembles import (
    EnsembleSpec,
    EntryLaw,
    GAUSSIAN,
    RADEMACHER,
    UNIFORM,
    cumulants,
    goe_spec,
    gue_spec,
    make_rng,
    sample_goe,
    sample_gue,
    sample_matrix,
    skew_bernoulli,
)
from .profile import (
    VarianceProfile,
    block_profile_for_bounds,
    centered_profile,
    make_banded_floor_profile,
    make_block_profile,
    make_flat_profile,
    modified_profile,
)
from .semicircle import EdgeDomainSpec, classical_location, m_sc, sc_cdf, sc_density
from .tracy_widom import tw_cdf, tw_cdf_fredholm, tw_distribution

__all__ = [
    "EnsembleSpec",
    "EntryLaw",
    "GAUSSIAN",
    "RADEMACHER",
    "UNIFORM",
    "VarianceProfile",
    "EdgeDomainSpec",
    "block_profile_for_bounds",
    "centered_profile",
    "classical_location",
    "cumulants",
    "goe_spec",
    "gue_spec",
    "m_sc",
    "make_banded_floor_profile",
    "make_block_profile",
    "make_flat_profile",
    "make_rng",
    "modified_profile",
    "sample_goe",
    "sample_gue",
    "sample_matrix",
    "sc_cdf",
    "sc_density",
    "skew_bernoulli",
    "tw_cdf",
    "tw_cdf_fredholm",
    "tw_distribution",
]

__version__ = "0.1.0"
