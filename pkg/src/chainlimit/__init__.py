"""Spectral analysis, density arrays and limit diagnostics for finite reversible Markov chains."""

__version__ = "0.1.0"

from .chain import (
    MixingProfile,
    NormalizedChain,
    RateMatrix,
    ReversibleChain,
    ScaledKernel,
    check_reversibility,
    mixing,
    mixing_profile,
    normalize_chain,
    random_reversible_rates,
    scaled_kernel,
    stationary_distribution,
    transition_matrix,
    validate_rate_matrix,
)
from .density import (
    X,
    Monomial,
    array_distance,
    axiom_report,
    empirical_distance,
    exact_moment,
    expectation,
    sample_array,
)
from .errors import *  # noqa: F401,F403
from .family import (
    ChainFamily,
    boundedness_report,
    builtin_family,
    cutoff_detector,
    mixing_table,
    tail_profile,
)
from .io import parse_chain_file
from .quotient import (
    almost_realizers,
    find_twins,
    quotient_chain,
    split_state,
    twin_distance,
    type_of,
)
from .reconstruction import matrix_log, reconstruct_chain, roundtrip_report, subsample_kernel
from .spectral import Spectrum, decompose, kernel_from_spectrum, norm_identity_check, tail_mass
