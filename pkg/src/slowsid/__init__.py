"""Identification of continuous-time LTI systems from slow-sampled multisine data."""

from .exceptions import (
    IdentifiabilityError,
    IllConditioned,
    LeakagePresent,
    Overlap,
    PoleOnExcitedLine,
)
from .frf import (
    FrfEstimate,
    asymptotic_covariance,
    etfe_frf,
    ls_frf,
    ls_frf_frequency_domain,
    normal_matrix,
    residual_sigma,
)
from .lti import (
    NoiseSpec,
    RationalTransferFunction,
    add_noise,
    freq_response,
    sigma_for_snr,
    simulate_stationary,
    true_frf_vector,
)
from .pem import (
    FitResult,
    GaussNewtonOptions,
    ModelStructure,
    ParameterVector,
    cost_freq,
    cost_time,
    gauss_newton,
    identifiability_rank,
    jacobian,
    model_frf_vector,
    predictor,
)
from .signals import (
    Component,
    FoldedLine,
    MultisineSignal,
    SamplingGrid,
    check_no_leakage,
    check_non_overlap,
    dtft,
    evaluate_multisine,
    fold_frequency,
    regressor,
    regressor_matrix,
    signed_frequencies,
)

__version__ = "0.1.0"
