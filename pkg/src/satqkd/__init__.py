"""Key rates of entanglement-based CV-QKD over turbulent optical links.

The library models two-mode Gaussian and conditionally prepared
photon-varied sources, propagates them through a thermal-loss channel
with trusted detector noise, and evaluates asymptotic reverse
reconciliation key rates either at fixed attenuation or averaged over
Monte Carlo ensembles of fading transmissivities.  All covariance
matrices use the convention with vacuum variance 1 and quadrature
ordering (x1, p1, ..., xn, pn).
"""

from .atmosphere import (
    BeamStatistics,
    TurbulenceScenario,
    beam_statistics,
    cn2_profile,
    rytov_variance,
    scenario_sigma_I2,
    scintillation_index,
)
from .beam import (
    BeamSample,
    effective_radius_sq,
    max_transmissivity,
    scaling_R,
    shaping_lambda,
    transmissivity,
    transmissivity_batch,
)
from .channel import (
    ChannelModelKind,
    TransmissivityEnsemble,
    calibrate_sigma_I2,
    ensemble_statistics,
    sample_beam,
    sample_ensemble,
)
from .errors import (
    ConfigError,
    CutoffError,
    DegenerateMeasurementError,
    DomainError,
    InvalidCovarianceError,
    NumericalError,
    UnphysicalStateError,
)
from .keyrate import (
    KeyRateResult,
    NoiseParams,
    ProtocolParams,
    average_key_rate,
    detector_cm,
    evolve_channel,
    holevo_bound,
    key_rate,
    mutual_information,
    rates_batch,
    repeaterless_bound,
    repeaterless_bound_ensemble,
    source_cm,
)
from .optimize import (
    OptimizationResult,
    build_rate_table,
    optimize_fixed,
    optimize_mean_based,
    optimize_per_sample,
)
from .specfun import (
    bessel_i,
    bessel_i_scaled,
    condition_on_homodyne,
    g_function,
    lambert_w0,
    symplectic_eigenvalues,
    symplectic_form,
)
from .states import (
    SCHEMES,
    FockTwoModeState,
    SourceParams,
    TwoModeCM,
    addition_probability,
    cm_entries,
    default_cutoff,
    fock_ket,
    oracle_cm_from_fock,
    pas_cm,
    pss_cm,
    squeezing_db,
    subtraction_probability,
    tmsv_cm,
)

__version__ = "0.1.0"

__all__ = [
    "BeamSample",
    "BeamStatistics",
    "ChannelModelKind",
    "ConfigError",
    "CutoffError",
    "DegenerateMeasurementError",
    "DomainError",
    "FockTwoModeState",
    "InvalidCovarianceError",
    "KeyRateResult",
    "NoiseParams",
    "NumericalError",
    "OptimizationResult",
    "ProtocolParams",
    "SCHEMES",
    "SourceParams",
    "TransmissivityEnsemble",
    "TurbulenceScenario",
    "TwoModeCM",
    "UnphysicalStateError",
    "addition_probability",
    "average_key_rate",
    "beam_statistics",
    "bessel_i",
    "bessel_i_scaled",
    "build_rate_table",
    "calibrate_sigma_I2",
    "cm_entries",
    "cn2_profile",
    "condition_on_homodyne",
    "default_cutoff",
    "detector_cm",
    "effective_radius_sq",
    "ensemble_statistics",
    "evolve_channel",
    "fock_ket",
    "g_function",
    "holevo_bound",
    "key_rate",
    "lambert_w0",
    "max_transmissivity",
    "mutual_information",
    "optimize_fixed",
    "optimize_mean_based",
    "optimize_per_sample",
    "oracle_cm_from_fock",
    "pas_cm",
    "pss_cm",
    "rates_batch",
    "repeaterless_bound",
    "repeaterless_bound_ensemble",
    "rytov_variance",
    "sample_beam",
    "sample_ensemble",
    "scaling_R",
    "scenario_sigma_I2",
    "scintillation_index",
    "shaping_lambda",
    "source_cm",
    "squeezing_db",
    "subtraction_probability",
    "symplectic_eigenvalues",
    "symplectic_form",
    "tmsv_cm",
    "transmissivity",
    "transmissivity_batch",
    "__version__",
]
