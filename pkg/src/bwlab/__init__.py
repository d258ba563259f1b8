"""Bouc-Wen class hysteresis toolkit.

Modeling and quasi-static simulation of smooth degrading/pinching
hysteresis, loading-protocol construction, synthetic dataset generation,
parameter estimation, and SDOF seismic response analysis.
"""
from .errors import (BwlabError, ConfigError, EstimationError,
                     FragilityFitError, IntegrationError, SamplingError,
                     YieldDetectionError)
from .params import (CATEGORY_NAMES, G, NEUTRAL_VALUES, PARAM_BOUNDS,
                     PARAM_NAMES, BwParams, Variant, bounds_arrays)
from .model import (AuxiliaryValues, HysteresisCurve, HystereticState,
                    evaluate_auxiliary, resisting_force, simulate_batch,
                    simulate_quasi_static, state_rates, step_quasi_static)
from .loading import (LoadingHistory, envelope_history, module_history,
                      optimal_history, reference_history, table_history)
from .sampling import (NoiseSpec, ParamDistributions, TruncJointNormal,
                       TruncNormal, Uniform, apply_noise, emit_histograms,
                       generate_dataset, load_manifest, minmax_denormalize,
                       minmax_normalize, perturb_u_y, read_records,
                       sample_params)
from .estimation import (AccuracyReport, FitResult, GaConfig, accuracy_bands,
                         ga_estimate, hysteresis_area, pearson_r)
from .dynamics import (FragilityCurve, GroundMotion, IdaConfig, IdaResult,
                       PushoverCurve, Response, fit_fragility, ida,
                       kl_divergence, kl_divergence_quadrature, pushover,
                       spectral_acceleration, time_history,
                       yield_displacement)
from . import nnio

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport", "AuxiliaryValues", "BwlabError", "BwParams",
    "CATEGORY_NAMES", "ConfigError", "EstimationError", "FitResult",
    "FragilityCurve", "FragilityFitError", "G", "GaConfig", "GroundMotion",
    "HysteresisCurve", "HystereticState", "IdaConfig", "IdaResult",
    "IntegrationError", "LoadingHistory", "NEUTRAL_VALUES", "NoiseSpec",
    "PARAM_BOUNDS", "PARAM_NAMES",
    "ParamDistributions", "PushoverCurve", "Response", "SamplingError",
    "TruncJointNormal", "TruncNormal", "Uniform", "Variant",
    "YieldDetectionError", "accuracy_bands", "apply_noise", "bounds_arrays",
    "emit_histograms", "envelope_history", "evaluate_auxiliary",
    "fit_fragility", "ga_estimate", "generate_dataset", "hysteresis_area",
    "ida", "kl_divergence", "kl_divergence_quadrature", "load_manifest",
    "minmax_denormalize", "minmax_normalize", "module_history", "nnio",
    "optimal_history", "pearson_r", "perturb_u_y", "pushover",
    "read_records", "reference_history", "resisting_force", "sample_params",
    "simulate_batch", "simulate_quasi_static", "spectral_acceleration",
    "state_rates", "step_quasi_static", "table_history", "time_history",
    "yield_displacement",
]
