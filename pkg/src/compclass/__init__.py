"""Compressive classification of Gaussian mixture sources.

Library for studying how well the class of a high-dimensional Gaussian
mixture signal can be recovered from a small number of noisy random linear
projections: exact MAP classification, pairwise and union error bounds, and
closed-form low-noise regime predictions (error floor vs. polynomial vs.
exponential decay) validated by Monte Carlo simulation.
"""

from .asymptotics import (
    REGIME_EXPONENTIAL,
    REGIME_FLOOR,
    REGIME_POLYNOMIAL,
    DiversityFit,
    MeasuredGeometry,
    RegimePrediction,
    SourceGeometry,
    default_fit_window,
    fit_diversity,
    fit_measurement_gain,
    measured_geometry,
    pair_measurement_gain,
    pairwise_predictions,
    predict_multiclass,
    predict_nonzero_mean,
    predict_two_class_measured,
    predict_two_class_source,
    source_geometry,
)
from .bounds import (
    VARIANT_PRINTED,
    VARIANT_STANDARD,
    PairExponent,
    multiclass_bound,
    multiclass_log_bound,
    pair_exponent,
    two_class_bound,
    two_class_log_bound,
)
from .classifier import (
    ClassifierContext,
    build_context,
    classify_batch,
    log_likelihood,
    log_posteriors,
    map_classify,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config, sigma_grid
from .linalg import (
    DEFAULT_RANK_RTOL,
    image_contains,
    log_det_spd,
    numerical_rank,
    pseudo_det,
)
from .measurement import (
    MeasurementSetup,
    draw_measurement_matrix,
    induced_class_moments,
    measure,
)
from .model import (
    MEAN_MODE_DISTINCT,
    MEAN_MODE_ZERO,
    GaussianClass,
    GmmModel,
    RankSpec,
    load_model,
    model_from_text,
    model_to_text,
    sample_source,
    save_model,
    synthesize_class_pair,
    synthesize_ensemble,
)
from .montecarlo import (
    ErrorCurve,
    McResult,
    curve_from_bounds,
    derive_seed,
    estimate_error,
    sweep_error_curve,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
