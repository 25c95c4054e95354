"""Pairwise error exponents and the two-class / multi-class misclassification bounds.

The pairwise exponent is the Chernoff exponent at parameter 1/2 between the
two measurement-domain Gaussians ``N(Phi mu_i, S_i)`` with
``S_i = Phi Sigma_i Phi^T + sigma^2 I``:

    K(i, j) = (1/8) d^T H^{-1} d + (1/2) log[ det H / sqrt(det S_i det S_j) ],

where ``d = Phi (mu_i - mu_j)`` and ``H = (S_i + S_j) / 2`` is the average of
the two noise-inflated covariances.  Both summands are nonnegative, and
identical classes give K = 0 for any measurement matrix and noise level.

Bound values can underflow double precision at low noise, so every bound has
a log-domain twin; curve fitting consumes only the log values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .linalg import log_det_spd
from .measurement import MeasurementSetup
from .model import GmmModel

VARIANT_PRINTED = "printed"
VARIANT_STANDARD = "standard"


@dataclass(frozen=True)
class PairExponent:
    """Pairwise exponent split into its mean and log-determinant summands."""

    k_value: float
    mean_term: float
    logdet_term: float


def pair_exponent(model: GmmModel, setup: MeasurementSetup, i: int, j: int) -> PairExponent:
    """Exponent K(i, j) for one ordered class pair (symmetric in i, j)."""
    if i == j:
        raise ValueError("pair exponent requires two distinct classes")
    count = model.num_classes
    if not (0 <= i < count and 0 <= j < count):
        raise ValueError(f"class pair ({i}, {j}) out of range for {count} classes")
    phi = setup.phi
    sigma2 = setup.noise_variance
    eye = sigma2 * np.eye(setup.m)
    cls_i, cls_j = model.classes[i], model.classes[j]
    s_i = phi @ cls_i.covariance @ phi.T + eye
    s_j = phi @ cls_j.covariance @ phi.T + eye
    h = 0.5 * (s_i + s_j)
    diff = phi @ (cls_i.mean - cls_j.mean)
    try:
        chol = np.linalg.cholesky(h)
    except np.linalg.LinAlgError as exc:
        raise ValueError("average covariance not positive definite; sigma^2 must be > 0") from exc
    z = np.linalg.solve(chol, diff)
    mean_term = float(z @ z) / 8.0
    logdet_term = 0.5 * (log_det_spd(h) - 0.5 * (log_det_spd(s_i) + log_det_spd(s_j)))
    return PairExponent(
        k_value=mean_term + logdet_term,
        mean_term=mean_term,
        logdet_term=float(logdet_term),
    )


def two_class_log_bound(model: GmmModel, setup: MeasurementSetup) -> float:
    """log of the two-class bound sqrt(P1 P2) exp(-K(1, 2))."""
    if model.num_classes != 2:
        raise ValueError(f"two-class bound needs exactly 2 classes, got {model.num_classes}")
    p1, p2 = model.priors
    return 0.5 * math.log(p1 * p2) - pair_exponent(model, setup, 0, 1).k_value


def two_class_bound(model: GmmModel, setup: MeasurementSetup) -> float:
    """Two-class misclassification bound, not clamped to 1.

    May underflow to 0.0 at very low noise; use :func:`two_class_log_bound`
    for asymptotic fits.
    """
    return math.exp(two_class_log_bound(model, setup))


def _pair_log_terms(model: GmmModel, setup: MeasurementSetup) -> dict[tuple[int, int], float]:
    terms = {}
    for i in range(model.num_classes):
        for j in range(i + 1, model.num_classes):
            terms[(i, j)] = -pair_exponent(model, setup, i, j).k_value
    return terms


def multiclass_log_bound(
    model: GmmModel, setup: MeasurementSetup, variant: str = VARIANT_PRINTED
) -> float:
    """log of the union bound over all class pairs.

    ``variant="printed"`` weights each ordered pair (i, j) by
    ``sqrt(P_i P_j) * P_i``; ``variant="standard"`` uses the conventional
    symmetric form ``sum_{i<j} 2 sqrt(P_i P_j) exp(-K)``.  The printed form
    reduces exactly to the two-class bound at L = 2 (the trailing prior
    factors sum to 1); the standard form is looser by the factor
    ``2 / (P_i + P_j)`` per pair.
    """
    if variant not in (VARIANT_PRINTED, VARIANT_STANDARD):
        raise ValueError(f"unknown union bound variant {variant!r}")
    priors = model.priors
    neg_k = _pair_log_terms(model, setup)
    logs = []
    for (i, j), term in neg_k.items():
        base = 0.5 * math.log(priors[i] * priors[j]) + term
        if variant == VARIANT_PRINTED:
            # ordered pair (i, j) carries P_i, ordered pair (j, i) carries P_j
            logs.append(base + math.log(priors[i] + priors[j]))
        else:
            logs.append(base + math.log(2.0))
    return float(logsumexp(logs))


def multiclass_bound(
    model: GmmModel, setup: MeasurementSetup, variant: str = VARIANT_PRINTED
) -> float:
    return math.exp(multiclass_log_bound(model, setup, variant))
