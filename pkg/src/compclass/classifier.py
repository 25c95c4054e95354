"""Exact MAP classification of measurement vectors, evaluated in log domain."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .measurement import MeasurementSetup, induced_class_moments
from .model import GmmModel

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class ClassifierContext:
    """Cached per-class factorizations of the measurement-domain covariances.

    Holds, for each class, the lower Cholesky factor of
    ``Phi Sigma_i Phi^T + sigma^2 I``, its log-determinant, the projected mean
    ``Phi mu_i`` and the log prior.  The fingerprint ties the cache to the
    exact (model, setup) pair it was built from.
    """

    chol_factors: tuple[np.ndarray, ...]
    log_dets: np.ndarray
    projected_means: np.ndarray
    log_priors: np.ndarray
    m: int
    fingerprint: str

    @property
    def num_classes(self) -> int:
        return len(self.chol_factors)


def context_fingerprint(model: GmmModel, setup: MeasurementSetup) -> str:
    """SHA-256 over all numeric content of the (model, setup) pair."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(setup.phi).tobytes())
    digest.update(np.float64(setup.noise_variance).tobytes())
    for cls in model.classes:
        digest.update(np.ascontiguousarray(cls.mean).tobytes())
        digest.update(np.ascontiguousarray(cls.covariance).tobytes())
        digest.update(np.float64(cls.prior).tobytes())
    return digest.hexdigest()


def build_context(model: GmmModel, setup: MeasurementSetup) -> ClassifierContext:
    """Factorize every class covariance once; O(L M^3) build cost."""
    factors = []
    log_dets = []
    means = []
    for cls in model.classes:
        mean, cov = induced_class_moments(setup, cls)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                "class covariance in measurement space is not positive definite; "
                "the noise variance must be strictly positive"
            ) from exc
        factors.append(chol)
        log_dets.append(2.0 * float(np.sum(np.log(np.diag(chol)))))
        means.append(mean)
    return ClassifierContext(
        chol_factors=tuple(factors),
        log_dets=np.array(log_dets),
        projected_means=np.array(means),
        log_priors=np.log(model.priors),
        m=setup.m,
        fingerprint=context_fingerprint(model, setup),
    )


def log_likelihood(ctx: ClassifierContext, y, class_index: int) -> float:
    """Gaussian log density of measurement ``y`` under one class."""
    if not 0 <= class_index < ctx.num_classes:
        raise ValueError(f"class index {class_index} out of range")
    y = np.asarray(y, dtype=float)
    resid = y - ctx.projected_means[class_index]
    z = solve_triangular(ctx.chol_factors[class_index], resid, lower=True)
    return float(-0.5 * (ctx.m * _LOG_2PI + ctx.log_dets[class_index] + z @ z))


def log_likelihood_matrix(ctx: ClassifierContext, y: np.ndarray) -> np.ndarray:
    """Log densities for a batch: shape (count, L)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    out = np.empty((y.shape[0], ctx.num_classes))
    for k in range(ctx.num_classes):
        resid = y - ctx.projected_means[k]
        z = solve_triangular(ctx.chol_factors[k], resid.T, lower=True)
        out[:, k] = -0.5 * (ctx.m * _LOG_2PI + ctx.log_dets[k] + np.sum(z * z, axis=0))
    return out


def map_classify(ctx: ClassifierContext, y) -> int:
    """Most probable class index; ties break to the smallest index."""
    scores = [log_likelihood(ctx, y, k) + ctx.log_priors[k] for k in range(ctx.num_classes)]
    return int(np.argmax(scores))


def classify_batch(ctx: ClassifierContext, y: np.ndarray) -> np.ndarray:
    scores = log_likelihood_matrix(ctx, y) + ctx.log_priors
    return np.argmax(scores, axis=1)


def log_posteriors(ctx: ClassifierContext, y) -> np.ndarray:
    """Normalized log posterior probabilities (diagnostic)."""
    scores = np.array(
        [log_likelihood(ctx, y, k) + ctx.log_priors[k] for k in range(ctx.num_classes)]
    )
    shift = np.max(scores)
    norm = shift + np.log(np.sum(np.exp(scores - shift)))
    return scores - norm
