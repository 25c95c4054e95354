"""Seeded, chunk-parallel Monte Carlo estimation of the MAP error probability.

Trials are split into fixed-size chunks; every chunk derives its own
generator from ``(seed, chunk_index)``, so the total error count is an
order-independent integer sum and the result does not depend on how many
workers execute the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bounds
from .classifier import build_context, classify_batch
from .measurement import MeasurementSetup, draw_measurement_matrix, measure_batch
from .model import GmmModel, class_factors, sample_source_batch

# Fixed chunk size: results are reproducible only if this never varies with
# worker count or trial budget.
CHUNK_TRIALS = 8192

_Z95 = 1.959963984540054  # two-sided 95% normal quantile
_WILSON_MIN_ERRORS = 20


def derive_seed(*parts: int) -> int:
    """Stable child seed from integer parts (root seed, stream tag, indices)."""
    seq = np.random.SeedSequence(entropy=list(parts))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class McResult:
    """Error-rate estimate with a 95% confidence half-width."""

    trials: int
    errors: int
    p_hat: float
    ci_half_width: float
    seed: int


def _ci_half_width(errors: int, trials: int) -> float:
    """Normal-approximation half-width; Wilson interval below 20 errors."""
    p = errors / trials
    if errors >= _WILSON_MIN_ERRORS and trials - errors >= _WILSON_MIN_ERRORS:
        return _Z95 * math.sqrt(p * (1.0 - p) / trials)
    z2 = _Z95 * _Z95
    denom = 1.0 + z2 / trials
    return _Z95 * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom


def _chunk_error_count(args) -> int:
    model, setup, count, seed, chunk_index = args
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(chunk_index,)))
    factors = class_factors(model)
    ctx = build_context(model, setup)
    labels, x = sample_source_batch(model, count, rng, factors=factors)
    y = measure_batch(setup, x, rng)
    decided = classify_batch(ctx, y)
    return int(np.count_nonzero(decided != labels))


def estimate_error(
    model: GmmModel,
    setup: MeasurementSetup,
    trials: int,
    seed: int,
    workers: int = 1,
    executor: Executor | None = None,
) -> McResult:
    """Monte Carlo estimate of the MAP misclassification probability.

    Deterministic in ``(model, setup, trials, seed)`` for any worker count.
    An external ``executor`` may be supplied to amortize pool startup across
    many calls.
    """
    trials = int(trials)
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    chunks = []
    remaining = trials
    index = 0
    while remaining > 0:
        count = min(CHUNK_TRIALS, remaining)
        chunks.append((model, setup, count, seed, index))
        remaining -= count
        index += 1
    if executor is not None:
        errors = sum(executor.map(_chunk_error_count, chunks))
    elif workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            errors = sum(pool.map(_chunk_error_count, chunks))
    else:
        errors = sum(_chunk_error_count(chunk) for chunk in chunks)
    return McResult(
        trials=trials,
        errors=errors,
        p_hat=errors / trials,
        ci_half_width=_ci_half_width(errors, trials),
        seed=seed,
    )


@dataclass(frozen=True)
class ErrorCurve:
    """Bound and Monte Carlo estimates across a noise sweep for one (model, M).

    ``log_bound`` is the canonical bound column: the linear ``bound`` values
    can underflow double precision in the exponential-decay regime.
    ``mc_estimate``/``mc_ci`` hold NaN where no simulation ran (trials = 0).
    """

    m: int
    sigma2: np.ndarray
    log_bound: np.ndarray
    bound: np.ndarray
    mc_estimate: np.ndarray
    mc_ci: np.ndarray
    mc_errors: np.ndarray
    trials: int
    seed: int
    variant: str
    phis: tuple[np.ndarray, ...]


def curve_from_bounds(sigma2, bound_values, m: int = 0) -> ErrorCurve:
    """Wrap raw positive bound values as a fit-ready curve (mainly for tests)."""
    sigma2 = np.asarray(sigma2, dtype=float)
    bound_values = np.asarray(bound_values, dtype=float)
    if np.any(bound_values <= 0.0):
        raise ValueError("bound values must be strictly positive")
    nan = np.full_like(sigma2, np.nan)
    return ErrorCurve(
        m=m,
        sigma2=sigma2,
        log_bound=np.log(bound_values),
        bound=bound_values,
        mc_estimate=nan.copy(),
        mc_ci=nan.copy(),
        mc_errors=np.zeros_like(sigma2),
        trials=0,
        seed=0,
        variant="pair",
        phis=(),
    )


def _log_bound_for(model, setup, variant):
    if model.num_classes == 2:
        return bounds.two_class_log_bound(model, setup)
    return bounds.multiclass_log_bound(model, setup, variant)


def sweep_error_curve(
    model: GmmModel,
    m: int,
    sigma_grid,
    trials: int,
    seed: int,
    variant: str = bounds.VARIANT_PRINTED,
    workers: int = 1,
    executor: Executor | None = None,
    phi_draws: int = 1,
    phis: tuple[np.ndarray, ...] | None = None,
) -> ErrorCurve:
    """Bound plus Monte Carlo estimate at every grid point for one M.

    One measurement matrix per (model, M, seed, draw), fixed across the
    sweep.  With ``phi_draws > 1`` the bound column is the arithmetic mean
    over draws and the Monte Carlo counts are pooled.  ``trials = 0`` skips
    simulation entirely (bound-only curve).  Explicit ``phis`` (e.g. from a
    replay file) bypass matrix drawing.
    """
    sigma_grid = np.asarray(sigma_grid, dtype=float)
    if sigma_grid.ndim != 1 or sigma_grid.size < 1:
        raise ValueError("sigma grid must be a nonempty 1-D array")
    if np.any(sigma_grid <= 0.0) or np.any(np.diff(sigma_grid) >= 0.0):
        raise ValueError("sigma grid must be strictly decreasing and positive")
    if phis is None:
        phis = tuple(
            draw_measurement_matrix(m, model.ambient_dim, derive_seed(seed, 101, m, draw))
            for draw in range(phi_draws)
        )
    else:
        phis = tuple(np.asarray(p, dtype=float) for p in phis)
        if len(phis) != phi_draws:
            raise ValueError(f"expected {phi_draws} measurement matrices, got {len(phis)}")

    points = sigma_grid.size
    log_bound = np.empty(points)
    mc_errors = np.zeros(points, dtype=np.int64)
    mc_estimate = np.full(points, np.nan)
    mc_ci = np.full(points, np.nan)
    for k, sigma2 in enumerate(sigma_grid):
        draw_logs = []
        for draw, phi in enumerate(phis):
            setup = MeasurementSetup(phi=phi, noise_variance=float(sigma2))
            draw_logs.append(_log_bound_for(model, setup, variant))
            if trials > 0:
                result = estimate_error(
                    model, setup, trials, derive_seed(seed, 202, m, k, draw),
                    workers=workers, executor=executor,
                )
                mc_errors[k] += result.errors
        shift = max(draw_logs)
        log_bound[k] = shift + math.log(
            sum(math.exp(v - shift) for v in draw_logs) / len(draw_logs)
        )
        if trials > 0:
            total = trials * len(phis)
            mc_estimate[k] = mc_errors[k] / total
            mc_ci[k] = _ci_half_width(int(mc_errors[k]), total)

    with np.errstate(under="ignore"):
        bound_lin = np.exp(log_bound)
    return ErrorCurve(
        m=m,
        sigma2=sigma_grid,
        log_bound=log_bound,
        bound=bound_lin,
        mc_estimate=mc_estimate,
        mc_ci=mc_ci,
        mc_errors=mc_errors.astype(float),
        trials=trials * len(phis) if trials > 0 else 0,
        seed=seed,
        variant=variant if model.num_classes > 2 else "pair",
        phis=phis,
    )
