"""Low-noise regime prediction and empirical slope/gain extraction.

Closed-form predictions classify each configuration into one of three
low-noise regimes:

* ``floor`` -- the bound tends to a positive constant (class subspaces
  overlap completely in measurement space),
* ``polynomial`` -- the bound decays like ``(sigma^2 / g_m)^d`` with
  diversity order ``d`` and measurement gain ``g_m``,
* ``exponential`` -- the bound decays exponentially in ``1/sigma^2``
  (distinct means whose projected difference escapes the projected
  covariance-union subspace).

The empirical side fits ``d`` as the slope of log-bound versus log-noise and
recovers ``g_m`` from the power-law offset, so every closed-form claim can be
checked against the curve it describes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.stats import linregress

from .linalg import DEFAULT_RANK_RTOL, image_contains, numerical_rank, pseudo_det
from .measurement import MeasurementSetup
from .model import GmmModel

REGIME_FLOOR = "floor"
REGIME_POLYNOMIAL = "polynomial"
REGIME_EXPONENTIAL = "exponential"

NOTE_UNKNOWN_OFFSET = "offset unknown, a > 1"

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class MeasuredGeometry:
    """Ranks and volumes of the projected class subspaces.

    ``ranks[i]`` / ``volumes[i]`` describe ``Phi Sigma_i Phi^T``;
    ``pair_ranks[(i, j)]`` / ``pair_volumes[(i, j)]`` describe
    ``Phi (Sigma_i + Sigma_j) Phi^T`` for i < j.
    """

    ranks: tuple[int, ...]
    volumes: tuple[float, ...]
    pair_ranks: Mapping[tuple[int, int], int]
    pair_volumes: Mapping[tuple[int, int], float]
    m: int

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        object.__setattr__(self, "volumes", tuple(float(v) for v in self.volumes))
        object.__setattr__(self, "pair_ranks", dict(self.pair_ranks))
        object.__setattr__(self, "pair_volumes", dict(self.pair_volumes))
        for v in self.volumes:
            if not v > 0.0:
                raise ValueError("projected volumes must be strictly positive")
        for (i, j), rij in self.pair_ranks.items():
            lo = max(self.ranks[i], self.ranks[j])
            hi = min(self.m, self.ranks[i] + self.ranks[j])
            if not lo <= rij <= hi:
                raise ValueError(
                    f"pair rank {rij} for ({i + 1}, {j + 1}) outside [{lo}, {hi}]"
                )


@dataclass(frozen=True)
class SourceGeometry:
    """Ranks of the source covariances and their pairwise sums."""

    ranks: tuple[int, ...]
    pair_ranks: Mapping[tuple[int, int], int]
    ambient_dim: int

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        object.__setattr__(self, "pair_ranks", dict(self.pair_ranks))
        for (i, j), rij in self.pair_ranks.items():
            if not max(self.ranks[i], self.ranks[j]) <= rij <= self.ambient_dim:
                raise ValueError(
                    f"source pair rank {rij} for ({i + 1}, {j + 1}) inconsistent "
                    f"with class ranks {self.ranks[i]}, {self.ranks[j]}"
                )


@dataclass(frozen=True)
class RegimePrediction:
    """Closed-form low-noise prediction for one configuration."""

    regime: str
    diversity: float | None = None
    measurement_gain: float | None = None
    dominating_pair: tuple[int, int] | None = None
    note: str = ""


def measured_geometry(model: GmmModel, phi: np.ndarray, rtol: float = DEFAULT_RANK_RTOL) -> MeasuredGeometry:
    """Ranks/pseudo-determinants of all projected covariances and pairwise sums."""
    phi = np.asarray(phi, dtype=float)
    projected = [phi @ cls.covariance @ phi.T for cls in model.classes]
    ranks = [numerical_rank(p, rtol) for p in projected]
    volumes = [pseudo_det(p, rtol) for p in projected]
    pair_ranks = {}
    pair_volumes = {}
    count = model.num_classes
    for i in range(count):
        for j in range(i + 1, count):
            s = projected[i] + projected[j]
            pair_ranks[(i, j)] = numerical_rank(s, rtol)
            pair_volumes[(i, j)] = pseudo_det(s, rtol)
    return MeasuredGeometry(
        ranks=tuple(ranks),
        volumes=tuple(volumes),
        pair_ranks=pair_ranks,
        pair_volumes=pair_volumes,
        m=phi.shape[0],
    )


def source_geometry(model: GmmModel, rtol: float = DEFAULT_RANK_RTOL) -> SourceGeometry:
    """Ranks of the ambient-space covariances and their pairwise sums."""
    ranks = [numerical_rank(cls.covariance, rtol) for cls in model.classes]
    pair_ranks = {}
    count = model.num_classes
    for i in range(count):
        for j in range(i + 1, count):
            pair_ranks[(i, j)] = numerical_rank(
                model.classes[i].covariance + model.classes[j].covariance, rtol
            )
    return SourceGeometry(ranks=tuple(ranks), pair_ranks=pair_ranks, ambient_dim=model.ambient_dim)


def pair_measurement_gain(
    prior_i: float,
    prior_j: float,
    volume_i: float,
    volume_j: float,
    pair_volume: float,
    pair_rank: int,
    diversity: float,
) -> float:
    """Measurement gain of the pairwise power law ``(sigma^2 / g_m)^d``.

    The offset constant of the pairwise bound is
    ``C = sqrt(P_i P_j) * (v_avg / sqrt(v_i v_j))^(-1/2)`` where ``v_avg`` is
    the volume of the *average* projected covariance,
    ``v_avg = pair_volume / 2^pair_rank``; the gain is ``C^(-1/d)``.  Using
    the unhalved pair volume here would overstate the constant by
    ``2^(pair_rank / 2)`` and no longer match the curve being described.
    """
    if not diversity > 0.0:
        raise ValueError(f"measurement gain requires positive diversity, got {diversity}")
    log_v_avg = math.log(pair_volume) - pair_rank * _LN2
    log_c = 0.5 * math.log(prior_i * prior_j) - 0.5 * (
        log_v_avg - 0.5 * (math.log(volume_i) + math.log(volume_j))
    )
    return math.exp(-log_c / diversity)


def predict_two_class_measured(geom: MeasuredGeometry, priors) -> RegimePrediction:
    """Regime from the projected (measurement-space) geometry, zero-mean classes."""
    if len(geom.ranks) != 2:
        raise ValueError(f"expected two classes, got {len(geom.ranks)}")
    r1, r2 = geom.ranks
    r12 = geom.pair_ranks[(0, 1)]
    half_sum = 0.5 * (r1 + r2)
    if half_sum > r12:
        raise ValueError(
            f"rank geometry (r1 + r2)/2 = {half_sum} > r12 = {r12} is not realizable"
        )
    if half_sum == r12:
        return RegimePrediction(regime=REGIME_FLOOR, dominating_pair=(0, 1))
    diversity = 0.5 * (r12 - half_sum)
    gain = pair_measurement_gain(
        priors[0], priors[1], geom.volumes[0], geom.volumes[1],
        geom.pair_volumes[(0, 1)], r12, diversity,
    )
    return RegimePrediction(
        regime=REGIME_POLYNOMIAL,
        diversity=diversity,
        measurement_gain=gain,
        dominating_pair=(0, 1),
    )


def predict_two_class_source(
    src: SourceGeometry, m: int, priors, geom_for_gain: MeasuredGeometry
) -> RegimePrediction:
    """Regime from the source geometry and the measurement count alone.

    Case ladder over (m, source ranks); the gain still needs projected
    volumes, supplied via ``geom_for_gain``.  Classes are ordered internally
    so the smaller-rank class comes first.
    """
    if len(src.ranks) != 2:
        raise ValueError(f"expected two classes, got {len(src.ranks)}")
    rs1, rs2 = src.ranks
    p1, p2 = priors[0], priors[1]
    if rs1 > rs2:
        rs1, rs2 = rs2, rs1
    rs12 = src.pair_ranks[(0, 1)]
    half_sum = 0.5 * (rs1 + rs2)

    if m <= rs1:
        return RegimePrediction(regime=REGIME_FLOOR, dominating_pair=(0, 1))
    if rs12 <= m and half_sum == rs12:
        return RegimePrediction(regime=REGIME_FLOOR, dominating_pair=(0, 1))
    if rs1 < m <= rs2:
        diversity = 0.25 * (m - rs1)
    elif rs2 < m < rs12:
        diversity = 0.5 * (m - half_sum)
    else:  # rs12 <= m with strict half_sum < rs12
        diversity = 0.5 * (rs12 - half_sum)
    gain = pair_measurement_gain(
        p1, p2, geom_for_gain.volumes[0], geom_for_gain.volumes[1],
        geom_for_gain.pair_volumes[(0, 1)], geom_for_gain.pair_ranks[(0, 1)], diversity,
    )
    return RegimePrediction(
        regime=REGIME_POLYNOMIAL,
        diversity=diversity,
        measurement_gain=gain,
        dominating_pair=(0, 1),
    )


def predict_nonzero_mean(
    model: GmmModel,
    setup: MeasurementSetup,
    src: SourceGeometry | None = None,
    geom: MeasuredGeometry | None = None,
) -> RegimePrediction:
    """Regime for two classes with distinct means.

    If the projected mean difference escapes the image of the projected
    covariance union, the bound decays exponentially in ``1/sigma^2``.
    Otherwise the zero-mean analysis applies, with an unknown finite offset
    factor (flagged in the prediction note) in the polynomial case.
    """
    if model.num_classes != 2:
        raise ValueError(f"expected two classes, got {model.num_classes}")
    mu_diff = model.classes[0].mean - model.classes[1].mean
    if not np.any(mu_diff):
        raise ValueError("classes share the same mean; use the zero-mean predictors")
    phi = setup.phi
    union = phi @ (model.classes[0].covariance + model.classes[1].covariance) @ phi.T
    if not image_contains(union, phi @ mu_diff):
        return RegimePrediction(regime=REGIME_EXPONENTIAL, dominating_pair=(0, 1))
    if geom is None:
        geom = measured_geometry(model, phi)
    if src is not None:
        base = predict_two_class_source(src, setup.m, model.priors, geom)
    else:
        base = predict_two_class_measured(geom, model.priors)
    if base.regime == REGIME_POLYNOMIAL:
        return RegimePrediction(
            regime=REGIME_POLYNOMIAL,
            diversity=base.diversity,
            measurement_gain=base.measurement_gain,
            dominating_pair=(0, 1),
            note=NOTE_UNKNOWN_OFFSET,
        )
    return base


def pairwise_predictions(
    model: GmmModel, setup: MeasurementSetup
) -> dict[tuple[int, int], RegimePrediction]:
    """Two-class regime prediction for every unordered class pair.

    Pair priors are the raw model priors: the pairwise contribution to the
    union bound scales with ``sqrt(P_i P_j)``, so the gain of the dominating
    pair is meaningful without renormalization.
    """
    geom = measured_geometry(model, setup.phi)
    priors = model.priors
    out: dict[tuple[int, int], RegimePrediction] = {}
    for i in range(model.num_classes):
        for j in range(i + 1, model.num_classes):
            cls_i, cls_j = model.classes[i], model.classes[j]
            pair_geom = MeasuredGeometry(
                ranks=(geom.ranks[i], geom.ranks[j]),
                volumes=(geom.volumes[i], geom.volumes[j]),
                pair_ranks={(0, 1): geom.pair_ranks[(i, j)]},
                pair_volumes={(0, 1): geom.pair_volumes[(i, j)]},
                m=setup.m,
            )
            if np.any(cls_i.mean != cls_j.mean):
                union = setup.phi @ (cls_i.covariance + cls_j.covariance) @ setup.phi.T
                if not image_contains(union, setup.phi @ (cls_i.mean - cls_j.mean)):
                    out[(i, j)] = RegimePrediction(
                        regime=REGIME_EXPONENTIAL, dominating_pair=(i, j)
                    )
                    continue
                base = predict_two_class_measured(pair_geom, (priors[i], priors[j]))
                note = NOTE_UNKNOWN_OFFSET if base.regime == REGIME_POLYNOMIAL else ""
            else:
                base = predict_two_class_measured(pair_geom, (priors[i], priors[j]))
                note = ""
            out[(i, j)] = RegimePrediction(
                regime=base.regime,
                diversity=base.diversity,
                measurement_gain=base.measurement_gain,
                dominating_pair=(i, j),
                note=note,
            )
    return out


def predict_multiclass(model: GmmModel, setup: MeasurementSetup) -> RegimePrediction:
    """Union-bound regime: the worst pair dictates floor/diversity/gain."""
    pairs = pairwise_predictions(model, setup)
    for pair, pred in pairs.items():
        if pred.regime == REGIME_FLOOR:
            return RegimePrediction(regime=REGIME_FLOOR, dominating_pair=pair)
    polynomial = {p: pred for p, pred in pairs.items() if pred.regime == REGIME_POLYNOMIAL}
    if not polynomial:
        return RegimePrediction(regime=REGIME_EXPONENTIAL)
    dominating = min(polynomial, key=lambda p: (polynomial[p].diversity, p))
    best = polynomial[dominating]
    return RegimePrediction(
        regime=REGIME_POLYNOMIAL,
        diversity=best.diversity,
        measurement_gain=best.measurement_gain,
        dominating_pair=dominating,
        note=best.note,
    )


# --- empirical extraction ----------------------------------------------------


@dataclass(frozen=True)
class DiversityFit:
    """Least-squares slope of log-bound versus log-noise over a window."""

    slope: float
    stderr: float
    n_points: int
    window: tuple[float, float]


def default_fit_window(sigma2_values, decades: float = 2.0) -> tuple[float, float]:
    """Lowest ``decades`` decades of a noise grid (inclusive)."""
    lo = float(np.min(sigma2_values))
    return lo, lo * 10.0 ** decades


def _window_rows(sigma2, window):
    lo, hi = window
    if not 0.0 < lo <= hi:
        raise ValueError(f"invalid fit window {window}")
    # inclusive with a hair of slack for grid values built from powers of 10
    return (sigma2 >= lo * (1 - 1e-9)) & (sigma2 <= hi * (1 + 1e-9))


def fit_diversity(curve, window: tuple[float, float] | None = None) -> DiversityFit:
    """Slope of log(bound) against log(sigma^2); tends to the diversity order.

    ``curve`` is any object with ``sigma2`` and ``log_bound`` array
    attributes (an :class:`~compclass.montecarlo.ErrorCurve` in practice).
    """
    sigma2 = np.asarray(curve.sigma2, dtype=float)
    log_bound = np.asarray(curve.log_bound, dtype=float)
    if window is None:
        window = default_fit_window(sigma2)
    mask = _window_rows(sigma2, window)
    if int(mask.sum()) < 4:
        raise ValueError(
            f"need at least 4 grid points inside the fit window, got {int(mask.sum())}"
        )
    y = log_bound[mask]
    if not np.all(np.isfinite(y)):
        raise ValueError("bound values must be positive and finite inside the fit window")
    fit = linregress(np.log(sigma2[mask]), y)
    return DiversityFit(
        slope=float(fit.slope),
        stderr=float(fit.stderr),
        n_points=int(mask.sum()),
        window=(float(window[0]), float(window[1])),
    )


def fit_measurement_gain(curve, diversity: float, window: tuple[float, float] | None = None) -> float:
    """Geometric mean of ``sigma^2 * bound^(-1/d)`` over the window.

    The geometric mean suppresses the vanishing correction term of the power
    law, so the estimate converges to the gain as the window moves toward
    zero noise.
    """
    if not diversity > 0.0:
        raise ValueError(f"gain extraction requires positive diversity, got {diversity}")
    sigma2 = np.asarray(curve.sigma2, dtype=float)
    log_bound = np.asarray(curve.log_bound, dtype=float)
    if window is None:
        window = default_fit_window(sigma2)
    mask = _window_rows(sigma2, window)
    if int(mask.sum()) < 1:
        raise ValueError("fit window contains no grid points")
    if not np.all(np.isfinite(log_bound[mask])):
        raise ValueError("bound values must be positive and finite inside the fit window")
    log_points = np.log(sigma2[mask]) - log_bound[mask] / diversity
    return float(np.exp(np.mean(log_points)))
