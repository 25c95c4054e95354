"""Gaussian mixture class models with prescribed low-rank covariance geometry.

Synthetic models are built from a shared random orthonormal basis so that the
rank of every class covariance and of every pairwise covariance sum is exact
by construction, then re-verified with :func:`compclass.linalg.numerical_rank`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .linalg import DEFAULT_RANK_RTOL, image_contains, numerical_rank, psd_spectrum

MEAN_MODE_ZERO = "zero"
MEAN_MODE_DISTINCT = "distinct"

_PRIOR_SUM_TOL = 1e-12
_SYNTH_RETRIES = 5
_MEAN_REDRAWS = 20

# Synthetic covariance eigenvalues are kept inside this window so volumes stay
# well conditioned and gain comparisons remain meaningful.
DEFAULT_EIGENVALUE_RANGE = (0.5, 1.5)


@dataclass(frozen=True)
class GaussianClass:
    """One mixture component: mean vector, PSD covariance, prior probability."""

    mean: np.ndarray
    covariance: np.ndarray
    prior: float

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.covariance, dtype=float)
        if mean.ndim != 1:
            raise ValueError(f"mean must be a vector, got shape {mean.shape}")
        psd_spectrum(cov, name="covariance")
        if cov.shape[0] != mean.shape[0]:
            raise ValueError(
                f"covariance dimension {cov.shape[0]} does not match mean dimension {mean.shape[0]}"
            )
        if not 0.0 < self.prior <= 1.0:
            raise ValueError(f"prior must lie in (0, 1], got {self.prior}")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "prior", float(self.prior))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sampling_factor(self, rtol: float = DEFAULT_RANK_RTOL) -> np.ndarray:
        """Factor B with rank-many columns such that B @ B.T == covariance."""
        w, u = psd_spectrum(self.covariance, name="covariance")
        if w.size == 0 or w[-1] <= 0.0:
            return np.zeros((self.dim, 0))
        keep = w > rtol * w[-1]
        return u[:, keep] * np.sqrt(w[keep])


@dataclass(frozen=True)
class GmmModel:
    """Ordered Gaussian mixture with priors summing to one."""

    classes: tuple[GaussianClass, ...]
    ambient_dim: int
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        classes = tuple(self.classes)
        if len(classes) < 2:
            raise ValueError(f"a mixture needs at least 2 classes, got {len(classes)}")
        for idx, cls in enumerate(classes):
            if cls.dim != self.ambient_dim:
                raise ValueError(
                    f"class {idx} has dimension {cls.dim}, expected {self.ambient_dim}"
                )
        total = sum(cls.prior for cls in classes)
        if abs(total - 1.0) > _PRIOR_SUM_TOL:
            raise ValueError(f"priors must sum to 1 within {_PRIOR_SUM_TOL}, got {total!r}")
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def priors(self) -> np.ndarray:
        return np.array([cls.prior for cls in self.classes])


@dataclass(frozen=True)
class RankSpec:
    """Prescribed per-class covariance ranks and pairwise union ranks.

    ``pairwise_union_ranks`` maps 0-based index pairs ``(i, j)`` with
    ``i < j`` to the required rank of ``cov_i + cov_j``.  Valid entries obey
    ``max(r_i, r_j) <= r_ij <= min(N, r_i + r_j)``.
    """

    per_class_ranks: tuple[int, ...]
    pairwise_union_ranks: Mapping[tuple[int, int], int]
    ambient_dim: int
    mean_mode: str = MEAN_MODE_ZERO

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.per_class_ranks)
        n = int(self.ambient_dim)
        if len(ranks) < 2:
            raise ValueError("need ranks for at least 2 classes")
        for i, r in enumerate(ranks):
            if not 1 <= r <= n:
                raise ValueError(f"class {i + 1} rank {r} outside [1, {n}]")
        if self.mean_mode not in (MEAN_MODE_ZERO, MEAN_MODE_DISTINCT):
            raise ValueError(f"unknown mean_mode {self.mean_mode!r}")
        pairs = {}
        for key, value in dict(self.pairwise_union_ranks).items():
            i, j = int(key[0]), int(key[1])
            if not 0 <= i < j < len(ranks):
                raise ValueError(f"pair index {key} out of range")
            pairs[(i, j)] = int(value)
        for i in range(len(ranks)):
            for j in range(i + 1, len(ranks)):
                if (i, j) not in pairs:
                    raise ValueError(f"missing union rank for pair ({i + 1}, {j + 1})")
                rij = pairs[(i, j)]
                lo = max(ranks[i], ranks[j])
                hi = min(n, ranks[i] + ranks[j])
                if not lo <= rij <= hi:
                    raise ValueError(
                        f"union rank {rij} for pair ({i + 1}, {j + 1}) outside "
                        f"feasible range [{lo}, {hi}]"
                    )
        object.__setattr__(self, "per_class_ranks", ranks)
        object.__setattr__(self, "pairwise_union_ranks", pairs)
        object.__setattr__(self, "ambient_dim", n)

    @property
    def num_classes(self) -> int:
        return len(self.per_class_ranks)


def _allocate_basis_columns(spec: RankSpec) -> list[list[int]]:
    """Assign orthonormal-basis column indices to classes.

    Overlap between classes i and j uses a block of ``s_ij = r_i + r_j - r_ij``
    columns dedicated to that pair, so every pairwise union rank is met
    exactly.  Fails when the pairwise-shared blocks exceed a class rank or the
    ambient dimension.
    """
    ranks = spec.per_class_ranks
    count = len(ranks)
    shared = {pair: ranks[pair[0]] + ranks[pair[1]] - rij
              for pair, rij in spec.pairwise_union_ranks.items()}
    columns: list[list[int]] = [[] for _ in range(count)]
    cursor = 0
    for (i, j) in sorted(shared):
        block = list(range(cursor, cursor + shared[(i, j)]))
        cursor += shared[(i, j)]
        columns[i].extend(block)
        columns[j].extend(block)
    for i in range(count):
        own = ranks[i] - len(columns[i])
        if own < 0:
            bad = min(p for p in shared if i in p and shared[p] > 0)
            raise ValueError(
                f"no feasible subspace allocation: class {i + 1} rank {ranks[i]} "
                f"cannot host its shared directions (first conflicting pair "
                f"({bad[0] + 1}, {bad[1] + 1}))"
            )
        columns[i].extend(range(cursor, cursor + own))
        cursor += own
    if cursor > spec.ambient_dim:
        raise ValueError(
            f"no feasible subspace allocation: {cursor} basis vectors needed "
            f"but ambient dimension is {spec.ambient_dim}"
        )
    return columns


def _random_orthonormal(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _verify_ranks(covs: list[np.ndarray], spec: RankSpec) -> tuple[int, int] | None:
    for i, cov in enumerate(covs):
        if numerical_rank(cov) != spec.per_class_ranks[i]:
            return (i, i)
    for (i, j), rij in spec.pairwise_union_ranks.items():
        if numerical_rank(covs[i] + covs[j]) != rij:
            return (i, j)
    return None


def synthesize_ensemble(
    spec: RankSpec,
    rng_seed: int,
    priors=None,
    eigenvalue_range: tuple[float, float] = DEFAULT_EIGENVALUE_RANGE,
) -> GmmModel:
    """Build a mixture whose covariance geometry matches ``spec`` exactly.

    Class subspaces share basis vectors pair by pair; covariance eigenvalues
    are drawn i.i.d. uniform on ``eigenvalue_range``.  Priors default to
    uniform.  The result is re-verified with ``numerical_rank`` and the build
    retries with a fresh basis (bounded) if verification fails.
    """
    count = spec.num_classes
    n = spec.ambient_dim
    if priors is None:
        priors = [1.0 / count] * count
    if len(priors) != count:
        raise ValueError(f"expected {count} priors, got {len(priors)}")
    lo, hi = eigenvalue_range
    if not 0.0 < lo <= hi:
        raise ValueError(f"eigenvalue range must satisfy 0 < lo <= hi, got {eigenvalue_range}")
    columns = _allocate_basis_columns(spec)
    rng = np.random.default_rng(rng_seed)

    failure = None
    for _ in range(_SYNTH_RETRIES):
        basis = _random_orthonormal(n, rng)
        covs = []
        for idx in columns:
            u = basis[:, idx]
            eigs = rng.uniform(lo, hi, len(idx))
            covs.append((u * eigs) @ u.T)
        failure = _verify_ranks(covs, spec)
        if failure is None:
            break
    if failure is not None:
        raise ValueError(
            f"rank verification failed for pair ({failure[0] + 1}, {failure[1] + 1}) "
            f"after {_SYNTH_RETRIES} attempts"
        )

    meta = {"mean_redraw_policy": "none", "mean_redraw_count": "0"}
    if spec.mean_mode == MEAN_MODE_DISTINCT:
        means, redraws = _draw_distinct_means(covs, n, rng)
        meta = {
            "mean_redraw_policy": "resample-while-contained-in-pair-union-image",
            "mean_redraw_count": str(redraws),
        }
    else:
        means = [np.zeros(n) for _ in range(count)]

    classes = tuple(
        GaussianClass(mean=means[i], covariance=covs[i], prior=float(priors[i]))
        for i in range(count)
    )
    return GmmModel(classes=classes, ambient_dim=n, meta=meta)


def _draw_distinct_means(covs, n, rng) -> tuple[list[np.ndarray], int]:
    """Draw i.i.d. standard-normal means, redrawing while any pairwise mean
    difference falls inside the image of that pair's covariance sum (only
    possible to avoid when the union subspace is rank deficient)."""
    count = len(covs)
    redraws = 0
    for _ in range(_MEAN_REDRAWS):
        means = [rng.standard_normal(n) for _ in range(count)]
        trapped = False
        for i in range(count):
            for j in range(i + 1, count):
                union = covs[i] + covs[j]
                if numerical_rank(union) < n and image_contains(union, means[i] - means[j]):
                    trapped = True
        if not trapped:
            return means, redraws
        redraws += 1
    return means, redraws


def synthesize_class_pair(
    spec: RankSpec,
    rng_seed: int,
    priors=None,
    eigenvalue_range: tuple[float, float] = DEFAULT_EIGENVALUE_RANGE,
) -> GmmModel:
    """Two-class specialization of :func:`synthesize_ensemble`."""
    if spec.num_classes != 2:
        raise ValueError(f"expected a 2-class spec, got {spec.num_classes} classes")
    return synthesize_ensemble(spec, rng_seed, priors=priors, eigenvalue_range=eigenvalue_range)


def class_factors(model: GmmModel, rtol: float = DEFAULT_RANK_RTOL) -> list[np.ndarray]:
    """Per-class sampling factors, computed once for batch sampling."""
    return [cls.sampling_factor(rtol) for cls in model.classes]


def sample_source(model: GmmModel, rng: np.random.Generator):
    """Draw (class_index, x) with x ~ N(mean_i, cov_i) for the drawn class."""
    k = int(rng.choice(model.num_classes, p=model.priors))
    cls = model.classes[k]
    factor = cls.sampling_factor()
    x = cls.mean + factor @ rng.standard_normal(factor.shape[1])
    return k, x


def sample_source_batch(
    model: GmmModel,
    count: int,
    rng: np.random.Generator,
    factors: list[np.ndarray] | None = None,
):
    """Vectorized source draws: returns (labels, X) with X of shape (count, N).

    Randomness is consumed in a fixed order (labels, then per-class latents in
    class order) so a given generator state always yields the same batch.
    """
    if factors is None:
        factors = class_factors(model)
    labels = rng.choice(model.num_classes, size=count, p=model.priors)
    x = np.empty((count, model.ambient_dim))
    for k, cls in enumerate(model.classes):
        idx = np.flatnonzero(labels == k)
        z = rng.standard_normal((idx.size, factors[k].shape[1]))
        x[idx] = cls.mean + z @ factors[k].T
    return labels, x


# --- text serialization -----------------------------------------------------
#
# Self-describing key = value schema, one logical value per line; vectors and
# covariance rows are space-separated floats serialized with repr() so they
# round-trip bit exactly.

_MODEL_FORMAT = "compclass-model 1"


def _fmt_floats(values) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(values, dtype=float).ravel())


def model_to_text(model: GmmModel) -> str:
    lines = [
        f"format = {_MODEL_FORMAT}",
        f"ambient_dim = {model.ambient_dim}",
        f"num_classes = {model.num_classes}",
    ]
    for key in sorted(model.meta):
        lines.append(f"meta.{key} = {model.meta[key]}")
    for idx, cls in enumerate(model.classes):
        lines.append(f"class.{idx}.prior = {repr(cls.prior)}")
        lines.append(f"class.{idx}.mean = {_fmt_floats(cls.mean)}")
        for row in range(model.ambient_dim):
            lines.append(f"class.{idx}.cov.{row} = {_fmt_floats(cls.covariance[row])}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> GmmModel:
    entries: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed model line: {raw!r}")
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    if entries.get("format") != _MODEL_FORMAT:
        raise ValueError(f"unsupported model format: {entries.get('format')!r}")
    n = int(entries["ambient_dim"])
    count = int(entries["num_classes"])
    meta = {k[len("meta."):]: v for k, v in entries.items() if k.startswith("meta.")}
    classes = []
    for idx in range(count):
        prior = float(entries[f"class.{idx}.prior"])
        mean = np.array([float(v) for v in entries[f"class.{idx}.mean"].split()])
        cov = np.array(
            [[float(v) for v in entries[f"class.{idx}.cov.{row}"].split()] for row in range(n)]
        )
        classes.append(GaussianClass(mean=mean, covariance=cov, prior=prior))
    return GmmModel(classes=tuple(classes), ambient_dim=n, meta=meta)


def save_model(model: GmmModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(model_to_text(model))


def load_model(path) -> GmmModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_text(fh.read())
