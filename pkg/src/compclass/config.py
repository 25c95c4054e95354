"""Experiment configuration: strict line-oriented ``key = value`` files.

Sections are ``[model]``, ``[measurement]``, ``[sweep]`` and ``[run]``.
Unknown keys, missing required keys and invariant violations are hard errors
carrying the offending line number; silent typos are not tolerated.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bounds import VARIANT_PRINTED, VARIANT_STANDARD
from .model import (
    DEFAULT_EIGENVALUE_RANGE,
    MEAN_MODE_DISTINCT,
    MEAN_MODE_ZERO,
    RankSpec,
)


class ConfigError(ValueError):
    """Configuration text failed validation."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


_KNOWN_KEYS = {
    "model": {"ambient_dim", "ranks", "union_ranks", "mean_mode", "priors", "eigenvalues"},
    "measurement": {"m_values"},
    "sweep": {"sigma2_decades", "points_per_decade"},
    "run": {
        "trials",
        "seed",
        "union_bound",
        "fit_window_decades",
        "output",
        "phi_draws",
    },
}
_REQUIRED_KEYS = {
    "model": {"ambient_dim", "ranks", "union_ranks"},
    "measurement": {"m_values"},
    "sweep": {"sigma2_decades", "points_per_decade"},
    "run": {"trials", "seed"},
}


@dataclass(frozen=True)
class ExperimentConfig:
    rank_spec: RankSpec
    priors: tuple[float, ...] | None
    eigenvalue_range: tuple[float, float]
    m_values: tuple[int, ...]
    sigma2_start_decade: float
    sigma2_stop_decade: float
    points_per_decade: int
    trials: int
    seed: int
    union_bound_variant: str
    fit_window_decades: float
    output_path: str
    phi_draws: int

    def sigma_grid(self) -> np.ndarray:
        return sigma_grid(self.sigma2_start_decade, self.sigma2_stop_decade, self.points_per_decade)

    def fit_window(self) -> tuple[float, float]:
        lo = 10.0 ** self.sigma2_stop_decade
        return lo, lo * 10.0 ** self.fit_window_decades

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        kwargs = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **kwargs)


def sigma_grid(start_decade: float, stop_decade: float, points_per_decade: int) -> np.ndarray:
    """Strictly decreasing log-spaced noise grid from 10^start down to 10^stop."""
    if start_decade <= stop_decade:
        raise ValueError(
            f"sigma grid decades must be well ordered (start > stop), "
            f"got {start_decade} .. {stop_decade}"
        )
    if points_per_decade < 1:
        raise ValueError(f"points per decade must be >= 1, got {points_per_decade}")
    steps = round((start_decade - stop_decade) * points_per_decade)
    exponents = start_decade - np.arange(steps + 1) / points_per_decade
    return 10.0 ** exponents


def _parse_lines(text: str):
    """Yield (line_number, section, key, value) for every assignment."""
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _KNOWN_KEYS:
                raise ConfigError(f"unknown section [{section}]", number)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", number)
        if section is None:
            raise ConfigError("assignment before any [section] header", number)
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _KNOWN_KEYS[section]:
            raise ConfigError(f"unknown key {key!r} in section [{section}]", number)
        if not value:
            raise ConfigError(f"empty value for key {key!r}", number)
        yield number, section, key, value


def _to_int(value: str, key: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"key {key!r} expects an integer, got {value!r}", line) from None


def _to_float(value: str, key: str, line: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"key {key!r} expects a number, got {value!r}", line) from None


def parse_config(text: str) -> ExperimentConfig:
    entries: dict[tuple[str, str], tuple[int, str]] = {}
    for number, section, key, value in _parse_lines(text):
        if (section, key) in entries:
            raise ConfigError(f"duplicate key {key!r} in section [{section}]", number)
        entries[(section, key)] = (number, value)

    seen_sections = {section for section, _ in entries}
    for section in ("model", "measurement", "sweep", "run"):
        if section not in seen_sections:
            raise ConfigError(f"missing section [{section}]")
        for key in _REQUIRED_KEYS[section]:
            if (section, key) not in entries:
                raise ConfigError(f"missing required key {key!r} in section [{section}]")

    def get(section, key, default=None):
        if (section, key) in entries:
            return entries[(section, key)]
        return None, default

    # [model]
    line, value = entries[("model", "ambient_dim")]
    ambient_dim = _to_int(value, "ambient_dim", line)
    if ambient_dim < 1:
        raise ConfigError(f"ambient_dim must be >= 1, got {ambient_dim}", line)

    line, value = entries[("model", "ranks")]
    try:
        ranks = tuple(int(v) for v in value.split())
    except ValueError:
        raise ConfigError(f"ranks expects integers, got {value!r}", line) from None

    line, value = entries[("model", "union_ranks")]
    union_ranks: dict[tuple[int, int], int] = {}
    for token in value.split():
        try:
            pair_part, _, rank_part = token.partition(":")
            a, _, b = pair_part.partition("-")
            i, j = int(a) - 1, int(b) - 1
            union_ranks[(min(i, j), max(i, j))] = int(rank_part)
        except ValueError:
            raise ConfigError(
                f"union_ranks entries look like 'i-j:rank', got {token!r}", line
            ) from None

    mode_line, mode = get("model", "mean_mode", MEAN_MODE_ZERO)
    if mode not in (MEAN_MODE_ZERO, MEAN_MODE_DISTINCT):
        raise ConfigError(
            f"mean_mode must be '{MEAN_MODE_ZERO}' or '{MEAN_MODE_DISTINCT}', got {mode!r}",
            mode_line,
        )

    try:
        rank_spec = RankSpec(
            per_class_ranks=ranks,
            pairwise_union_ranks=union_ranks,
            ambient_dim=ambient_dim,
            mean_mode=mode,
        )
    except ValueError as exc:
        raise ConfigError(str(exc), line) from None

    priors_line, priors_value = get("model", "priors")
    priors = None
    if priors_value is not None:
        try:
            priors = tuple(float(v) for v in priors_value.split())
        except ValueError:
            raise ConfigError(f"priors expects numbers, got {priors_value!r}", priors_line) from None
        if len(priors) != len(ranks):
            raise ConfigError(
                f"expected {len(ranks)} priors, got {len(priors)}", priors_line
            )
        if abs(sum(priors) - 1.0) > 1e-12:
            raise ConfigError(f"priors must sum to 1, got {sum(priors)!r}", priors_line)

    eig_line, eig_value = get("model", "eigenvalues")
    eigenvalue_range = DEFAULT_EIGENVALUE_RANGE
    if eig_value is not None:
        parts = eig_value.split()
        if len(parts) != 2:
            raise ConfigError("eigenvalues expects two numbers 'lo hi'", eig_line)
        lo, hi = (_to_float(p, "eigenvalues", eig_line) for p in parts)
        if not 0.0 < lo <= hi:
            raise ConfigError(f"eigenvalues must satisfy 0 < lo <= hi, got {lo} {hi}", eig_line)
        eigenvalue_range = (lo, hi)

    # [measurement]
    line, value = entries[("measurement", "m_values")]
    try:
        m_values = tuple(int(v) for v in value.split())
    except ValueError:
        raise ConfigError(f"m_values expects integers, got {value!r}", line) from None
    if not m_values:
        raise ConfigError("m_values must be nonempty", line)
    for m in m_values:
        if not 1 <= m <= ambient_dim:
            raise ConfigError(
                f"m_values entries must satisfy 1 <= m <= ambient_dim ({ambient_dim}), got {m}",
                line,
            )

    # [sweep]
    line, value = entries[("sweep", "sigma2_decades")]
    parts = value.split()
    if len(parts) != 2:
        raise ConfigError("sigma2_decades expects two numbers 'start stop'", line)
    start_decade, stop_decade = (_to_float(p, "sigma2_decades", line) for p in parts)
    if start_decade <= stop_decade:
        raise ConfigError(
            f"sigma2_decades must be well ordered (start > stop), got {value!r}", line
        )
    line, value = entries[("sweep", "points_per_decade")]
    points_per_decade = _to_int(value, "points_per_decade", line)
    if points_per_decade < 1:
        raise ConfigError(f"points_per_decade must be >= 1, got {points_per_decade}", line)

    # [run]
    line, value = entries[("run", "trials")]
    trials = _to_int(value, "trials", line)
    if trials < 0:
        raise ConfigError(f"trials must be >= 0 (0 = bound-only run), got {trials}", line)
    line, value = entries[("run", "seed")]
    seed = _to_int(value, "seed", line)

    variant_line, variant = get("run", "union_bound", VARIANT_PRINTED)
    if variant not in (VARIANT_PRINTED, VARIANT_STANDARD):
        raise ConfigError(
            f"union_bound must be '{VARIANT_PRINTED}' or '{VARIANT_STANDARD}', got {variant!r}",
            variant_line,
        )

    window_line, window_value = get("run", "fit_window_decades", "2")
    fit_window_decades = _to_float(window_value, "fit_window_decades", window_line)
    if fit_window_decades <= 0:
        raise ConfigError(
            f"fit_window_decades must be positive, got {fit_window_decades}", window_line
        )

    _, output = get("run", "output", "out")

    draws_line, draws_value = get("run", "phi_draws", "1")
    phi_draws = _to_int(draws_value, "phi_draws", draws_line)
    if phi_draws < 1:
        raise ConfigError(f"phi_draws must be >= 1, got {phi_draws}", draws_line)

    return ExperimentConfig(
        rank_spec=rank_spec,
        priors=priors,
        eigenvalue_range=eigenvalue_range,
        m_values=m_values,
        sigma2_start_decade=start_decade,
        sigma2_stop_decade=stop_decade,
        points_per_decade=points_per_decade,
        trials=trials,
        seed=seed,
        union_bound_variant=variant,
        fit_window_decades=fit_window_decades,
        output_path=output,
        phi_draws=phi_draws,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
