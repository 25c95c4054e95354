"""Replay files and CSV rendering.

The replay file captures everything a run consumed -- the synthesized model,
every measurement matrix, the noise grid and the simulation parameters -- so
``verify`` can recompute each curve and compare the regenerated CSV text
byte-for-byte against the files on disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import source_geometry
from .config import ExperimentConfig
from .model import DEFAULT_EIGENVALUE_RANGE, GmmModel, RankSpec, model_from_text, model_to_text
from .montecarlo import ErrorCurve

_REPLAY_FORMAT = "compclass-replay 1"

_LOG10_E = math.log10(math.e)


def format_pow10(log_value: float) -> str:
    """Scientific notation from a natural-log value, immune to underflow.

    Rendering from the log representation keeps the CSV bound column exact in
    regimes where ``exp(log_value)`` would flush to zero (exponents far below
    -308 are routine for exponential-decay curves).
    """
    if math.isnan(log_value):
        return "nan"
    if math.isinf(log_value):
        return "0.0" if log_value < 0 else "inf"
    log10_value = log_value * _LOG10_E
    exponent = math.floor(log10_value)
    mantissa = 10.0 ** (log10_value - exponent)
    if mantissa >= 10.0:  # rounding spill at a decade boundary
        mantissa /= 10.0
        exponent += 1
    return f"{mantissa:.12f}e{exponent:+d}"


def curve_csv_text(curve: ErrorCurve, n_ambient: int) -> str:
    """Deterministic CSV for one curve: stable column order, repr floats."""
    lines = [
        "# compressive classification error curve",
        f"# m = {curve.m}",
        f"# n = {n_ambient}",
        f"# trials = {curve.trials}",
        f"# seed = {curve.seed}",
        f"# phi_draws = {len(curve.phis)}",
        "# phi_entry_variance = 1/n",
        f"# union_bound_variant = {curve.variant}",
        "sigma2,inv_sigma2,bound,bound_variant,mc_estimate,mc_ci,trials",
    ]
    for k in range(curve.sigma2.size):
        sigma2 = float(curve.sigma2[k])
        mc_est = curve.mc_estimate[k]
        mc_ci = curve.mc_ci[k]
        mc_est_text = repr(float(mc_est)) if np.isfinite(mc_est) else ""
        mc_ci_text = repr(float(mc_ci)) if np.isfinite(mc_ci) else ""
        lines.append(
            ",".join(
                [
                    repr(sigma2),
                    repr(1.0 / sigma2),
                    format_pow10(float(curve.log_bound[k])),
                    curve.variant,
                    mc_est_text,
                    mc_ci_text,
                    str(curve.trials),
                ]
            )
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ReplayData:
    config: ExperimentConfig
    model: GmmModel
    phis: dict[int, tuple[np.ndarray, ...]]  # m -> matrices, one per draw


def _fmt_row(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def replay_text(cfg: ExperimentConfig, model: GmmModel, phis: dict[int, tuple[np.ndarray, ...]]) -> str:
    lines = [
        f"format = {_REPLAY_FORMAT}",
        f"seed = {cfg.seed}",
        f"trials = {cfg.trials}",
        f"union_bound = {cfg.union_bound_variant}",
        f"phi_draws = {cfg.phi_draws}",
        f"sigma2_decades = {repr(cfg.sigma2_start_decade)} {repr(cfg.sigma2_stop_decade)}",
        f"points_per_decade = {cfg.points_per_decade}",
        f"fit_window_decades = {repr(cfg.fit_window_decades)}",
        f"m_values = {' '.join(str(m) for m in cfg.m_values)}",
        "",
        "[model]",
        model_to_text(model).rstrip("\n"),
    ]
    for m in cfg.m_values:
        for draw, phi in enumerate(phis[m]):
            lines.append("")
            lines.append(f"[phi m={m} draw={draw}]")
            for row in range(phi.shape[0]):
                lines.append(f"row.{row} = {_fmt_row(phi[row])}")
    return "\n".join(lines) + "\n"


def write_replay(path, cfg: ExperimentConfig, model: GmmModel, phis) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(replay_text(cfg, model, phis))


def load_replay(path) -> ReplayData:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()

    header_lines: list[str] = []
    model_lines: list[str] = []
    phi_rows: dict[tuple[int, int], list[str]] = {}
    target: list[str] | None = header_lines
    current_phi: tuple[int, int] | None = None
    for raw in text.splitlines():
        line = raw.strip()
        if line == "[model]":
            target, current_phi = model_lines, None
            continue
        if line.startswith("[phi "):
            inner = line[1:-1]  # "phi m=4 draw=0"
            parts = dict(token.split("=") for token in inner.split()[1:])
            current_phi = (int(parts["m"]), int(parts["draw"]))
            phi_rows[current_phi] = []
            target = phi_rows[current_phi]
            continue
        if line:
            target.append(line)

    header = dict(
        (key.strip(), value.strip())
        for key, _, value in (line.partition("=") for line in header_lines)
    )
    if header.get("format") != _REPLAY_FORMAT:
        raise ValueError(f"unsupported replay format: {header.get('format')!r}")

    model = model_from_text("\n".join(model_lines) + "\n")
    m_values = tuple(int(v) for v in header["m_values"].split())
    start_decade, stop_decade = (float(v) for v in header["sigma2_decades"].split())
    phi_draws = int(header["phi_draws"])

    phis: dict[int, tuple[np.ndarray, ...]] = {}
    for m in m_values:
        draws = []
        for draw in range(phi_draws):
            rows = phi_rows[(m, draw)]
            matrix = np.array(
                [
                    [float(v) for v in line.partition("=")[2].split()]
                    for line in sorted(rows, key=lambda s: int(s.split("=")[0].strip().split(".")[1]))
                ]
            )
            draws.append(matrix)
        phis[m] = tuple(draws)

    # Rank spec is irrelevant for replay (the model itself is stored); rebuild
    # a placeholder consistent with the stored model for the config object.
    src = source_geometry(model)
    spec = RankSpec(
        per_class_ranks=src.ranks,
        pairwise_union_ranks=src.pair_ranks,
        ambient_dim=model.ambient_dim,
    )
    cfg = ExperimentConfig(
        rank_spec=spec,
        priors=tuple(model.priors),
        eigenvalue_range=DEFAULT_EIGENVALUE_RANGE,
        m_values=m_values,
        sigma2_start_decade=start_decade,
        sigma2_stop_decade=stop_decade,
        points_per_decade=int(header["points_per_decade"]),
        trials=int(header["trials"]),
        seed=int(header["seed"]),
        union_bound_variant=header["union_bound"],
        fit_window_decades=float(header["fit_window_decades"]),
        output_path=".",
        phi_draws=phi_draws,
    )
    return ReplayData(config=cfg, model=model, phis=phis)
