"""End-to-end acceptance suite.

Each test implements one numbered acceptance criterion at its stated
tolerance and prints one PASS/FAIL line (run with ``pytest -s`` to see the
lines as they happen).  Criteria marked ``xfail(strict=True)`` are
mathematically unattainable as stated; the test asserts the criterion
verbatim and documents the measured behavior instead of weakening it.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from compclass.bounds import (
    VARIANT_STANDARD,
    multiclass_bound,
    pair_exponent,
    two_class_bound,
    two_class_log_bound,
)
from compclass.classifier import build_context, log_likelihood
from compclass.cli import main
from compclass.config import load_config, sigma_grid
from compclass.experiment import build_model
from compclass.linalg import numerical_rank, pseudo_det
from compclass.measurement import MeasurementSetup, draw_measurement_matrix
from compclass.model import RankSpec, synthesize_class_pair, synthesize_ensemble
from compclass.montecarlo import (
    curve_from_bounds,
    derive_seed,
    estimate_error,
    sweep_error_curve,
)
from compclass.asymptotics import (
    fit_diversity,
    fit_measurement_gain,
    measured_geometry,
    predict_two_class_source,
    source_geometry,
)

REPO = Path(__file__).resolve().parent.parent
CONFIGS = REPO / "configs"

FIG1 = load_config(CONFIGS / "fig1.cfg")
FIG2 = load_config(CONFIGS / "fig2.cfg")
FIG3 = load_config(CONFIGS / "fig3.cfg")


def report(number: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number} [{name}]: {status} {detail}".rstrip())


def fig_curves(cfg, m_values, grid):
    model = build_model(cfg)
    return model, {
        m: sweep_error_curve(model, m, grid, trials=0, seed=cfg.seed) for m in m_values
    }


def log_bound_at(model, phi, sigma2):
    return two_class_log_bound(model, MeasurementSetup(phi=phi, noise_variance=sigma2))


# --- criterion 1: floor detection on the fig1 configuration -----------------


class TestCriterion1FloorDetection:
    def test_floor_for_m_1_2_and_decay_for_m_4_to_6(self):
        start = time.monotonic()
        model, curves = fig_curves(FIG1, (1, 2, 4, 5, 6), FIG1.sigma_grid())
        flat_ok = {}
        for m in (1, 2):
            phi = curves[m].phis[0]
            l6, l8 = log_bound_at(model, phi, 1e-6), log_bound_at(model, phi, 1e-8)
            flat_ok[m] = abs(1.0 - math.exp(l8 - l6)) < 0.01
        decay_ok = {}
        for m in (4, 5, 6):
            phi = curves[m].phis[0]
            l6, l8 = log_bound_at(model, phi, 1e-6), log_bound_at(model, phi, 1e-8)
            decay_ok[m] = math.exp(l6 - l8) >= 10.0
        elapsed = time.monotonic() - start
        ok = all(flat_ok.values()) and all(decay_ok.values()) and elapsed < 60
        report(
            1,
            "floor detection, M in {1,2} flat / M in {4,5,6} 10x decay",
            ok,
            f"(elapsed {elapsed:.1f}s)",
        )
        assert all(flat_ok.values()), flat_ok
        assert all(decay_ok.values()), decay_ok
        assert elapsed < 60

    @pytest.mark.xfail(
        strict=True,
        reason=(
            "unattainable as stated: at M = 3 the diversity order is 0.25 "
            "(asserted by criterion 2), so two decades of noise reduce the "
            "bound by 10^(2*0.25) ~ 3.16x, which can never reach the demanded "
            "10x; the honest measured ratio is printed by the test"
        ),
    )
    def test_decay_for_m3_as_stated(self):
        model, curves = fig_curves(FIG1, (3,), FIG1.sigma_grid())
        phi = curves[3].phis[0]
        l6, l8 = log_bound_at(model, phi, 1e-6), log_bound_at(model, phi, 1e-8)
        ratio = math.exp(l6 - l8)
        report(
            1,
            "floor detection, M = 3 10x decay sub-check",
            ratio >= 10.0,
            f"(measured ratio {ratio:.3f}, consistent with d = 0.25)",
        )
        assert ratio >= 10.0

    def test_m3_ratio_matches_its_diversity_order(self):
        # companion check: the M = 3 two-decade ratio sits at 10^(1/2)
        model, curves = fig_curves(FIG1, (3,), FIG1.sigma_grid())
        phi = curves[3].phis[0]
        ratio = math.exp(log_bound_at(model, phi, 1e-6) - log_bound_at(model, phi, 1e-8))
        assert ratio == pytest.approx(10 ** 0.5, rel=0.02)


# --- criterion 2: fitted diversity slopes match the closed form -------------


class TestCriterion2DiversitySlopes:
    def test_fig1_slopes(self):
        start = time.monotonic()
        expected = {3: 0.25, 4: 0.75, 5: 0.75, 6: 0.75}
        model, curves = fig_curves(FIG1, tuple(expected), FIG1.sigma_grid())
        window = FIG1.fit_window()
        src = source_geometry(model)
        gaps = {}
        for m, d_expected in expected.items():
            pred = predict_two_class_source(
                src, m, model.priors, measured_geometry(model, curves[m].phis[0])
            )
            assert pred.diversity == pytest.approx(d_expected)
            fit = fit_diversity(curves[m], window)
            gaps[m] = abs(fit.slope - d_expected)
        elapsed = time.monotonic() - start
        ok = all(gap <= 0.05 for gap in gaps.values()) and elapsed < 60
        report(
            2,
            "fitted d_hat within 0.05 of closed form (0.25 / 0.75)",
            ok,
            f"(gaps {({m: round(g, 4) for m, g in gaps.items()})}, elapsed {elapsed:.1f}s)",
        )
        assert all(gap <= 0.05 for gap in gaps.values()), gaps
        assert elapsed < 60


# --- criterion 3: measurement gain ordering and closed-form agreement -------


class TestCriterion3MeasurementGain:
    def test_gain_ordering_and_agreement(self):
        model, curves = fig_curves(FIG1, (4, 6), sigma_grid(0, -6, 10))
        window = (1e-6, 1e-5)  # sigma^2 <= 1e-5 as stated
        src = source_geometry(model)
        fitted = {}
        closed = {}
        for m in (4, 6):
            pred = predict_two_class_source(
                src, m, model.priors, measured_geometry(model, curves[m].phis[0])
            )
            closed[m] = pred.measurement_gain
            fitted[m] = fit_measurement_gain(curves[m], pred.diversity, window)
        ordering = fitted[6] > fitted[4]
        agreement = {m: abs(closed[m] - fitted[m]) / closed[m] for m in (4, 6)}
        ok = ordering and all(rel <= 0.10 for rel in agreement.values())
        report(
            3,
            "gain ordering g(6) > g(4) and closed form within 10%",
            ok,
            f"(fitted g4 = {fitted[4]:.4g}, g6 = {fitted[6]:.4g}, "
            f"rel err {({m: round(r, 4) for m, r in agreement.items()})})",
        )
        assert ordering, fitted
        assert all(rel <= 0.10 for rel in agreement.values()), agreement


# --- criterion 4: nonzero-mean dichotomy -------------------------------------


class TestCriterion4NonzeroMeanDichotomy:
    def test_floor_then_exponential(self):
        model, curves = fig_curves(FIG2, (1, 2, 3, 4, 5, 6), FIG2.sigma_grid())
        flat_ok = {}
        for m in (1, 2):
            phi = curves[m].phis[0]
            l6, l8 = log_bound_at(model, phi, 1e-6), log_bound_at(model, phi, 1e-8)
            flat_ok[m] = abs(1.0 - math.exp(l8 - l6)) < 0.01
        corr = {}
        for m in (3, 4, 5, 6):
            curve = curves[m]
            mask = (curve.sigma2 >= 1e-4 * (1 - 1e-9)) & (curve.sigma2 <= 1e-2 * (1 + 1e-9))
            corr[m] = float(np.corrcoef(1.0 / curve.sigma2[mask], curve.log_bound[mask])[0, 1])
        ok = all(flat_ok.values()) and all(c <= -0.999 for c in corr.values())
        report(
            4,
            "nonzero-mean: floor at M <= 2, exponential decay at M >= 3",
            ok,
            f"(correlations {({m: round(c, 5) for m, c in corr.items()})})",
        )
        assert all(flat_ok.values()), flat_ok
        assert all(c <= -0.999 for c in corr.values()), corr


# --- criterion 5: multi-class worst-pair dominance ---------------------------


class TestCriterion5MulticlassDominance:
    def test_union_slope_equals_min_pair_slope(self):
        model = build_model(FIG3)
        deep = sigma_grid(-8, -10, 10)
        window = (1e-10, 1e-8)
        union = sweep_error_curve(
            model, 4, deep, trials=0, seed=FIG3.seed, variant=FIG3.union_bound_variant
        )
        union_slope = fit_diversity(union, window).slope
        phi = union.phis[0]
        priors = model.priors
        pair_slopes = {}
        for i in range(4):
            for j in range(i + 1, 4):
                logs = [
                    0.5 * math.log(priors[i] * priors[j])
                    - pair_exponent(model, MeasurementSetup(phi, s2), i, j).k_value
                    for s2 in deep
                ]
                pair_curve = curve_from_bounds(deep, np.exp(np.array(logs) - max(logs)))
                pair_slopes[(i, j)] = fit_diversity(pair_curve, window).slope
        dominating = min(pair_slopes, key=pair_slopes.get)
        min_slope = pair_slopes[dominating]
        gap = abs(union_slope - min_slope)
        ok = gap <= 0.05 and dominating == (1, 2)
        report(
            5,
            "union bound slope matches worst pair, dominating pair (2,3)",
            ok,
            f"(union {union_slope:.4f}, min pair {min_slope:.4f}, pair {dominating})",
        )
        assert gap <= 0.05, (union_slope, min_slope)
        assert dominating == (1, 2)

    def test_report_names_pair_and_discrepancy_line(self, tmp_path):
        code = main(
            [
                "run",
                "--config", str(CONFIGS / "fig3.cfg"),
                "--trials", "0",
                "--out", str(tmp_path / "fig3"),
            ]
        )
        assert code == 0
        text = (tmp_path / "fig3" / "report.txt").read_text()
        names_pair = "dominating pair = (2,3)" in text
        has_line = "DISCREPANCY (documented ambiguity)" in text
        supports = "supports d = 0.500" in text
        mentions_alternative = "doubled alternative d = 1.000" in text
        ok = names_pair and has_line and supports and mentions_alternative
        report(
            5,
            "report: dominating pair named, 0.5-vs-1 discrepancy line present",
            ok,
            "(fitted slope supports the rank-formula value 0.5)",
        )
        assert ok, text


# --- criterion 6: bound validity over a randomized suite ---------------------


def _random_feasible_spec(rng, count, n):
    while True:
        ranks = tuple(int(rng.integers(1, 4)) for _ in range(count))
        unions = {}
        for i in range(count):
            for j in range(i + 1, count):
                lo = max(ranks[i], ranks[j])
                hi = min(n, ranks[i] + ranks[j])
                unions[(i, j)] = int(rng.integers(lo, hi + 1))
        mode = "distinct" if rng.integers(2) else "zero"
        try:
            spec = RankSpec(ranks, unions, n, mean_mode=mode)
            synthesize_ensemble(spec, 12345)  # feasibility probe
            return spec
        except ValueError:
            continue


class TestCriterion6BoundValidity:
    def test_thirty_randomized_configurations(self):
        rng = np.random.default_rng(606)
        violations = []
        for index in range(30):
            count = 2 if index % 2 == 0 else 4
            spec = _random_feasible_spec(rng, count, 6)
            model = synthesize_ensemble(spec, int(rng.integers(1 << 30)))
            m = int(rng.integers(1, 7))
            phi = draw_measurement_matrix(m, 6, int(rng.integers(1 << 30)))
            sigma2 = float(10 ** rng.uniform(-3, 0))
            setup = MeasurementSetup(phi, sigma2)
            if count == 2:
                bound = two_class_bound(model, setup)
            else:
                # the provably-valid symmetric union form gates this suite
                bound = multiclass_bound(model, setup, VARIANT_STANDARD)
            mc = estimate_error(model, setup, trials=40_000, seed=8000 + index)
            if mc.p_hat > bound + 3 * mc.ci_half_width:
                violations.append((index, count, m, sigma2, mc.p_hat, bound))
        ok = not violations
        report(
            6,
            "Monte Carlo rate <= bound + 3 CI over 30 random configs",
            ok,
            f"({len(violations)} violations; union variant: standard)",
        )
        assert ok, violations


# --- criterion 7: oracle equivalence -----------------------------------------


def _dense_exponent_oracle(model, setup, i, j):
    phi, sig2 = setup.phi, setup.noise_variance
    eye = sig2 * np.eye(setup.m)
    s_i = phi @ model.classes[i].covariance @ phi.T + eye
    s_j = phi @ model.classes[j].covariance @ phi.T + eye
    h = (s_i + s_j) / 2
    d = phi @ (model.classes[i].mean - model.classes[j].mean)
    return float(
        d @ np.linalg.inv(h) @ d / 8
        + 0.5 * math.log(np.linalg.det(h) / math.sqrt(np.linalg.det(s_i) * np.linalg.det(s_j)))
    )


class TestCriterion7OracleEquivalence:
    def test_hundred_random_instances(self):
        rng = np.random.default_rng(707)
        worst = {"pair_exponent": 0.0, "log_likelihood": 0.0, "pseudo_det": 0.0}
        for _ in range(100):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(1, 7))
            r1, r2 = int(rng.integers(1, n + 1)), int(rng.integers(1, n + 1))
            r12 = int(rng.integers(max(r1, r2), min(n, r1 + r2) + 1))
            mode = "distinct" if rng.integers(2) else "zero"
            spec = RankSpec((r1, r2), {(0, 1): r12}, n, mean_mode=mode)
            model = synthesize_class_pair(spec, int(rng.integers(1 << 30)))
            setup = MeasurementSetup(
                draw_measurement_matrix(m, n, int(rng.integers(1 << 30))),
                float(10 ** rng.uniform(-3, 0)),
            )
            got = pair_exponent(model, setup, 0, 1).k_value
            want = _dense_exponent_oracle(model, setup, 0, 1)
            if want != 0:
                worst["pair_exponent"] = max(worst["pair_exponent"], abs(got - want) / abs(want))

            ctx = build_context(model, setup)
            y = rng.standard_normal(m)
            k = int(rng.integers(2))
            from compclass.measurement import induced_class_moments

            mean, cov = induced_class_moments(setup, model.classes[k])
            want_ll = float(multivariate_normal(mean=mean, cov=cov).logpdf(y))
            got_ll = log_likelihood(ctx, y, k)
            worst["log_likelihood"] = max(
                worst["log_likelihood"], abs(got_ll - want_ll) / abs(want_ll)
            )

            target = setup.phi @ model.classes[0].covariance @ setup.phi.T
            sv = np.linalg.svd(target, compute_uv=False)
            oracle = float(np.prod(sv[sv > 1e-9 * sv.max()])) if sv.max() > 0 else 1.0
            got_pd = pseudo_det(target)
            worst["pseudo_det"] = max(worst["pseudo_det"], abs(got_pd - oracle) / abs(oracle))
        ok = all(rel <= 1e-8 for rel in worst.values())
        report(
            7,
            "pair_exponent / log_likelihood / pseudo_det vs brute-force oracles",
            ok,
            f"(worst rel err {({k: f'{v:.2e}' for k, v in worst.items()})})",
        )
        assert ok, worst


# --- criterion 8: random-projection rank law ----------------------------------


class TestCriterion8RankLaw:
    def test_hundred_draws_zero_failures(self):
        rng = np.random.default_rng(808)
        failures = 0
        for trial in range(100):
            m = 1 + trial % 6
            r = int(rng.integers(1, 7))
            q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
            sigma = (q[:, :r] * rng.uniform(0.5, 1.5, r)) @ q[:, :r].T
            phi = draw_measurement_matrix(m, 6, int(rng.integers(1 << 30)))
            if numerical_rank(phi @ sigma @ phi.T) != min(m, r):
                failures += 1
        ok = failures == 0
        report(8, "rank(phi S phi^T) = min(M, rank S) on 100 draws", ok, f"({failures} failures)")
        assert ok


# --- criterion 9: determinism across worker counts ----------------------------


class TestCriterion9Determinism:
    def test_byte_identical_csvs(self, tmp_path):
        outs = {}
        for label, workers in (("a", "1"), ("b", "3")):
            out = tmp_path / label
            code = main(
                [
                    "run",
                    "--config", str(CONFIGS / "fig1.cfg"),
                    "--trials", "20000",
                    "--workers", workers,
                    "--out", str(out),
                ]
            )
            assert code == 0
            outs[label] = out
        identical = True
        for m in range(1, 7):
            bytes_a = (outs["a"] / f"curve_M{m}.csv").read_bytes()
            bytes_b = (outs["b"] / f"curve_M{m}.csv").read_bytes()
            if bytes_a != bytes_b:
                identical = False
        report(
            9,
            "same seed, worker counts 1 vs 3: byte-identical CSVs",
            identical,
            "(fig1 config, 20000 trials/point)",
        )
        assert identical
