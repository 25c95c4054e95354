"""Regime prediction and slope/gain extraction tests."""

import numpy as np
import pytest

from compclass.asymptotics import (
    REGIME_EXPONENTIAL,
    REGIME_FLOOR,
    REGIME_POLYNOMIAL,
    MeasuredGeometry,
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
from compclass.config import sigma_grid
from compclass.measurement import MeasurementSetup, draw_measurement_matrix
from compclass.model import (
    GaussianClass,
    GmmModel,
    RankSpec,
    synthesize_class_pair,
    synthesize_ensemble,
)
from compclass.montecarlo import curve_from_bounds, sweep_error_curve

FIG1_SPEC = RankSpec((2, 3), {(0, 1): 4}, 6)
FIG2_SPEC = RankSpec((2, 2), {(0, 1): 2}, 6, mean_mode="distinct")
FIG3_SPEC = RankSpec(
    (2, 3, 3, 2),
    {(0, 1): 4, (0, 2): 5, (0, 3): 4, (1, 2): 4, (1, 3): 5, (2, 3): 4},
    6,
)
SEED = 20260811


def orthogonal_lines_model():
    c1 = GaussianClass(np.zeros(2), np.diag([1.0, 0.0]), 0.5)
    c2 = GaussianClass(np.zeros(2), np.diag([0.0, 1.0]), 0.5)
    return GmmModel((c1, c2), 2)


class TestMeasuredGeometry:
    def test_orthogonal_diagonals(self):
        geom = measured_geometry(orthogonal_lines_model(), np.eye(2))
        assert geom.ranks == (1, 1)
        assert geom.pair_ranks[(0, 1)] == 2
        assert geom.volumes[0] == pytest.approx(1.0)
        assert geom.volumes[1] == pytest.approx(1.0)
        assert geom.pair_volumes[(0, 1)] == pytest.approx(1.0)

    @pytest.mark.parametrize("m,expected", [(3, (2, 3, 3)), (5, (2, 3, 4))])
    def test_fig1_rank_law(self, m, expected):
        model = synthesize_class_pair(FIG1_SPEC, SEED)
        geom = measured_geometry(model, draw_measurement_matrix(m, 6, SEED + m))
        assert (geom.ranks[0], geom.ranks[1], geom.pair_ranks[(0, 1)]) == expected


class TestPredictMeasured:
    def test_complete_overlap_floor(self):
        geom = MeasuredGeometry((2, 2), (1.0, 1.0), {(0, 1): 2}, {(0, 1): 1.0}, m=4)
        assert predict_two_class_measured(geom, (0.5, 0.5)).regime == REGIME_FLOOR

    def test_partial_overlap_diversity(self):
        geom = MeasuredGeometry((2, 3), (1.0, 1.0), {(0, 1): 4}, {(0, 1): 1.0}, m=5)
        pred = predict_two_class_measured(geom, (0.5, 0.5))
        assert pred.regime == REGIME_POLYNOMIAL
        assert pred.diversity == pytest.approx(0.75)

    def test_impossible_geometry_rejected(self):
        geom = MeasuredGeometry((2, 2), (1.0, 1.0), {(0, 1): 2}, {(0, 1): 1.0}, m=4)
        object.__setattr__(geom, "pair_ranks", {(0, 1): 1})  # bypass constructor guard
        with pytest.raises(ValueError, match="not realizable"):
            predict_two_class_measured(geom, (0.5, 0.5))

    def test_gain_on_orthogonal_lines_matches_curve(self):
        # derived oracle: the actual bound curve of this instance is
        # asymptotically 1.0 * (sigma^2)^(1/2), so the gain must be 1
        model = orthogonal_lines_model()
        geom = measured_geometry(model, np.eye(2))
        pred = predict_two_class_measured(geom, model.priors)
        assert pred.diversity == pytest.approx(0.5)
        grid = sigma_grid(-6, -9, 10)
        curve = sweep_error_curve(model, 2, grid, trials=0, seed=0, phis=(np.eye(2),))
        fitted_gain = fit_measurement_gain(curve, pred.diversity, (1e-9, 1e-8))
        assert pred.measurement_gain == pytest.approx(1.0, rel=1e-3)
        assert fitted_gain == pytest.approx(pred.measurement_gain, rel=1e-3)


class TestPredictSource:
    @pytest.mark.parametrize(
        "m,regime,diversity",
        [
            (1, REGIME_FLOOR, None),
            (2, REGIME_FLOOR, None),
            (3, REGIME_POLYNOMIAL, 0.25),
            (4, REGIME_POLYNOMIAL, 0.75),
            (5, REGIME_POLYNOMIAL, 0.75),
            (6, REGIME_POLYNOMIAL, 0.75),
        ],
    )
    def test_fig1_case_ladder(self, m, regime, diversity):
        model = synthesize_class_pair(FIG1_SPEC, SEED)
        src = source_geometry(model)
        geom = measured_geometry(model, draw_measurement_matrix(m, 6, SEED + m))
        pred = predict_two_class_source(src, m, model.priors, geom)
        assert pred.regime == regime
        if diversity is not None:
            assert pred.diversity == pytest.approx(diversity)

    def test_identical_subspaces_floor_even_with_many_measurements(self):
        src = SourceGeometry((2, 2), {(0, 1): 2}, ambient_dim=6)
        geom = MeasuredGeometry((2, 2), (1.0, 1.0), {(0, 1): 2}, {(0, 1): 1.0}, m=6)
        assert predict_two_class_source(src, 6, (0.5, 0.5), geom).regime == REGIME_FLOOR

    def test_agrees_with_measured_path_on_random_draws(self):
        rng = np.random.default_rng(40)
        for _ in range(25):
            n = int(rng.integers(3, 7))
            r1 = int(rng.integers(1, n))
            r2 = int(rng.integers(1, n))
            r12 = int(rng.integers(max(r1, r2), min(n, r1 + r2) + 1))
            spec = RankSpec((r1, r2), {(0, 1): r12}, n)
            model = synthesize_class_pair(spec, int(rng.integers(1 << 30)))
            m = int(rng.integers(1, n + 1))
            phi = draw_measurement_matrix(m, n, int(rng.integers(1 << 30)))
            geom = measured_geometry(model, phi)
            src = source_geometry(model)
            from_measured = predict_two_class_measured(geom, model.priors)
            from_source = predict_two_class_source(src, m, model.priors, geom)
            assert from_measured.regime == from_source.regime
            if from_measured.regime == REGIME_POLYNOMIAL:
                assert from_measured.diversity == pytest.approx(from_source.diversity)
                assert from_measured.measurement_gain == pytest.approx(
                    from_source.measurement_gain
                )

    def test_diversity_monotone_in_m_then_flat(self):
        model = synthesize_class_pair(FIG1_SPEC, SEED)
        src = source_geometry(model)
        values = []
        for m in range(1, 7):
            geom = measured_geometry(model, draw_measurement_matrix(m, 6, SEED + m))
            pred = predict_two_class_source(src, m, model.priors, geom)
            values.append(0.0 if pred.regime == REGIME_FLOOR else pred.diversity)
        assert values == sorted(values)
        assert values[3] == values[4] == values[5]  # constant past the union rank


class TestPredictNonzeroMean:
    def test_fig2_high_m_exponential(self):
        model = synthesize_class_pair(FIG2_SPEC, SEED)
        setup = MeasurementSetup(draw_measurement_matrix(4, 6, SEED + 4), 1.0)
        pred = predict_nonzero_mean(model, setup, src=source_geometry(model))
        assert pred.regime == REGIME_EXPONENTIAL

    def test_fig2_low_m_floor_after_containment(self):
        model = synthesize_class_pair(FIG2_SPEC, SEED)
        setup = MeasurementSetup(draw_measurement_matrix(2, 6, SEED + 2), 1.0)
        pred = predict_nonzero_mean(model, setup, src=source_geometry(model))
        assert pred.regime == REGIME_FLOOR

    def test_full_rank_union_forces_polynomial_with_offset_note(self):
        spec = RankSpec((2, 3), {(0, 1): 4}, 4, mean_mode="distinct")
        model = synthesize_class_pair(spec, 9)
        setup = MeasurementSetup(draw_measurement_matrix(4, 4, 10), 1.0)
        pred = predict_nonzero_mean(model, setup)
        assert pred.regime == REGIME_POLYNOMIAL
        assert "a > 1" in pred.note

    def test_equal_means_rejected(self):
        model = synthesize_class_pair(FIG1_SPEC, SEED)
        setup = MeasurementSetup(draw_measurement_matrix(4, 6, 11), 1.0)
        with pytest.raises(ValueError, match="zero-mean"):
            predict_nonzero_mean(model, setup)


class TestPredictMulticlass:
    def test_fig3_pairwise_values_at_m6(self):
        model = synthesize_ensemble(FIG3_SPEC, SEED)
        setup = MeasurementSetup(draw_measurement_matrix(6, 6, SEED + 6), 1.0)
        pairs = pairwise_predictions(model, setup)
        expected = {
            (0, 1): 0.75, (0, 2): 1.25, (0, 3): 1.0,
            (1, 2): 0.5, (1, 3): 1.25, (2, 3): 0.75,
        }
        for pair, d in expected.items():
            assert pairs[pair].diversity == pytest.approx(d), pair

    @pytest.mark.parametrize("m", [4, 5, 6])
    def test_fig3_dominating_pair(self, m):
        model = synthesize_ensemble(FIG3_SPEC, SEED)
        setup = MeasurementSetup(draw_measurement_matrix(m, 6, SEED + m), 1.0)
        pred = predict_multiclass(model, setup)
        assert pred.regime == REGIME_POLYNOMIAL
        assert pred.dominating_pair == (1, 2)
        assert pred.diversity == pytest.approx(0.5)

    def test_two_identical_classes_floor(self):
        cls = GaussianClass(np.zeros(3), np.diag([1.0, 1.0, 0.0]), 0.25)
        other1 = GaussianClass(np.zeros(3), np.diag([1.0, 0.0, 0.0]), 0.25)
        other2 = GaussianClass(np.zeros(3), np.diag([0.0, 0.0, 1.0]), 0.25)
        model = GmmModel((cls, cls, other1, other2), 3)
        setup = MeasurementSetup(draw_measurement_matrix(3, 3, 12), 1.0)
        assert predict_multiclass(model, setup).regime == REGIME_FLOOR

    def test_two_class_reduction(self):
        model = synthesize_class_pair(FIG1_SPEC, SEED)
        setup = MeasurementSetup(draw_measurement_matrix(4, 6, SEED + 4), 1.0)
        multi = predict_multiclass(model, setup)
        direct = predict_two_class_measured(measured_geometry(model, setup.phi), model.priors)
        assert multi.regime == direct.regime
        assert multi.diversity == pytest.approx(direct.diversity)


class TestFits:
    def test_exact_power_law(self):
        grid = sigma_grid(-2, -6, 5)
        curve = curve_from_bounds(grid, (2.0 / grid) ** (-0.75))
        fit = fit_diversity(curve, (1e-6, 1e-2))
        assert fit.slope == pytest.approx(0.75, abs=1e-12)
        assert fit.stderr == pytest.approx(0.0, abs=1e-10)
        assert fit_measurement_gain(curve, 0.75, (1e-6, 1e-2)) == pytest.approx(2.0)

    def test_flat_curve_zero_slope(self):
        grid = sigma_grid(-2, -6, 5)
        curve = curve_from_bounds(grid, np.full(grid.size, 0.3))
        assert fit_diversity(curve, (1e-6, 1e-2)).slope == pytest.approx(0.0, abs=1e-12)

    def test_fig1_m4_window_fit(self):
        model = synthesize_class_pair(FIG1_SPEC, SEED)
        curve = sweep_error_curve(model, 4, sigma_grid(0, -6, 10), trials=0, seed=SEED)
        fit = fit_diversity(curve, (1e-6, 1e-4))
        assert fit.slope == pytest.approx(0.75, abs=0.05)

    def test_nonpositive_bound_rejected(self):
        grid = sigma_grid(-2, -4, 5)
        with pytest.raises(ValueError, match="positive"):
            curve_from_bounds(grid, np.zeros(grid.size))

    def test_too_few_points(self):
        grid = sigma_grid(-2, -4, 1)
        curve = curve_from_bounds(grid, grid**0.5)
        with pytest.raises(ValueError, match="at least 4"):
            fit_diversity(curve, (1e-3, 1e-2))

    def test_gain_requires_positive_diversity(self):
        grid = sigma_grid(-2, -4, 5)
        curve = curve_from_bounds(grid, grid**0.5)
        with pytest.raises(ValueError, match="positive diversity"):
            fit_measurement_gain(curve, 0.0)

    def test_default_window_is_two_lowest_decades(self):
        grid = sigma_grid(0, -6, 10)
        lo, hi = default_fit_window(grid)
        assert lo == pytest.approx(1e-6)
        assert hi == pytest.approx(1e-4)

    def test_gain_scaling_under_eigenvalue_doubling(self):
        # doubling every class eigenvalue rescales the fitted gain by the
        # exact factor the closed-form volume ratio predicts
        model = synthesize_class_pair(FIG1_SPEC, SEED)
        doubled = GmmModel(
            tuple(
                GaussianClass(c.mean, 2.0 * c.covariance, c.prior) for c in model.classes
            ),
            model.ambient_dim,
        )
        grid = sigma_grid(-4, -8, 10)
        window = (1e-8, 1e-6)
        curve = sweep_error_curve(model, 4, grid, trials=0, seed=SEED)
        curve2 = sweep_error_curve(doubled, 4, grid, trials=0, seed=SEED)  # same phi
        geom = measured_geometry(model, curve.phis[0])
        geom2 = measured_geometry(doubled, curve2.phis[0])
        pred = predict_two_class_measured(geom, model.priors)
        pred2 = predict_two_class_measured(geom2, doubled.priors)
        fitted_ratio = fit_measurement_gain(curve2, pred2.diversity, window) / \
            fit_measurement_gain(curve, pred.diversity, window)
        closed_ratio = pred2.measurement_gain / pred.measurement_gain
        assert fitted_ratio == pytest.approx(closed_ratio, rel=1e-3)

    def test_pair_gain_formula_unit_case(self):
        # volumes 1, pair rank 2, equal priors, diversity 1/2: the average
        # covariance volume is 1/4, so the offset constant is exactly 1
        assert pair_measurement_gain(0.5, 0.5, 1.0, 1.0, 1.0, 2, 0.5) == pytest.approx(1.0)
