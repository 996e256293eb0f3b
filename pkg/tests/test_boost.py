import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boostwood.boost import (BoostConfig, SingularCovarianceError,
                             count_variants, enumerate_patterns, fit_boosted,
                             is_restricted_growth, predict_boosted,
                             stop_test, zero_mean_chi_square)
from boostwood.data import Dataset
from boostwood.forest import (BOOTSTRAP, ForestConfig, fit_forest,
                              predict_forest, predict_oob)
from boostwood.tree import TreeConfig


def _data(seed=0, n=200, d=4, noise=0.0, signal=lambda X: X[:, 0]):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, d))
    y = signal(X) + (noise * rng.normal(size=n) if noise else 0.0)
    return Dataset(X, y)


def _config(n, steps=1, pattern=None, residual_mode="oob", n_trees=100,
            k=None, seed=0, tree=None):
    return BoostConfig(
        forest=ForestConfig(n_trees=n_trees,
                            subsample_size=k or max(2, n // 4),
                            tree=tree or TreeConfig(min_leaf=2), seed=seed),
        steps=steps, pattern=pattern, residual_mode=residual_mode)


class TestFitBoosted:
    def test_zero_steps_is_a_plain_forest(self):
        ds = _data(noise=0.3)
        cfg = _config(ds.n, steps=0)
        model = fit_boosted(ds, cfg)
        stage = fit_forest(ds, cfg.forest)
        x = np.array([0.1, 0.2, 0.3, 0.4])
        assert predict_boosted(model, x) == predict_forest(stage, x)

    def test_variant1_shares_inclusion_matrices(self):
        ds = _data(noise=0.3)
        model = fit_boosted(ds, _config(ds.n, pattern=(0, 0)))
        assert np.array_equal(model.stages[0].inclusion,
                              model.stages[1].inclusion)

    def test_variant2_draws_fresh_samples(self):
        ds = _data(noise=0.3)
        model = fit_boosted(ds, _config(ds.n, pattern=(0, 1)))
        assert not np.array_equal(model.stages[0].inclusion,
                                  model.stages[1].inclusion)

    def test_stage0_bitwise_identical_across_variants(self):
        ds = _data(noise=0.3)
        m1 = fit_boosted(ds, _config(ds.n, pattern=(0, 0), seed=5))
        m2 = fit_boosted(ds, _config(ds.n, pattern=(0, 1), seed=5))
        assert np.array_equal(m1.stages[0].value, m2.stages[0].value)
        assert np.array_equal(m1.stages[0].inclusion,
                              m2.stages[0].inclusion)

    def test_boosting_reduces_test_mse_on_clean_signal(self):
        # noiseless y = x0: the residual stage must recover part of what the
        # base forest's bias left behind
        ds = _data(seed=3, n=200, noise=0.0)
        test = _data(seed=4, n=300, noise=0.0)
        cfg2 = _config(ds.n, pattern=(0, 1), n_trees=300, k=50, seed=1)
        cfg0 = _config(ds.n, steps=0, n_trees=300, k=50, seed=1)
        boosted = fit_boosted(ds, cfg2)
        base = fit_boosted(ds, cfg0)
        mse_b = np.mean((predict_boosted(boosted, test.features)
                         - test.response) ** 2)
        mse_0 = np.mean((predict_boosted(base, test.features)
                         - test.response) ** 2)
        assert mse_b <= mse_0

    def test_residuals_replayed(self):
        # stage 1's training response must equal y minus stage 0's
        # residual-mode predictions: verify by refitting stage 1 from parts
        from boostwood._rng import TAG_GROW, TAG_SAMPLE, mix_key
        from boostwood.forest import draw_indices, fit_forest_from_indices
        ds = _data(seed=6, n=80, noise=0.5)
        for mode, predict_train in (
                ("oob", lambda s: predict_oob(s, ds).values),
                ("inbag", lambda s: predict_forest(s, ds.features))):
            cfg = _config(ds.n, pattern=(0, 1), residual_mode=mode, seed=8)
            model = fit_boosted(ds, cfg)
            e = ds.response - predict_train(model.stages[0])
            idx1 = draw_indices(ds.n, cfg.stage_config(1),
                                sample_key=mix_key(cfg.seed, TAG_SAMPLE, 1))
            rebuilt = fit_forest_from_indices(
                ds.with_response(e), idx1, cfg.stage_config(1),
                grow_key=mix_key(cfg.seed, TAG_GROW, 1))
            assert np.array_equal(rebuilt.value, model.stages[1].value)
            assert np.array_equal(rebuilt.inclusion,
                                  model.stages[1].inclusion)

    def test_bootstrap_mode_forces_bootstrap_resampling(self):
        ds = _data(n=50, noise=0.2)
        model = fit_boosted(ds, _config(ds.n, residual_mode="bootstrap"))
        for stage in model.stages:
            assert stage.config.resampling == BOOTSTRAP
            assert np.all(stage.inclusion.sum(axis=0) == ds.n)

    def test_constant_response_predicts_constant(self):
        # zero-noise zero-signal data: all residuals vanish under inbag mode
        rng = np.random.default_rng(12)
        ds = Dataset(rng.uniform(-1, 1, (60, 3)), np.full(60, 3.25))
        model = fit_boosted(ds, _config(60, pattern=(0, 1),
                                        residual_mode="inbag"))
        queries = rng.uniform(-1, 1, (50, 3))
        assert np.all(np.abs(predict_boosted(model, queries) - 3.25) < 1e-10)

    def test_shared_label_requires_matching_samples(self):
        ds = _data(n=40)
        fc = ForestConfig(n_trees=10, subsample_size=10, seed=0)
        other = ForestConfig(n_trees=10, subsample_size=12, seed=0)
        cfg = BoostConfig(forest=fc, steps=1, pattern=(0, 0),
                          stage_forests=(fc, other))
        with pytest.raises(ValueError, match="sharing label"):
            fit_boosted(ds, cfg)

    def test_pattern_validation(self):
        ds = _data(n=40)
        with pytest.raises(ValueError, match="restricted-growth"):
            fit_boosted(ds, _config(ds.n, steps=1, pattern=(0, 2)))
        with pytest.raises(ValueError, match="restricted-growth"):
            fit_boosted(ds, _config(ds.n, steps=1, pattern=(1, 0)))
        with pytest.raises(ValueError, match="length"):
            fit_boosted(ds, _config(ds.n, steps=2, pattern=(0, 1)))

    def test_per_stage_tree_overrides(self):
        ds = _data(n=60, noise=0.3)
        shallow = ForestConfig(n_trees=20, subsample_size=15,
                               tree=TreeConfig(max_depth=1, min_leaf=1))
        deep = ForestConfig(n_trees=20, subsample_size=15,
                            tree=TreeConfig(min_leaf=1))
        cfg = BoostConfig(forest=shallow, steps=1, pattern=(0, 1),
                          stage_forests=(shallow, deep))
        model = fit_boosted(ds, cfg)
        # stage 0 is depth-capped; stage 1 grows deeper
        depth0 = model.stages[0].n_nodes.max()
        depth1 = model.stages[1].n_nodes.max()
        assert depth0 <= 3 < depth1


class TestPredictBoosted:
    def test_sum_of_stage_predictions(self):
        ds = _data(noise=0.4)
        model = fit_boosted(ds, _config(ds.n, pattern=(0, 1)))
        x = np.array([0.3, -0.3, 0.0, 0.5])
        assert predict_boosted(model, x) == \
            predict_forest(model.stages[0], x) + \
            predict_forest(model.stages[1], x)

    def test_zero_residual_second_stage_adds_nothing(self):
        rng = np.random.default_rng(2)
        ds = Dataset(rng.uniform(-1, 1, (50, 2)), np.full(50, -1.5))
        model = fit_boosted(ds, _config(50, pattern=(0, 1),
                                        residual_mode="inbag"))
        x = np.array([0.0, 0.0])
        assert predict_boosted(model, x) == \
            predict_forest(model.stages[0], x)

    def test_dimension_mismatch(self):
        ds = _data()
        model = fit_boosted(ds, _config(ds.n, steps=0))
        with pytest.raises(ValueError, match="features"):
            predict_boosted(model, [1.0, 2.0])


class TestVariantCounting:
    def test_known_counts(self):
        assert count_variants(0) == 1
        assert count_variants(1) == 2
        assert count_variants(2) == 5

    def test_matches_enumeration_up_to_six(self):
        for m in range(7):
            assert len(enumerate_patterns(m)) == count_variants(m)

    def test_enumeration_examples(self):
        assert enumerate_patterns(0) == [(0,)]
        assert enumerate_patterns(1) == [(0, 0), (0, 1)]
        assert enumerate_patterns(2) == [(0, 0, 0), (0, 0, 1), (0, 1, 0),
                                         (0, 1, 1), (0, 1, 2)]

    def test_patterns_are_canonical_and_distinct(self):
        for m in range(6):
            pats = enumerate_patterns(m)
            assert len(set(pats)) == len(pats)
            assert all(is_restricted_growth(p) for p in pats)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            count_variants(-1)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=1, max_size=7))
def test_restricted_growth_checker(labels):
    ok = labels[0] == 0 and all(
        labels[i] <= max(labels[:i]) + 1 for i in range(1, len(labels)))
    assert is_restricted_growth(labels) == ok


class TestStopTest:
    def test_zero_predictions_do_not_continue(self):
        # constant response, inbag mode: the candidate extra stage is fit on
        # exactly-zero residuals and predicts zero everywhere
        rng = np.random.default_rng(20)
        ds = Dataset(rng.uniform(-1, 1, (60, 2)), np.full(60, 2.0))
        model = fit_boosted(ds, _config(60, steps=0,
                                        residual_mode="inbag"))
        zero_resid = ds.with_response(np.zeros(60))
        extra = fit_forest(zero_resid, _config(60, steps=0).forest)
        res = stop_test(model, extra, rng.uniform(-1, 1, (3, 2)))
        assert res.statistic == 0.0
        assert not res.continue_boosting

    def test_chi_square_core_single_point(self):
        # prediction of twice the standard deviation: statistic 4, which
        # exceeds the 95% chi-square(1) quantile 3.841
        sigma2 = 0.73
        res = zero_mean_chi_square([2.0 * np.sqrt(sigma2)], [[sigma2]],
                                   level=0.05)
        assert res.statistic == pytest.approx(4.0, rel=1e-12)
        assert res.threshold == pytest.approx(3.841458820694124, rel=1e-12)
        assert res.continue_boosting

    def test_strong_leftover_signal_continues(self):
        # a deliberately shallow base forest on y = sum(x): the candidate
        # stage finds plenty of structure
        rng = np.random.default_rng(30)
        X = rng.uniform(-1, 1, (300, 3))
        ds = Dataset(X, X.sum(axis=1))
        stump = TreeConfig(max_depth=1, min_leaf=1)
        base_cfg = _config(300, steps=0, n_trees=400, k=75, tree=stump)
        model = fit_boosted(ds, base_cfg)
        resid = ds.response - predict_oob(model.stages[0], ds).values
        extra = fit_forest(ds.with_response(resid),
                           ForestConfig(n_trees=400, subsample_size=75,
                                        tree=TreeConfig(min_leaf=2), seed=9))
        pts = np.array([[0.8, 0.8, 0.8], [-0.8, -0.8, -0.8],
                        [0.8, -0.8, 0.0]])
        res = stop_test(model, extra, pts, level=0.05)
        assert res.continue_boosting

    def test_singular_covariance_reported(self):
        ds = _data(n=60, noise=0.3)
        model = fit_boosted(ds, _config(60, steps=0))
        extra = fit_forest(ds, _config(60, steps=0, seed=3).forest)
        dup = np.tile(ds.features[0], (2, 1))
        with pytest.raises(SingularCovarianceError):
            stop_test(model, extra, dup)

    def test_dimension_checks(self):
        ds = _data(n=40)
        model = fit_boosted(ds, _config(40, steps=0))
        extra = fit_forest(ds, _config(40, steps=0).forest)
        with pytest.raises(ValueError, match="features"):
            stop_test(model, extra, np.zeros((2, 3)))


class TestResidualTracking:
    def test_mse_sequence_monotone_on_strong_signal(self):
        ds = _data(seed=40, n=150, noise=0.1)
        model = fit_boosted(ds, _config(150, pattern=(0, 1), n_trees=200,
                                        k=40))
        assert len(model.stage_residual_mse) == 2
        assert model.residual_noise_mse == model.stage_residual_mse[0]

    def test_untracked(self):
        ds = _data(n=50)
        model = fit_boosted(ds, _config(50, steps=0),
                            track_residuals=False)
        assert model.stage_residual_mse is None
        with pytest.raises(ValueError, match="tracking"):
            model.residual_noise_mse
