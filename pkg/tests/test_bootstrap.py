"""
Tests for bootstrap inference: bias-corrected intervals, t and p values,
seeding and failed replications.
"""
import numpy as np
import pytest
from scipy.stats import norm

import bootstrap
from bootstrap import bc_interval, infer, run_bootstrap, t_and_p
from conftest import make_spec, simulate
from pls_engine import Parameter
from utils import NumericalError


class TestBcInterval:
    def test_centred_estimate_is_the_percentile_interval(self):
        lo, hi = bc_interval(np.arange(1.0, 101.0), 50.5, level=0.95)
        assert lo == pytest.approx(3.475)
        assert hi == pytest.approx(97.525)

    def test_ties_count_half(self):
        resamples = np.array([1.0, 2.0, 2.0, 3.0])
        lo, hi = bc_interval(resamples, 2.0, level=0.5)
        expected = np.quantile(resamples, [0.25, 0.75])
        assert (lo, hi) == pytest.approx(tuple(expected))

    def test_bias_shifts_the_interval(self):
        resamples = np.arange(1.0, 101.0)
        below = 0.3
        z0 = norm.ppf(below)
        lo, hi = bc_interval(resamples, 30.5, level=0.9)
        expected = np.quantile(resamples, [norm.cdf(2 * z0 - 1.6448536), norm.cdf(2 * z0 + 1.6448536)])
        np.testing.assert_allclose([lo, hi], expected, rtol=1e-6)
        assert hi < 90.0

    def test_constant_resamples(self):
        assert bc_interval(np.full(20, 0.3), 0.3) == (0.3, 0.3)
        assert bc_interval(np.full(20, 0.3), 0.7) == (0.3, 0.3)

    def test_all_resamples_on_one_side(self):
        with pytest.raises(NumericalError, match="one side"):
            bc_interval(np.array([1.0, 2.0, 3.0]), 0.5)

    def test_bad_level(self):
        with pytest.raises(ValueError):
            bc_interval(np.array([1.0, 2.0]), 1.5, level=1.0)


    def test_unbiased_grid(self):
        grid = np.arange(1, 1001) / 1000
        lo, hi = bc_interval(grid, 0.5005, level=0.95)
        assert (lo, hi) == pytest.approx(tuple(np.quantile(grid, [0.025, 0.975])))
        assert (lo, hi) == pytest.approx((0.025, 0.975), abs=1e-3)

    def test_wider_level_contains_narrower(self, rng):
        resamples = rng.normal(0.3, 0.1, size=500)
        for estimate in (0.25, 0.3, 0.38):
            narrow = bc_interval(resamples, estimate, level=0.9)
            wide = bc_interval(resamples, estimate, level=0.99)
            assert wide[0] <= narrow[0] <= narrow[1] <= wide[1]


class TestTAndP:
    def test_known_values(self):
        resamples = np.array([-1.0, 1.0])
        t, p = t_and_p(resamples, 1.96 * np.sqrt(2.0))
        assert t == pytest.approx(1.96)
        assert p == pytest.approx(2 * norm.sf(1.96))
        assert p == pytest.approx(0.05, abs=1e-4)

    def test_sign_is_kept(self):
        t, p = t_and_p(np.array([-1.0, 1.0]), -np.sqrt(2.0))
        assert t == pytest.approx(-1.0)
        assert p == pytest.approx(0.3173105, abs=1e-6)

    def test_zero_standard_error(self):
        t, p = t_and_p(np.full(5, 0.2), 0.2)
        assert np.isnan(t)
        assert p == 0.0


    def test_zero_estimate(self):
        assert t_and_p(np.array([-1.0, 0.5, 1.0]), 0.0) == (0.0, 1.0)

    def test_reported_path(self):
        resamples = np.array([-1.0, 1.0]) * 0.107 / 2.669 / np.sqrt(2.0)
        t, p = t_and_p(resamples, 0.107)
        assert t == pytest.approx(2.669)
        assert round(p, 3) == 0.008
        assert p == pytest.approx(0.0076, abs=1e-4)

    def test_p_falls_as_t_grows(self):
        resamples = np.array([-1.0, 1.0]) / np.sqrt(2.0)
        ps = [t_and_p(resamples, t)[1] for t in np.linspace(0.0, 5.0, 51)]
        assert all(a > b for a, b in zip(ps, ps[1:]))


class TestInfer:
    def test_row(self):
        row = infer(np.arange(1.0, 101.0), 50.0)
        assert row["sample_mean"] == pytest.approx(50.5)
        assert row["bias"] == pytest.approx(0.5)
        assert row["std_error"] == pytest.approx(np.arange(1.0, 101.0).std(ddof=1))
        assert row["flag"] == ""

    def test_flags(self):
        assert infer(np.full(10, 1.0), 1.0)["flag"] == "zero standard error"
        row = infer(np.array([1.0, 2.0, 3.0]), 0.0)
        assert row["flag"] == "interval undefined"
        assert np.isnan(row["ci_lower"]) and np.isnan(row["ci_upper"])


class TestRunBootstrap:
    def test_summary_covers_every_parameter(self, three_construct_spec, three_construct_data):
        b = run_bootstrap(three_construct_spec, three_construct_data, reps=40, seed=1,
                          chains=[("A", "B", "C")])
        assert b.successful_reps == 40
        assert b.failed_reps == 0
        assert len(b.summary) == len(b.parameters) == 9 + 9 + 2 + 1
        path = b.inference(Parameter("path", "A -> B"))
        assert path["original_sample"] == pytest.approx(b.estimates[b.parameters.index(Parameter("path", "A -> B"))])
        assert 0 < path["std_error"] < 0.2
        assert path["ci_lower"] < path["original_sample"] < path["ci_upper"]

    def test_indirect_column_is_the_product_of_paths(self, three_construct_spec, three_construct_data):
        b = run_bootstrap(three_construct_spec, three_construct_data, reps=30, seed=2,
                          chains=[("A", "B", "C")])
        product = (b.resample_vector(Parameter("path", "A -> B"))
                   * b.resample_vector(Parameter("path", "B -> C")))
        np.testing.assert_allclose(b.resample_vector(Parameter("indirect", "A -> B -> C")), product)

    def test_unknown_parameter(self, three_construct_spec, three_construct_data):
        b = run_bootstrap(three_construct_spec, three_construct_data, reps=5, seed=2)
        with pytest.raises(KeyError):
            b.resample_vector(Parameter("path", "C -> A"))

    def test_thread_count_does_not_change_the_draws(self, three_construct_spec, three_construct_data):
        one = run_bootstrap(three_construct_spec, three_construct_data, reps=24, seed=2021, threads=1)
        four = run_bootstrap(three_construct_spec, three_construct_data, reps=24, seed=2021, threads=4)
        np.testing.assert_array_equal(one.resamples, four.resamples)

    def test_seed_changes_the_draws(self, three_construct_spec, three_construct_data):
        a = run_bootstrap(three_construct_spec, three_construct_data, reps=10, seed=1)
        b = run_bootstrap(three_construct_spec, three_construct_data, reps=10, seed=2)
        assert not np.array_equal(a.resamples, b.resamples)

    def test_too_few_reps(self, three_construct_spec, three_construct_data):
        with pytest.raises(NumericalError, match="at least 2 replications"):
            run_bootstrap(three_construct_spec, three_construct_data, reps=1, seed=1)


def failing_fit(every):
    """
    fit that fails on every n-th call after the full-sample fit
    """
    calls = {"n": 0}
    real = bootstrap.fit

    def fit(m, d):
        calls["n"] += 1
        if calls["n"] > 1 and calls["n"] % every == 0:
            raise NumericalError("singular resample")
        return real(m, d)
    return fit


class TestFailedReplications:
    def test_few_failures_are_excluded(self, monkeypatch, caplog, three_construct_spec, three_construct_data):
        monkeypatch.setattr(bootstrap, "fit", failing_fit(every=20))
        b = run_bootstrap(three_construct_spec, three_construct_data, reps=40, seed=3)
        assert b.failed_reps == 2
        assert b.successful_reps == 38
        assert "2 of 40 bootstrap replications failed" in caplog.text

    def test_many_failures_abort(self, monkeypatch, three_construct_spec, three_construct_data):
        monkeypatch.setattr(bootstrap, "fit", failing_fit(every=3))
        with pytest.raises(NumericalError, match="unstable model"):
            run_bootstrap(three_construct_spec, three_construct_data, reps=30, seed=3)


@pytest.mark.slow
class TestCoverage:
    def test_bc_interval_covers_the_correlation(self):
        m = make_spec([{"name": "A", "indicators": ["a"]}, {"name": "B", "indicators": ["b"]}],
                      paths=[{"source": "A", "target": "B"}])
        params = {"n": 300, "default_loading": 1.0,
                  "paths": [{"source": "A", "target": "B", "coefficient": 0.5}]}
        covered = 0
        trials = 200
        for seed in range(trials):
            b = run_bootstrap(m, simulate(m, params, seed), reps=500, seed=seed)
            row = b.inference(Parameter("path", "A -> B"))
            covered += row["ci_lower"] <= 0.5 <= row["ci_upper"]
        assert 0.90 <= covered / trials <= 0.98
