"""
Tests for indirect chains, total effects and moderation verdicts.
"""
import numpy as np
import pytest
from scipy.stats import norm

from bootstrap import run_bootstrap
from conftest import make_spec, simulate
from effects import (enumerate_indirect, indirect_effect, indirect_report, moderation_report,
                     moderation_verdict, nested_models, total_effects)
from pls_engine import Parameter, PlsEstimate, fit

REPLICA_CHAINS = [("AE", "UE", "IMG", "ITI"), ("EN", "UE", "IMG", "ITI"), ("FA", "UE", "IMG", "ITI"),
                  ("FI", "UE", "IMG", "ITI"), ("NO", "UE", "IMG", "ITI"), ("PU", "UE", "IMG", "ITI"),
                  ("UE", "IMG", "ITI")]


def hand_estimate(paths):
    names = sorted({n for edge in paths for n in edge})
    return PlsEstimate(construct_names=names, indicators={}, outer_weights={}, outer_loadings={},
                       scores=np.zeros((2, len(names))), paths=dict(paths), r_squared_values={},
                       iterations_used=1)


class TestEnumerateIndirect:
    def test_replica_chains(self, replica_spec, expanded_replica):
        assert enumerate_indirect(replica_spec) == REPLICA_CHAINS
        assert enumerate_indirect(expanded_replica) == REPLICA_CHAINS

    def test_needs_two_substantive_edges(self):
        m = make_spec([{"name": n, "indicators": [n.lower()]} for n in "ABCD"],
                      paths=[{"source": "A", "target": "B"}, {"source": "B", "target": "C"},
                             {"source": "A", "target": "C"}, {"source": "D", "target": "C"}])
        assert enumerate_indirect(m) == [("A", "B", "C")]

    def test_controls_do_not_take_part(self):
        m = make_spec([{"name": "A", "indicators": ["a"]}, {"name": "B", "indicators": ["b"]},
                       {"name": "C", "indicators": ["c"]},
                       {"name": "K", "indicators": ["k"], "control": True}],
                      paths=[{"source": "K", "target": "A"}, {"source": "A", "target": "B"},
                             {"source": "B", "target": "C"}])
        assert enumerate_indirect(m) == [("A", "B", "C")]


    def test_single_edge_has_no_chain(self):
        m = make_spec([{"name": "A", "indicators": ["a"]}, {"name": "B", "indicators": ["b"]}],
                      paths=[{"source": "A", "target": "B"}])
        assert enumerate_indirect(m) == []

    def test_long_chain(self):
        m = make_spec([{"name": n, "indicators": [n.lower()]} for n in "ABCD"],
                      paths=[{"source": "A", "target": "B"}, {"source": "B", "target": "C"},
                             {"source": "C", "target": "D"}])
        assert enumerate_indirect(m) == [("A", "B", "C", "D")]
        e = hand_estimate({("A", "B"): 0.5, ("B", "C"): -0.4, ("C", "D"): 0.25})
        assert indirect_effect(("A", "B", "C", "D"), e).estimate == pytest.approx(-0.05)


class TestIndirectEffect:
    def test_product_of_paths(self):
        e = hand_estimate({("X", "M"): 0.916, ("M", "Y"): 0.117})
        effect = indirect_effect(("X", "M", "Y"), e)
        assert effect.estimate == pytest.approx(0.916 * 0.117)
        assert effect.label == "X -> M -> Y"
        assert np.isnan(effect.p)
        assert not effect.supported

    def test_zero_and_unit_paths(self):
        assert indirect_effect(("X", "M", "Y"), hand_estimate({("X", "M"): 0.0, ("M", "Y"): 0.8})).estimate == 0.0
        assert indirect_effect(("X", "M", "Y"), hand_estimate({("X", "M"): 1.0, ("M", "Y"): 1.0})).estimate == 1.0

    @pytest.mark.parametrize("alpha", [0.05, 1.0])
    def test_without_bootstrap_nothing_is_supported(self, alpha):
        e = hand_estimate({("X", "M"): 0.9, ("M", "Y"): 0.9})
        assert not indirect_effect(("X", "M", "Y"), e, None, alpha=alpha).supported

    def test_inference_uses_per_replication_products(self, three_construct_spec, three_construct_data):
        e = fit(three_construct_spec, three_construct_data)
        b = run_bootstrap(three_construct_spec, three_construct_data, reps=60, seed=4,
                          chains=[("A", "B", "C")])
        effect = indirect_effect(("A", "B", "C"), e, b)
        row = b.inference(Parameter("indirect", "A -> B -> C"))
        assert effect.estimate == pytest.approx(row["original_sample"])
        assert effect.std_error == pytest.approx(row["std_error"])
        assert effect.p == pytest.approx(row["p"])
        assert (effect.ci_lower, effect.ci_upper) == pytest.approx((row["ci_lower"], row["ci_upper"]))

    def test_report_follows_the_chains(self, three_construct_spec, three_construct_data):
        e = fit(three_construct_spec, three_construct_data)
        effects = indirect_report(three_construct_spec, e)
        assert [x.chain for x in effects] == [("A", "B", "C")]


class TestTotalEffects:
    def test_direct_plus_indirect(self):
        m = make_spec([{"name": n, "indicators": [n.lower()]} for n in "ABC"],
                      paths=[{"source": "A", "target": "B"}, {"source": "B", "target": "C"},
                             {"source": "A", "target": "C"}])
        e = hand_estimate({("A", "B"): 0.5, ("B", "C"): 0.3, ("A", "C"): 0.2})
        totals = total_effects(e, m)
        assert totals.at["A", "C"] == pytest.approx(0.2 + 0.5 * 0.3)
        assert totals.at["A", "B"] == pytest.approx(0.5)
        assert totals.at["C", "A"] == pytest.approx(0.0, abs=1e-12)


class TestModeration:
    def test_significant_negative_term(self):
        p = 2 * norm.sf(2.307)
        sign, supported, verdict = moderation_verdict(-0.095, p, alpha=0.05)
        assert (sign, supported) == ("negative", True)
        assert verdict == "negative, significant at 0.05"

    def test_not_significant(self):
        assert moderation_verdict(0.02, 0.4) == ("positive", False, "positive, not significant at 0.05")

    def test_without_inference(self):
        assert moderation_verdict(0.1, np.nan) == ("positive", False, "positive, not tested")

    def test_report_without_bootstrap(self, replica_spec, replica_params, expanded_replica):
        e = fit(expanded_replica, simulate(replica_spec, replica_params, seed=2021))
        report = moderation_report(e, None, expanded_replica)
        assert report["interaction"].tolist() == ["EC x UE", "EC x IMG"]
        assert (report["target"] == "ITI").all()
        assert report["verdict"].str.endswith("not tested").all()


class TestNestedModels:
    def test_replica_r_squared_per_model(self, replica_spec, replica_params, expanded_replica):
        d = simulate(replica_spec, replica_params, seed=2021)
        full = fit(expanded_replica, d)
        nested = nested_models(expanded_replica, d, full=full)
        assert [n.label for n in nested] == ["dependents", "intermediate", "comprehensive"]
        assert [set(n.r_squared) for n in nested] == [{"UE"}, {"IMG", "UE"}, {"IMG", "ITI", "UE"}]
        assert nested[-1].r_squared == pytest.approx(full.r_squared_values)
        assert nested[1].delta_r_squared["IMG"] is None
        assert nested[2].delta_r_squared["ITI"] is None
        gain = nested[2].r_squared["IMG"] - nested[1].r_squared["IMG"]
        assert nested[2].delta_r_squared["IMG"] == pytest.approx(gain)

    def test_comprehensive_model_is_refit_without_an_estimate(self, three_construct_spec, three_construct_data):
        nested = nested_models(three_construct_spec, three_construct_data)
        full = fit(three_construct_spec, three_construct_data)
        assert [n.label for n in nested] == ["dependents", "comprehensive"]
        assert nested[0].paths == ("A -> B",)
        assert nested[1].r_squared == pytest.approx(full.r_squared_values)
        # B is explained in both models by A alone
        assert nested[1].delta_r_squared["B"] == pytest.approx(0.0, abs=0.02)


@pytest.mark.slow
class TestModerationCalibration:
    def spec(self):
        return make_spec([{"name": "X", "indicators": ["x1", "x2", "x3"]},
                          {"name": "M", "indicators": ["m1", "m2", "m3"]},
                          {"name": "Y", "indicators": ["y1", "y2", "y3"]}],
                         paths=[{"source": "X", "target": "Y"}],
                         interactions=[{"moderator": "M", "focal": "X", "target": "Y"}])

    def params(self, coefficient):
        return {"n": 400, "default_loading": 0.85,
                "paths": [{"source": "X", "target": "Y", "coefficient": 0.4},
                          {"source": "M", "target": "Y", "coefficient": 0.2}],
                "interactions": [{"moderator": "M", "focal": "X", "target": "Y", "coefficient": coefficient}]}

    def test_real_interaction_is_detected(self):
        m = self.spec()
        detected = 0
        for seed in range(200):
            d = simulate(m, self.params(0.4), seed=seed)
            b = run_bootstrap(m, d, reps=200, seed=seed, threads=4)
            report = moderation_report(fit(m, d), b, m)
            detected += report.at[0, "sign"] == "positive" and bool(report.at[0, "supported"])
        assert detected >= 190

    def test_null_interaction_is_rarely_supported(self):
        m = self.spec()
        supported = 0
        for seed in range(200):
            d = simulate(m, self.params(0.0), seed=seed)
            b = run_bootstrap(m, d, reps=200, seed=seed, threads=4)
            supported += bool(moderation_report(fit(m, d), b, m).at[0, "supported"])
        assert supported <= 20
