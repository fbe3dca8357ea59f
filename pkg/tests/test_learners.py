"""Learner contracts: play/observe alternation, predictor closed forms,
declared variation-bound constants, certificates, stability, bit-identities."""

import math

import numpy as np
import pytest

import oracles as orc
from regretlab import (
    LearnerSpec,
    OmdLearner,
    certify_prox_inequality,
    certify_stability,
    certify_variation_bound,
    declared_variation_bound,
    make_learner,
    splitmix64_floats,
    variation_sums,
)


def drive(learner, stream):
    plays, seen = [], []
    for u in stream:
        plays.append(learner.play())
        learner.observe(u)
        seen.append(np.asarray(u, dtype=float))
    return np.array(plays), np.array(seen)


def random_stream(d, T, seed):
    vals = splitmix64_floats(seed, d * T)
    return [np.array(vals[t * d : (t + 1) * d]) for t in range(T)]


def alternating_stream(d, T):
    a = np.zeros(d)
    a[0] = 1.0
    b = np.zeros(d)
    b[min(1, d - 1)] = 1.0
    return [a if t % 2 == 0 else b for t in range(T)]


SPECS = {
    "hedge": LearnerSpec("hedge", 0.2),
    "optimistic_hedge": LearnerSpec("optimistic_hedge", 0.2),
    "oftrl_window": LearnerSpec("oftrl", 0.2, "entropy", "window", 3),
    "oftrl_geometric": LearnerSpec("oftrl", 0.2, "entropy", "geometric", 0.5),
    "omd_last": LearnerSpec("omd", 0.2, "entropy", "last"),
    "oftrl_euclid": LearnerSpec("oftrl", 0.2, "euclidean", "last"),
}


class TestPlayObserveContract:
    def test_first_play_uniform(self):
        for spec in SPECS.values():
            learner = make_learner(spec, 3)
            np.testing.assert_allclose(learner.play(), [1 / 3] * 3, atol=1e-15)

    def test_play_twice_rejected(self):
        learner = make_learner(SPECS["hedge"], 2)
        learner.play()
        with pytest.raises(RuntimeError, match="twice"):
            learner.play()

    def test_observe_before_play_rejected(self):
        learner = make_learner(SPECS["hedge"], 2)
        with pytest.raises(RuntimeError, match="before play"):
            learner.observe(np.array([0.5, 0.5]))

    def test_dimension_mismatch(self):
        learner = make_learner(SPECS["hedge"], 2)
        learner.play()
        with pytest.raises(ValueError, match="shape"):
            learner.observe(np.array([0.5, 0.5, 0.5]))

    def test_plays_on_simplex(self):
        for name, spec in SPECS.items():
            learner = make_learner(spec, 4)
            plays, _ = drive(learner, random_stream(4, 50, seed=hash(name) % 1000))
            assert np.all(np.abs(plays.sum(axis=1) - 1.0) <= 1e-9), name
            assert plays.min() >= -1e-15, name

    def test_invalid_hyperparameters(self):
        with pytest.raises(ValueError):
            make_learner(LearnerSpec("hedge", -0.1), 2)
        with pytest.raises(ValueError):
            make_learner(LearnerSpec("oftrl", 0.1, "entropy", "window", 0), 2)
        with pytest.raises(ValueError):
            make_learner(LearnerSpec("oftrl", 0.1, "entropy", "geometric", 1.0), 2)
        with pytest.raises(ValueError):
            make_learner(LearnerSpec("bestresponse"), 2)  # no oracle wired
        with pytest.raises(ValueError):
            make_learner(LearnerSpec("omd", None, "entropy", "last"), 2)


class TestClosedForms:
    def test_optimistic_hedge_round_three(self):
        # cumulative (1,0)+(0,1) plus the doubled last utility (0,1) gives
        # effective scores (1,2); at eta = ln 2 the softmax is (1/3, 2/3)
        learner = make_learner(LearnerSpec("optimistic_hedge", math.log(2.0)), 2)
        learner.play()
        learner.observe(np.array([1.0, 0.0]))
        learner.play()
        learner.observe(np.array([0.0, 1.0]))
        np.testing.assert_allclose(learner.play(), [1 / 3, 2 / 3], atol=1e-15)

    def test_geometric_predictor_formula(self):
        # delta = 0.5, u^0 = 0, u^1 = (1,0):
        # M^2 = (0 + 2*(1,0)) / (1 + 2) = (2/3, 0)
        learner = make_learner(LearnerSpec("oftrl", 0.3, "entropy", "geometric", 0.5), 2)
        learner.play()
        learner.observe(np.array([1.0, 0.0]))
        np.testing.assert_allclose(learner.predictor.predict(2), [2 / 3, 0.0], atol=1e-15)

    def test_window_zero_pads(self):
        # H = 2 after one observation: (u^1 + 0)/2
        learner = make_learner(LearnerSpec("oftrl", 0.3, "entropy", "window", 2), 2)
        learner.play()
        learner.observe(np.array([1.0, 0.0]))
        np.testing.assert_allclose(learner.predictor.predict(2), [0.5, 0.0], atol=1e-15)

    def test_omd_secondary_update(self):
        # g^1 = prox(g^0, u^1): uniform times exp(eta*u) at eta = ln 2
        learner = make_learner(SPECS["omd_last"], 2)
        learner.eta = math.log(2.0)
        learner.play()
        learner.observe(np.array([1.0, 0.0]))
        np.testing.assert_allclose(learner.g, [2 / 3, 1 / 3], atol=1e-14)

    def test_hedge_is_ftrl_zero_predictor_bitwise(self):
        a = make_learner(LearnerSpec("hedge", 0.37), 3)
        b = make_learner(LearnerSpec("oftrl", 0.37, "entropy", "none"), 3)
        stream = random_stream(3, 200, seed=51)
        pa, _ = drive(a, stream)
        pb, _ = drive(b, stream)
        assert np.array_equal(pa, pb)

    def test_window_one_is_last_bitwise(self):
        a = make_learner(LearnerSpec("oftrl", 0.37, "entropy", "window", 1), 3)
        b = make_learner(LearnerSpec("oftrl", 0.37, "entropy", "last"), 3)
        stream = random_stream(3, 200, seed=52)
        pa, _ = drive(a, stream)
        pb, _ = drive(b, stream)
        assert np.array_equal(pa, pb)


class TestDeclaredConstants:
    def test_ftrl_last(self):
        b = declared_variation_bound(LearnerSpec("oftrl", 0.5, "entropy", "last"), 2)
        assert (b.alpha, b.beta, b.gamma) == pytest.approx(
            (math.log(2.0) / 0.5, 0.5, 0.5), abs=1e-12
        )
        assert b.norm_pair == "l1_linf"

    def test_omd_last(self):
        b = declared_variation_bound(LearnerSpec("omd", 0.5, "entropy", "last"), 2)
        assert b.gamma == pytest.approx(1.0 / (8.0 * 0.5), abs=1e-15)

    def test_window(self):
        b = declared_variation_bound(LearnerSpec("oftrl", 0.1, "entropy", "window", 3), 2)
        assert b.beta == pytest.approx(0.9, abs=1e-12)
        assert b.gamma == pytest.approx(2.5, abs=1e-12)

    def test_geometric(self):
        b = declared_variation_bound(LearnerSpec("oftrl", 0.1, "entropy", "geometric", 0.5), 2)
        assert b.beta == pytest.approx(0.1 / 0.125, abs=1e-12)
        assert b.gamma == pytest.approx(1.0 / 0.8, abs=1e-12)

    def test_euclidean_norm_pair(self):
        b = declared_variation_bound(LearnerSpec("oftrl", 0.1, "euclidean", "last"), 4)
        assert b.norm_pair == "l2_l2"
        assert b.alpha == pytest.approx((1.0 - 0.25) / 2.0 / 0.1, abs=1e-12)

    def test_plain_learners_carry_none(self):
        assert declared_variation_bound(LearnerSpec("hedge", 0.1), 2) is None
        assert declared_variation_bound(LearnerSpec("omd", 0.1, "entropy", "none"), 2) is None


class TestInstrumentation:
    def test_first_round_du(self):
        learner = make_learner(SPECS["hedge"], 2)
        learner.play()
        learner.observe(np.array([1.0, 0.0]))
        assert learner.sum_du2 == pytest.approx(1.0, abs=0)  # u^0 = 0 convention
        assert learner.sum_dw2 == pytest.approx(0.0, abs=0)  # w^0 = w^1 convention

    def test_matches_loop_oracle(self):
        for name, spec in SPECS.items():
            learner = make_learner(spec, 3)
            plays, seen = drive(learner, random_stream(3, 80, seed=61))
            du, dw = orc.independent_variation_sums(seen.tolist(), plays.tolist())
            assert learner.sum_du2 == pytest.approx(du, abs=1e-10), name
            assert learner.sum_dw2 == pytest.approx(dw, abs=1e-10), name
            lib_du, lib_dw = variation_sums(seen, plays)
            assert lib_du == pytest.approx(du, abs=1e-10), name
            assert lib_dw == pytest.approx(dw, abs=1e-10), name


class TestVariationBoundCertificate:
    def certify(self, spec, stream, d):
        learner = make_learner(spec, d)
        plays, seen = drive(learner, stream)
        bound = learner.declared_bound
        assert bound is not None
        return certify_variation_bound(seen, plays, bound)

    def test_constant_stream(self):
        spec = LearnerSpec("oftrl", 0.1, "entropy", "last")
        stream = [np.array([1.0, 0.0])] * 50
        cert = self.certify(spec, stream, 2)
        assert cert.passed
        # after round 1 nothing varies: RHS collapses to about alpha + beta
        assert cert.rhs <= cert.details["alpha"] + cert.details["beta"] + 1e-9

    def test_empty_stream(self):
        bound = declared_variation_bound(LearnerSpec("oftrl", 0.1, "entropy", "last"), 2)
        cert = certify_variation_bound(np.zeros((0, 2)), np.zeros((0, 2)), bound)
        assert cert.passed and cert.lhs == 0.0

    def test_alternating_extremes_all_variants(self):
        for name, spec in SPECS.items():
            if declared_variation_bound(spec, 3) is None:
                continue
            cert = self.certify(spec, alternating_stream(3, 1000), 3)
            assert cert.passed, (name, cert.lhs, cert.rhs)

    def test_random_streams_all_variants(self):
        for name, spec in SPECS.items():
            if declared_variation_bound(spec, 3) is None:
                continue
            for seed in range(5):
                cert = self.certify(spec, random_stream(3, 120, seed=700 + seed), 3)
                assert cert.passed, (name, seed, cert.lhs, cert.rhs)

    def test_random_comparators(self):
        spec = LearnerSpec("oftrl", 0.2, "entropy", "last")
        learner = make_learner(spec, 3)
        plays, seen = drive(learner, random_stream(3, 100, seed=71))
        for k in range(5):
            x = np.array(splitmix64_floats(800 + k, 3)) + 1e-9
            cert = certify_variation_bound(seen, plays, learner.declared_bound, comparator=x / x.sum())
            assert cert.passed

    def test_shape_mismatch(self):
        bound = declared_variation_bound(LearnerSpec("oftrl", 0.1, "entropy", "last"), 2)
        with pytest.raises(ValueError):
            certify_variation_bound(np.zeros((3, 2)), np.zeros((4, 2)), bound)


class TestStability:
    def test_bounded_steps(self):
        for eta in (0.05, 0.1, 0.5):
            learner = make_learner(LearnerSpec("oftrl", eta, "entropy", "last"), 3)
            plays, _ = drive(learner, random_stream(3, 300, seed=81))
            cert = certify_stability(plays, eta)
            assert cert.passed, (eta, cert.lhs, cert.rhs)

    def test_constant_utilities_tiny_steps(self):
        learner = make_learner(LearnerSpec("oftrl", 0.1, "entropy", "last"), 2)
        plays, _ = drive(learner, [np.array([1.0, 0.0])] * 40)
        cert = certify_stability(plays, 0.1)
        assert cert.passed
        assert cert.lhs <= 0.2

    def test_informational_on_huge_eta(self):
        learner = make_learner(LearnerSpec("hedge", 10.0), 2)
        plays, _ = drive(learner, alternating_stream(2, 20))
        cert = certify_stability(plays, 10.0)
        assert cert.passed  # 2*eta = 20 dominates the l1 diameter 2
        assert cert.lhs <= 2.0 + 1e-12
        assert "argmax_round" in cert.details


class TestProxInequality:
    def test_holds_on_random_streams(self):
        learner = make_learner(SPECS["omd_last"], 3)
        drive(learner, random_stream(3, 200, seed=91))
        cert = certify_prox_inequality(learner)
        assert cert.passed, (cert.lhs, cert.rhs)

    def test_holds_on_alternating(self):
        learner = make_learner(SPECS["omd_last"], 2)
        drive(learner, alternating_stream(2, 500))
        cert = certify_prox_inequality(learner)
        assert cert.passed

    def test_rejects_non_omd(self):
        with pytest.raises(TypeError):
            certify_prox_inequality(make_learner(SPECS["hedge"], 2))


class TestBestResponse:
    def test_plays_argmax_point_mass(self):
        state = {"u": np.array([0.1, 0.9, 0.4])}
        learner = make_learner(LearnerSpec("bestresponse"), 3, utility_source=lambda: state["u"])
        np.testing.assert_allclose(learner.play(), [0.0, 1.0, 0.0], atol=0)
        learner.observe(state["u"])
        state["u"] = np.array([0.5, 0.5, 0.4])  # tie breaks to the lowest index
        np.testing.assert_allclose(learner.play(), [1.0, 0.0, 0.0], atol=0)


class TestRegretNonContract:
    def test_regret_can_be_negative(self):
        # a learner that locks onto the best arm early beats every fixed
        # comparator on streams favoring that arm more over time
        learner = make_learner(LearnerSpec("hedge", 2.0), 2)
        stream = [np.array([1.0, 0.0]) if t > 0 else np.array([1.0, 0.9]) for t in range(60)]
        plays, seen = drive(learner, stream)
        assert orc.independent_regret(plays.tolist(), seen.tolist()) < 2.0
