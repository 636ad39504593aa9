import json
import math

import numpy as np
import pytest

from dpadapt import discrepancy as disc
from dpadapt import pipeline as pl
from dpadapt import regression as reg
from dpadapt.errors import InvalidParameterError
from dpadapt.mechanisms import PrivacyBudget, RandomStream

NOISELESS = PrivacyBudget(math.inf, 0.5)


def toy_data():
    """d=1: source {(1, y=1), (2, y=1)}, target {(1)}.  Putting all weight
    on the first source point zeroes the discrepancy, and w=1 fits it."""
    source_X = np.array([[1.0], [2.0]])
    source_y = np.array([1.0, 1.0])
    target_X = np.array([[1.0]])
    return source_X, source_y, target_X


class TestRadiusBound:
    def test_max_over_samples(self):
        r = pl.radius_bound(np.array([[3.0, 4.0]]), np.array([[1.0, 0.0]]))
        assert r == pytest.approx(5.0)


class TestTwoStage:
    @pytest.mark.parametrize("method", ["fw", "md"])
    def test_toy_concentrates_weight_and_interpolates(self, method):
        sX, sy, tX = toy_data()
        res = pl.two_stage(sX, sy, tX, method=method, Lambda=1.0,
                           budget=NOISELESS, rng=RandomStream(0),
                           K=800, mu=50.0, lam=0.0)
        assert res.q_hat[0] >= 0.95
        # the learner then essentially interpolates the heavy point
        assert res.hypothesis.w[0] == pytest.approx(1.0, abs=0.1)
        assert res.discrepancy_exact <= 0.5

    def test_single_source_point_interpolation(self):
        # one source point: q_hat = (1) and ridge-free fit interpolates
        res = pl.two_stage(np.array([[1.0]]), np.array([2.0]),
                           np.array([[1.0]]), method="fw", Lambda=2.0,
                           budget=NOISELESS, rng=RandomStream(0),
                           K=10, mu=5.0, ridge=0.0)
        np.testing.assert_allclose(res.q_hat, [1.0])
        assert res.hypothesis.w[0] == pytest.approx(2.0, rel=1e-9)

    def test_default_calibration_is_used(self):
        rng = np.random.default_rng(0)
        sX = rng.uniform(-0.5, 0.5, size=(12, 2))
        sy = rng.normal(size=12)
        tX = rng.uniform(-0.5, 0.5, size=(30, 2))
        budget = PrivacyBudget(2.0, 1e-3)
        res = pl.two_stage(sX, sy, tX, method="fw", Lambda=1.0,
                           budget=budget, rng=RandomStream(1))
        from dpadapt import optimizers as opt
        model = disc.build_model(sX, tX, pl.radius_bound(sX, tX))
        K, mu = opt.default_fw_params(model, budget, pl.DEFAULT_BETA)
        assert res.params["K"] == K
        assert res.params["mu"] == pytest.approx(mu)

    def test_rejects_unknown_method(self):
        sX, sy, tX = toy_data()
        with pytest.raises(InvalidParameterError):
            pl.two_stage(sX, sy, tX, method="gd", Lambda=1.0,
                         budget=NOISELESS, rng=RandomStream(0), K=5)

    def test_trace_has_K_rounds(self):
        sX, sy, tX = toy_data()
        res = pl.two_stage(sX, sy, tX, method="fw", Lambda=1.0,
                           budget=NOISELESS, rng=RandomStream(0),
                           K=17, mu=5.0)
        assert len(res.trace) == 17


class TestJointProfile:
    def test_plugin_constants(self):
        # r = rhat = 1, Lambda = 1, Y = 1, mu = 1, n = 2:
        # gamma_q = (1+1)^2 + 4 = 8, gamma_w = 2*2*1 = 4, mu_q = 4,
        # mu_w = 1, gamma_qw = 2*2 = 4, D_q = 2, D_w = 2,
        # tau_q = 8*1*1*1/2 = 4, tau_w = 0
        model = disc.build_model([[1.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]], r=1.0)
        p = pl.joint_profile(model, Lambda=1.0, Y=1.0, mu=1.0)
        assert p.gamma_q == pytest.approx(8.0)
        assert p.gamma_w == pytest.approx(4.0)
        assert p.mu_q == pytest.approx(4.0)
        assert p.mu_w == pytest.approx(1.0)
        assert p.gamma_qw == pytest.approx(4.0)
        assert p.D_q == 2.0
        assert p.D_w == 2.0
        assert p.tau_q == pytest.approx(4.0)
        assert p.tau_w == 0.0


class TestSingleStageSchedule:
    def test_closed_form(self):
        model = disc.build_model([[1.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]], r=1.0)
        budget = PrivacyBudget(2.0, 1e-2)
        Lam, Y, mu, beta = 1.0, 1.0, 1.0, 0.05
        K, eta = pl.single_stage_schedule(model, Lam, Y, mu, budget, beta)
        K_raw = (2.0 * 2 * 2.0 * math.sqrt(3.0)
                 / (4.0 * math.log(2 / beta) * math.sqrt(math.log(1e2))))
        assert K == max(1, round(K_raw))
        eta_raw = math.sqrt(2.0) * 2.0 / math.sqrt(3.0 * K)
        assert eta == pytest.approx(min(eta_raw, 1.0))

    def test_noiseless_requires_explicit_K(self):
        model = disc.build_model([[1.0]], [[1.0]], r=1.0)
        with pytest.raises(InvalidParameterError):
            pl.single_stage_schedule(model, 1.0, 1.0, 1.0, NOISELESS, 0.05)

    def test_eta_clamped_to_one(self):
        model = disc.build_model([[1.0]], [[1.0]], r=1.0)
        _, eta = pl.single_stage_schedule(model, 1.0, 100.0, 1e-6, NOISELESS,
                                          0.05, K=1)
        assert eta == 1.0


class TestDefaultJointMu:
    def test_finite_epsilon(self):
        assert pl.default_joint_mu(PrivacyBudget(2.0, 1e-3), 64) == \
            pytest.approx(128.0 ** (2.0 / 7.0))

    def test_noiseless_fallback(self):
        assert pl.default_joint_mu(NOISELESS, 128) == \
            pytest.approx(128.0 ** (2.0 / 7.0))


class TestSingleStage:
    def test_toy_converges(self):
        sX, sy, tX = toy_data()
        res = pl.single_stage(sX, sy, tX, Lambda=2.0, budget=NOISELESS,
                              rng=RandomStream(0), mu=50.0, K=600)
        assert res.q_hat[0] >= 0.9
        assert res.hypothesis.w[0] == pytest.approx(1.0, abs=0.15)

    def test_noiseless_gap_decreases(self):
        rng = np.random.default_rng(1)
        sX = rng.uniform(-0.5, 0.5, size=(15, 2))
        sy = sX @ np.array([1.0, -1.0])
        tX = rng.uniform(-0.5, 0.5, size=(40, 2))
        res = pl.single_stage(sX, sy, tX, Lambda=1.5, budget=NOISELESS,
                              rng=RandomStream(2), mu=10.0, K=400)
        first = res.trace[0].gap_q + res.trace[0].gap_w
        assert res.gap_estimate <= first / 10.0

    def test_w_stays_in_ball(self):
        sX, sy, tX = toy_data()
        res = pl.single_stage(sX, sy, tX, Lambda=0.5, budget=NOISELESS,
                              rng=RandomStream(3), mu=20.0, K=100)
        assert np.linalg.norm(res.hypothesis.w) <= 0.5 + 1e-12

    def test_deterministic_given_seed(self):
        sX, sy, tX = toy_data()
        a = pl.single_stage(sX, sy, tX, Lambda=1.0, budget=PrivacyBudget(1.0, 1e-3),
                            rng=RandomStream(7), mu=10.0, K=50)
        b = pl.single_stage(sX, sy, tX, Lambda=1.0, budget=PrivacyBudget(1.0, 1e-3),
                            rng=RandomStream(7), mu=10.0, K=50)
        np.testing.assert_array_equal(a.hypothesis.w, b.hypothesis.w)
        np.testing.assert_array_equal(a.q_hat, b.q_hat)


class TestBoundReport:
    def test_terms_present_and_finite(self):
        sX, sy, tX = toy_data()
        res = pl.two_stage(sX, sy, tX, method="fw", Lambda=1.0,
                           budget=NOISELESS, rng=RandomStream(0), K=50, mu=20.0)
        rep = pl.bound_report(res, sX, sy, tX, Lambda=1.0)
        for key in ("weighted_empirical_loss", "discrepancy_exact",
                    "rademacher_term", "confidence_term"):
            assert math.isfinite(rep[key])
            assert rep[key] >= 0.0
        assert rep["eta_H"] == "unknown"

    def test_sqrt_n_scaling(self):
        # quadrupling the target sample halves both deviation terms
        rng = np.random.default_rng(4)
        sX = rng.uniform(-0.5, 0.5, size=(10, 2))
        sy = rng.normal(size=10)
        res = None
        terms = {}
        for n in (25, 100):
            tX = rng.uniform(-0.5, 0.5, size=(n, 2)) * 0.0 + 0.3
            res = pl.two_stage(sX, sy, tX, method="fw", Lambda=1.0,
                               budget=NOISELESS, rng=RandomStream(0),
                               K=20, mu=10.0)
            terms[n] = pl.bound_report(res, sX, sy, tX, Lambda=1.0)
        # same radius/labels by construction; only n changes
        assert terms[25]["rademacher_term"] == pytest.approx(
            2.0 * terms[100]["rademacher_term"], rel=1e-9)
        assert terms[25]["confidence_term"] == pytest.approx(
            2.0 * terms[100]["confidence_term"], rel=1e-9)


class TestResultSerialization:
    def test_to_json_roundtrip(self):
        sX, sy, tX = toy_data()
        res = pl.two_stage(sX, sy, tX, method="fw", Lambda=1.0,
                           budget=NOISELESS, rng=RandomStream(0), K=10, mu=5.0)
        rec = json.loads(res.to_json(trace_path="trace.csv"))
        assert rec["trace_path"] == "trace.csv"
        np.testing.assert_allclose(rec["q_hat"], res.q_hat)
        np.testing.assert_allclose(rec["w"], res.hypothesis.w)
        assert rec["discrepancy"] == pytest.approx(res.discrepancy_exact)
