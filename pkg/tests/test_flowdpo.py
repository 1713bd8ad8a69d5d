import math

import numpy as np
import pytest

from percomp import flowdpo as fd

LN2 = math.log(2.0)


def constant_batch(n=4, d=6, t=0.5, **overrides):
    fields = dict(
        nu_h_star=np.ones((n, d)),
        nu_l_star=np.ones((n, d)),
        nu_theta_h=np.ones((n, d)),
        nu_theta_l=np.ones((n, d)),
        nu_ref_h=np.ones((n, d)),
        nu_ref_l=np.ones((n, d)),
        t=np.full(n, t),
    )
    fields.update(overrides)
    return fd.PairBatch(**fields)


class TestFlowSample:
    def test_equal_endpoints(self):
        s = fd.make_flow_sample(np.ones(4), np.ones(4), 0.4)
        assert np.array_equal(s.nu_star, np.zeros(4))
        assert np.array_equal(s.x_t, np.ones(4))

    def test_small_t_near_data(self):
        x0 = np.array([1.0, -2.0, 0.5])
        xi = np.array([0.2, 3.0, -1.0])
        s = fd.make_flow_sample(x0, xi, 1e-9)
        assert np.max(np.abs(s.x_t - x0)) < 1e-8

    def test_noise_reconstruction_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            s = fd.make_flow_sample(
                rng.normal(size=8), rng.normal(size=8), float(rng.uniform(0.01, 0.99))
            )
            recon = s.x_t + (1.0 - s.t) * s.nu_star
            assert np.max(np.abs(s.xi - recon)) < 1e-12

    def test_dim_mismatch(self):
        with pytest.raises(fd.DimMismatchError):
            fd.make_flow_sample(np.ones(3), np.ones(4), 0.5)

    def test_bad_time(self):
        with pytest.raises(fd.BadTimeError):
            fd.make_flow_sample(np.ones(3), np.zeros(3), 1.0)


class TestNoiseVelocityIdentity:
    def test_perfect_prediction(self):
        s = fd.make_flow_sample(np.arange(5.0), np.ones(5), 0.3)
        assert fd.noise_velocity_identity(s, s.nu_star) == (0.0, 0.0)

    def test_t_near_zero_limit(self):
        rng = np.random.default_rng(1)
        s = fd.make_flow_sample(rng.normal(size=6), rng.normal(size=6), 1e-9)
        pred = rng.normal(size=6)
        lhs, rhs = fd.noise_velocity_identity(s, pred)
        direct = float(np.sum((s.nu_star - pred) ** 2))
        assert abs(lhs - direct) < 1e-6 * direct
        assert abs(rhs - direct) < 1e-6 * direct

    def test_identity_sweep(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            s = fd.make_flow_sample(
                rng.normal(size=8), rng.normal(size=8), float(rng.uniform(0.01, 0.99))
            )
            lhs, rhs = fd.noise_velocity_identity(s, rng.normal(size=8))
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, lhs)

    def test_dim_mismatch(self):
        s = fd.make_flow_sample(np.ones(3), np.zeros(3), 0.5)
        with pytest.raises(fd.DimMismatchError):
            fd.noise_velocity_identity(s, np.ones(4))


class TestFlowDpoLoss:
    def test_model_equals_reference_gives_ln2(self):
        rng = np.random.default_rng(3)
        preds = rng.normal(size=(4, 6))
        batch = constant_batch(
            nu_theta_h=preds, nu_ref_h=preds.copy(),
            nu_theta_l=preds * 2, nu_ref_l=preds * 2,
        )
        assert abs(fd.flow_dpo_loss(batch, fd.DPOConfig(beta=3.0)) - LN2) < 1e-12

    def test_beta_zero_gives_ln2(self):
        rng = np.random.default_rng(4)
        batch = constant_batch(
            nu_theta_h=rng.normal(size=(4, 6)), nu_theta_l=rng.normal(size=(4, 6)),
            nu_ref_h=rng.normal(size=(4, 6)), nu_ref_l=rng.normal(size=(4, 6)),
        )
        assert fd.flow_dpo_loss(batch, fd.DPOConfig(beta=0.0)) == pytest.approx(LN2, abs=1e-12)

    def test_winner_improvement_below_ln2(self):
        rng = np.random.default_rng(5)
        target_h = rng.normal(size=(4, 6))
        ref_h = target_h + 0.5  # reference imperfect on winners
        shared_l = rng.normal(size=(4, 6))
        batch = constant_batch(
            nu_h_star=target_h, nu_theta_h=target_h.copy(), nu_ref_h=ref_h,
            nu_l_star=shared_l, nu_theta_l=shared_l + 1.0, nu_ref_l=shared_l + 1.0,
        )
        assert fd.flow_dpo_loss(batch, fd.DPOConfig(beta=1.0)) < LN2

    def test_swap_antisymmetry(self):
        rng = np.random.default_rng(6)
        kw = {
            name: rng.normal(size=(5, 4))
            for name in (
                "nu_h_star", "nu_l_star", "nu_theta_h", "nu_theta_l",
                "nu_ref_h", "nu_ref_l",
            )
        }
        t = rng.uniform(0.1, 0.9, size=5)
        batch = fd.PairBatch(t=t, **kw)
        swapped = fd.PairBatch(
            nu_h_star=kw["nu_l_star"], nu_l_star=kw["nu_h_star"],
            nu_theta_h=kw["nu_theta_l"], nu_theta_l=kw["nu_theta_h"],
            nu_ref_h=kw["nu_ref_l"], nu_ref_l=kw["nu_ref_h"], t=t,
        )
        cfg = fd.DPOConfig(beta=2.0)
        z = fd.preference_margins(batch, cfg)
        z_swapped = fd.preference_margins(swapped, cfg)
        assert np.max(np.abs(z + z_swapped)) < 1e-12
        # -log s(z) - log s(-z) >= 2 ln 2, equality iff z == 0
        total = fd.flow_dpo_loss(batch, cfg) + fd.flow_dpo_loss(swapped, cfg)
        assert total >= 2 * LN2 - 1e-12
        zero = constant_batch()
        assert (
            fd.flow_dpo_loss(zero, cfg) + fd.flow_dpo_loss(zero, cfg)
            == pytest.approx(2 * LN2, abs=1e-12)
        )

    def test_beta_scaling_exact_power_of_two(self):
        rng = np.random.default_rng(7)
        kw = {
            name: rng.normal(size=(5, 4))
            for name in (
                "nu_h_star", "nu_l_star", "nu_theta_h", "nu_theta_l",
                "nu_ref_h", "nu_ref_l",
            )
        }
        batch = fd.PairBatch(t=rng.uniform(0.1, 0.9, size=5), **kw)
        z1 = fd.preference_margins(batch, fd.DPOConfig(beta=0.75))
        z2 = fd.preference_margins(batch, fd.DPOConfig(beta=1.5))
        assert np.array_equal(2.0 * z1, z2)

    def test_beta_t_weighting(self):
        cfg = fd.DPOConfig(beta=4.0)
        assert cfg.beta_t(0.5) == 1.0
        assert cfg.beta_t(0.0) == 4.0


class TestToyOptimizer:
    def test_zero_steps_unchanged(self):
        rng = np.random.default_rng(8)
        train = fd.make_synthetic_pairs(32, 4, rng)
        model = fd.LinearVelocityModel.zeros(4)
        fitted, trace = fd.toy_dpo_optimize(train, model, fd.DPOConfig(beta=1.0), 0)
        assert np.array_equal(fitted.weight, model.weight)
        assert np.array_equal(fitted.bias, model.bias)
        assert len(trace) == 1

    def test_trace_non_increasing(self):
        rng = np.random.default_rng(9)
        train = fd.make_synthetic_pairs(64, 6, rng)
        model = fd.LinearVelocityModel.zeros(6)
        _, trace = fd.toy_dpo_optimize(train, model, fd.DPOConfig(beta=1.0), 40)
        assert all(b <= a + 1e-15 for a, b in zip(trace, trace[1:]))

    def test_margins_positive_after_fit(self):
        rng = np.random.default_rng(10)
        train = fd.make_synthetic_pairs(128, 6, rng)
        model = fd.LinearVelocityModel.zeros(6)
        cfg = fd.DPOConfig(beta=1.0)
        fitted, trace = fd.toy_dpo_optimize(train, model, cfg, 150)
        assert trace[-1] < trace[0]
        z = fd.preference_margins(fd.batch_from_model(train, fitted), cfg)
        assert float(np.mean(z > 0)) >= 0.9

    def test_deterministic(self):
        rng1 = np.random.default_rng(11)
        rng2 = np.random.default_rng(11)
        t1 = fd.make_synthetic_pairs(16, 3, rng1)
        t2 = fd.make_synthetic_pairs(16, 3, rng2)
        m1, tr1 = fd.toy_dpo_optimize(t1, fd.LinearVelocityModel.zeros(3),
                                      fd.DPOConfig(beta=1.0), 20)
        m2, tr2 = fd.toy_dpo_optimize(t2, fd.LinearVelocityModel.zeros(3),
                                      fd.DPOConfig(beta=1.0), 20)
        assert tr1 == tr2
        assert np.array_equal(m1.weight, m2.weight)
