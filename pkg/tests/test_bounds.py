"""Inequality verifiers: Povzner split, moment envelopes, comparison bound."""

import math

import numpy as np
import pytest

from enskog.bounds import (
    MomentEnvelope,
    bihari_lasalle,
    calibrate_envelope,
    envelope_eval,
    povzner_certify,
    povzner_lhs,
    povzner_rhs,
)
from enskog.geometry import deflection, sample_sphere


def rk4_power_ode(f0, big_k, alpha, t_final, steps=2000):
    """Reference integration of f' = K f^(1-alpha), f(0) = f0."""
    h = t_final / steps
    f = f0
    rhs = lambda y: big_k * max(y, 0.0) ** (1.0 - alpha)
    for _ in range(steps):
        k1 = rhs(f)
        k2 = rhs(f + 0.5 * h * k1)
        k3 = rhs(f + 0.5 * h * k2)
        k4 = rhs(f + h * k3)
        f = f + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return f


class TestPovznerLhs:
    def test_energy_power_vanishes_pointwise(self):
        rng = np.random.default_rng(0)
        v = rng.normal(size=3)
        u = rng.normal(size=3)
        for theta in (0.3, 1.5, 3.0):
            val = povzner_lhs(v, u, theta, 1.0)
            assert abs(val) < 1e-10

    def test_equal_velocities_vanish(self):
        v = np.array([0.5, -1.0, 2.0])
        assert povzner_lhs(v, v.copy(), 1.2, 3.0) == 0.0

    def test_node_floor_enforced(self):
        v = np.zeros(3)
        with pytest.raises(ValueError, match="32"):
            povzner_lhs(v, v, 1.0, 2.0, nodes=16)
        with pytest.raises(ValueError, match="at least 1"):
            povzner_lhs(v, v, 1.0, 0.5)

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(5)
        v = rng.normal(size=3, scale=1.5)
        u = rng.normal(size=3, scale=1.5)
        theta = 1.1
        p = 2.0
        nmc = 1_000_000
        xi = sample_sphere(rng, 3, nmc)
        alpha = deflection(v, u, np.full(nmc, theta), xi)
        bv = 1.0 + np.sum((v + alpha) ** 2, axis=-1)
        bu = 1.0 + np.sum((u - alpha) ** 2, axis=-1)
        base = (1.0 + v @ v) ** p + (1.0 + u @ u) ** p
        vals = (bv**p + bu**p - base) * 2.0 * np.pi
        est, se = vals.mean(), vals.std(ddof=1) / math.sqrt(nmc)
        got = povzner_lhs(v, u, theta, p)
        assert abs(got - est) < 3.0 * se

    def test_batched_evaluation_matches_scalar(self):
        rng = np.random.default_rng(9)
        v = rng.normal(size=(10, 3))
        u = rng.normal(size=(10, 3))
        th = rng.uniform(0.1, 3.0, 10)
        batch = povzner_lhs(v, u, th, 3.0)
        single = np.array([povzner_lhs(v[i], u[i], th[i], 3.0) for i in range(10)])
        assert np.abs(batch - single).max() < 1e-12


class TestPovznerRhs:
    def test_frozen_rest_pair(self):
        z = np.zeros(3)
        assert povzner_rhs(z, z, np.pi / 2, 2.0, 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_vanishes_at_pi(self):
        rng = np.random.default_rng(1)
        v, u = rng.normal(size=3), rng.normal(size=3)
        assert abs(povzner_rhs(v, u, np.pi, 3.0, 2.0)) < 1e-28

    def test_mixed_term_count(self):
        # p = 4 has floor(5/2) = 2 mixed pairs; at v = u = 0 every bracket
        # is 1, so RHS = sin^2 (2 C kmax - 1)
        z = np.zeros(3)
        got = povzner_rhs(z, z, np.pi / 2, 4.0, 1.0)
        assert got == pytest.approx(2.0 * 2.0 - 1.0, abs=1e-14)

    def test_leading_homogeneity(self):
        v = np.array([1.0, 0.0, 0.0])
        u = np.array([0.0, 1.0, 0.0])
        p, c = 2.0, 1.5
        lam = 100.0
        big = povzner_rhs(lam * v, lam * u, 0.7, p, c)
        ref = povzner_rhs(v, u, 0.7, p, c)
        # degree-2p leading behavior in the joint scale
        assert big / (lam ** (2 * p)) == pytest.approx(
            np.sin(0.7) ** 2 * (2.0 * c - 1.0), rel=0.05
        )
        assert big > ref

    def test_domain_errors(self):
        z = np.zeros(3)
        with pytest.raises(ValueError, match="p >= 2"):
            povzner_rhs(z, z, 1.0, 1.5, 1.0)
        with pytest.raises(ValueError, match="positive"):
            povzner_rhs(z, z, 1.0, 2.0, 0.0)


class TestPovznerCertify:
    @pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
    def test_no_violations_out_of_sample(self, p):
        report = povzner_certify(p, sample_count=10_000)
        assert report.ok
        assert report.calibrated
        assert report.violations == 0
        assert np.isfinite(report.c_p) and report.c_p > 0

    def test_equal_velocity_samples_safe(self):
        report = povzner_certify(2.0, sample_count=100)
        rng = np.random.default_rng(3)
        for _ in range(20):
            v = rng.normal(size=3, scale=2.0)
            th = rng.uniform(0.1, 3.0)
            lhs = povzner_lhs(v, v.copy(), th, 2.0)
            rhs = povzner_rhs(v, v.copy(), th, 2.0, report.c_p)
            assert lhs == 0.0 and rhs >= 0.0

    def test_small_angle_ratio_bounded(self):
        # both sides are O(theta^2); the calibrated constant keeps the
        # bound through the smallest grid angles and below
        report = povzner_certify(2.0, sample_count=100)
        rng = np.random.default_rng(4)
        v = rng.normal(size=3)
        u = rng.normal(size=3)
        for th in (0.04, 0.01, 0.003):
            lhs = float(povzner_lhs(v, u, th, 2.0))
            rhs = float(povzner_rhs(v, u, th, 2.0, report.c_p))
            assert lhs <= rhs + 1e-9 * max(1.0, abs(rhs))

    def test_supplied_constant_respected(self):
        report = povzner_certify(2.0, c_p=50.0, sample_count=500)
        assert not report.calibrated
        assert report.c_p == 50.0
        assert report.ok

    def test_report_text(self):
        text = povzner_certify(2.0, sample_count=200).to_text()
        assert "C_p" in text and "violations" in text and "PASS" in text


class TestEnvelopes:
    def test_regime_gamma_consistency(self):
        with pytest.raises(ValueError, match="gamma <= 0"):
            MomentEnvelope(1.0, 2.0, "soft-exponential", 1.0, 1.0, 1.0)
        with pytest.raises(ValueError, match="gamma < 0"):
            MomentEnvelope(0.0, 2.0, "soft-polynomial", 1.0, 1.0, 1.0)
        with pytest.raises(ValueError, match="in \\(0, 2\\)"):
            MomentEnvelope(2.0, 2.0, "hard-subcritical", 1.0, 1.0, 1.0)
        with pytest.raises(ValueError, match="regime"):
            MomentEnvelope(1.0, 2.0, "mystery", 1.0, 1.0, 1.0)

    def test_soft_exponential_initial_value(self):
        env = MomentEnvelope(-0.5, 2.0, "soft-exponential", c1=0.7, c2=1.0, m0=3.0)
        assert envelope_eval(env, 0.0) == 3.0

    def test_hard_subcritical_tail_power(self):
        # gamma = 1, p = 4: 2p/(2-gamma) = 8
        env = MomentEnvelope(1.0, 4.0, "hard-subcritical", c1=2.0, c2=0.5, m0=1.0)
        assert env.exponent == 8.0
        t = 1e4
        assert envelope_eval(env, t) / t**8 == pytest.approx(0.5, rel=1e-8)

    def test_monotone_in_time(self):
        envs = [
            MomentEnvelope(-1.0, 2.0, "soft-exponential", 0.3, 1.1, 2.0),
            MomentEnvelope(-0.5, 1.5, "soft-polynomial", 1.0, 0.8, 2.0),
            MomentEnvelope(1.0, 4.0, "hard-subcritical", 1.0, 0.8, 2.0),
            MomentEnvelope(1.5, 3.0, "hard-sup", 1.2, 0.0, 2.0),
        ]
        t = np.linspace(0.0, 5.0, 200)
        for env in envs:
            vals = envelope_eval(env, t)
            assert np.all(np.diff(vals) >= 0.0)

    def test_negative_time_rejected(self):
        env = MomentEnvelope(-1.0, 2.0, "soft-exponential", 0.3, 1.0, 2.0)
        with pytest.raises(ValueError, match="nonnegative"):
            envelope_eval(env, -1.0)

    def test_calibration_dominates_training_series(self):
        times = np.linspace(0.0, 2.0, 9)
        rng = np.random.default_rng(8)
        series = [
            3.0 + 0.5 * times**2 + 0.1 * rng.random(times.size) for _ in range(4)
        ]
        env = calibrate_envelope("hard-subcritical", 1.0, 1.0, times, series)
        vals = envelope_eval(env, times)
        for s in series:
            assert np.all(s <= vals + 1e-12)

    def test_calibration_soft_exponential(self):
        times = np.linspace(0.0, 1.0, 6)
        series = [2.0 * np.exp(0.8 * times), 2.0 * np.exp(0.5 * times)]
        env = calibrate_envelope("soft-exponential", -1.0, 2.0, times, series)
        assert env.c1 == pytest.approx(0.8, rel=1e-12)
        vals = envelope_eval(env, times)
        for s in series:
            assert np.all(s <= vals)

    def test_calibration_input_checks(self):
        times = np.linspace(0.0, 1.0, 4)
        with pytest.raises(ValueError, match="at least one"):
            calibrate_envelope("hard-sup", 1.0, 2.0, times, [])
        with pytest.raises(ValueError, match="align"):
            calibrate_envelope("hard-sup", 1.0, 2.0, times, [np.ones(3)])
        with pytest.raises(ValueError, match="t = 0"):
            calibrate_envelope("hard-sup", 1.0, 2.0, times + 1.0, [np.ones(4)])


class TestBihariLasalle:
    def test_frozen_value(self):
        got = bihari_lasalle(1.0, 1.0, 0.5, 1.0)
        assert got.tight == pytest.approx(2.25, abs=1e-14)
        assert got.split == pytest.approx(2.5, abs=1e-14)

    def test_time_zero_and_zero_rate(self):
        assert bihari_lasalle(3.0, 2.0, 0.25, 0.0).tight == 3.0
        for t in (0.5, 1.0, 7.0):
            assert bihari_lasalle(3.0, 0.0, 0.25, t).tight == 3.0

    def test_split_dominates_tight(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            f0 = rng.uniform(0.0, 10.0)
            k = rng.uniform(0.0, 10.0)
            a = rng.uniform(0.05, 0.95)
            t = rng.uniform(0.0, 5.0)
            b = bihari_lasalle(f0, k, a, t)
            assert b.split >= b.tight * (1.0 - 1e-12)

    def test_dominates_rk4_solution(self):
        for f0 in (0.1, 1.0, 10.0):
            for k in (0.0, 0.5, 2.0):
                for a in (0.25, 0.5, 0.75):
                    for t in (0.5, 1.0, 3.0):
                        ref = rk4_power_ode(f0, k, a, t)
                        got = bihari_lasalle(f0, k, a, t).tight
                        assert ref <= got * (1.0 + 1e-6)
                        # the tight form solves the ODE, so it is sharp
                        assert got <= ref * (1.0 + 1e-5)

    def test_domain_errors(self):
        with pytest.raises(ValueError, match="alpha"):
            bihari_lasalle(1.0, 1.0, 1.5, 1.0)
        with pytest.raises(ValueError, match="K"):
            bihari_lasalle(1.0, -1.0, 0.5, 1.0)
        with pytest.raises(ValueError, match="f0"):
            bihari_lasalle(-1.0, 1.0, 0.5, 1.0)
        with pytest.raises(ValueError, match="t"):
            bihari_lasalle(1.0, 1.0, 0.5, -2.0)
