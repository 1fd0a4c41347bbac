import math

import numpy as np
import pytest

from bintrack import (
    BinaryOutputEstimator,
    DimensionSchedule,
    DomainError,
    GaussianNoise,
    PlantModel,
    Polynomial,
    beta_gain,
    binary_sensor,
    dimension_at,
    epoch_replay,
    innovation,
    predict,
    regret_term,
)
from bintrack.estimator import info_matrix_lambda_min, regressor
from .oracles import scalar_hand_step

A_SV = (1.0, -0.1, 0.5)
B_SV = (1.0, 0.5, -0.4)


def drive(est, n, seed=0, scale=1.0):
    """Feed n plant-in-the-loop steps with bounded random inputs."""
    rng = np.random.default_rng(seed)
    plant = PlantModel(Polynomial(A_SV), Polynomial(B_SV))
    for _ in range(n):
        u = float(rng.uniform(-scale, scale))
        y = plant.plant_step(u)
        s = binary_sensor(y, float(rng.normal()), 0.0)
        est.step(u, 0.0, s)
    return est


class TestDimensionSchedule:
    def test_examples(self):
        sched = DimensionSchedule()
        assert dimension_at(sched, 1) == 1
        assert dimension_at(sched, 2) == 1
        assert dimension_at(sched, 47) == 14
        assert dimension_at(sched, 50_000) == 117

    def test_nondecreasing(self):
        sched = DimensionSchedule()
        dims = [dimension_at(sched, n) for n in range(1, 3000)]
        assert all(b >= a for a, b in zip(dims, dims[1:]))

    def test_domain(self):
        with pytest.raises(DomainError):
            DimensionSchedule(a_exponent=1.0)
        with pytest.raises(DomainError):
            dimension_at(DimensionSchedule(), 0)


class TestInnovation:
    def test_midpoint(self):
        assert innovation(1, 0.0, 0.0, GaussianNoise()) == 0.5
        assert innovation(0, 0.0, 0.0, GaussianNoise()) == -0.5

    def test_sign_tracks_surprise(self):
        noise = GaussianNoise()
        # confident prediction of 1 that comes true: small positive
        assert 0.0 < innovation(1, 0.0, 3.0, noise) < 0.01
        # same prediction contradicted: near -1
        assert -1.0 <= innovation(0, 0.0, 3.0, noise) < -0.99

    def test_bounded(self):
        noise = GaussianNoise()
        for s in (0, 1):
            for m in (-50.0, -2.0, 0.0, 2.0, 50.0):
                e = innovation(s, 0.3, m, noise)
                assert -1.0 <= e <= 1.0

    def test_zero_mean_under_true_model(self):
        noise = GaussianNoise()
        rng = np.random.default_rng(123)
        m_true, c = 0.4, 0.1
        n = 200_000
        s = (m_true + rng.normal(size=n) > c).astype(float)
        # linearity: the innovation mean equals innovation of the mean bit
        mean_e = innovation(float(s.mean()), c, m_true, noise)
        assert abs(mean_e) < 3.0 * 0.5 / math.sqrt(n)
        for sk in s[:100]:
            assert innovation(sk, c, m_true, noise) == sk - 1.0 + noise.cdf(c - m_true)

    def test_regret_term(self):
        assert regret_term(2.0, 0.5) == 2.25
        assert regret_term(1.0, 1.0) == 0.0


class TestSingleStep:
    def test_hand_computed_first_step(self):
        beta0, e1, a0, theta1 = scalar_hand_step()
        est = BinaryOutputEstimator(GaussianNoise())
        est.step(1.0, 0.0, 1)
        assert abs(est.gain_floor_at(0) - beta0) < 1e-15
        assert est.last_innovation == e1
        assert abs(est.last_gain - a0) < 1e-12
        assert abs(est.theta[0] - theta1) < 1e-12

    def test_first_step_gain_uses_peak_density(self):
        # u_max excludes the step-0 input, so beta_0 = g_floor(0)
        noise = GaussianNoise()
        est = BinaryOutputEstimator(noise)
        est.step(5.0, 0.0, 1)
        assert est.gain_floor_at(0) == noise.g_floor(0.0)
        assert est.u_max == 0.0

    def test_later_steps_include_current_input(self):
        noise = GaussianNoise()
        est = BinaryOutputEstimator(noise)
        est.step(1.0, 0.0, 1)
        est.step(3.0, 0.0, 0)
        assert est.u_max == 3.0
        expected = beta_gain(noise, est.radius_at(1), 3.0)
        assert est.gain_floor_at(1) == expected

    def test_zero_inputs_leave_state_untouched(self):
        est = BinaryOutputEstimator(GaussianNoise())
        for s in (1, 0, 1, 1, 0):
            est.step(0.0, 0.0, s)
        assert np.array_equal(est.theta, np.zeros(est.p))
        assert np.array_equal(est.P, np.eye(est.p))

    def test_validation(self):
        est = BinaryOutputEstimator(GaussianNoise())
        with pytest.raises(DomainError):
            est.step(math.inf, 0.0, 1)
        with pytest.raises(DomainError):
            est.step(1.0, math.nan, 1)
        with pytest.raises(DomainError):
            est.step(1.0, 0.0, 0.5)

    def test_constructor_validation(self):
        with pytest.raises(DomainError):
            BinaryOutputEstimator(GaussianNoise(), epoch_mode="pad")
        with pytest.raises(DomainError):
            BinaryOutputEstimator(GaussianNoise(), P0_scale=0.0)


class TestInvariants:
    def test_gain_identity_ball_and_innovation(self):
        """P_inverse matches the accumulated normal equations at every step,
        theta stays inside the scheduled ball, innovations stay in (-1, 1)."""
        noise = GaussianNoise()
        est = BinaryOutputEstimator(noise)
        rng = np.random.default_rng(77)
        plant = PlantModel(Polynomial(A_SV), Polynomial(B_SV))

        def rebuild(upto, p):
            acc = np.eye(p) / est.P0_scale
            for t in range(upto):
                ph = est.regressor(t, p)
                b = est.gain_floor_at(t)
                acc += (b * b) * np.outer(ph, ph)
            return acc

        acc = np.eye(1)
        p_seen = 1
        for k in range(300):
            u = float(rng.uniform(-1.0, 1.0))
            y = plant.plant_step(u)
            s = binary_sensor(y, float(rng.normal()), 0.0)
            est.step(u, 0.0, s)
            if est.p != p_seen:
                p_seen = est.p
                acc = rebuild(k, p_seen)
            phi = est.regressor(k, p_seen)
            b = est.gain_floor_at(k)
            acc += (b * b) * np.outer(phi, phi)
            rel = np.abs(est.P_inverse - acc).max() / np.abs(acc).max()
            assert rel <= 1e-8, f"P-inverse drift {rel:.2e} at step {k}"
            assert np.abs(est.theta).sum() <= est.radius_at(k) * (1.0 + 1e-9)
            assert abs(est.last_innovation) < 1.0
        prod = est.P @ est.P_inverse
        assert np.abs(prod - np.eye(p_seen)).max() < 1e-6

    def test_replay_at_current_dimension_is_bit_identical(self):
        est = drive(BinaryOutputEstimator(GaussianNoise()), 150, seed=3)
        twin = est.epoch_replay(est.p)
        assert np.array_equal(twin.theta, est.theta)
        assert np.array_equal(twin.P, est.P)
        assert np.array_equal(twin.P_inverse, est.P_inverse)
        assert twin.u_max == est.u_max

    def test_epoch_replay_is_pure(self):
        est = drive(BinaryOutputEstimator(GaussianNoise()), 60, seed=4)
        theta_before = est.theta
        p_before = est.p
        other = epoch_replay(est, p_before + 3)
        assert other.p == p_before + 3
        assert est.p == p_before
        assert np.array_equal(est.theta, theta_before)

    def test_replay_dimension_validation(self):
        est = BinaryOutputEstimator(GaussianNoise())
        with pytest.raises(DomainError):
            est.epoch_replay(0)

    def test_extra_dimensions_decouple_on_impulse_input(self):
        """With a single nonzero input, coordinates never mix, so a wider
        replay reproduces the narrow state exactly on shared coordinates."""
        est = BinaryOutputEstimator(GaussianNoise())
        bits = (1, 0, 1, 1, 0, 1)
        for j, s in enumerate(bits):
            est.step(0.8 if j == 0 else 0.0, 0.0, s)
        narrow = est.epoch_replay(4)
        wide = est.epoch_replay(8)
        assert np.array_equal(wide.theta[:4], narrow.theta)
        assert np.array_equal(wide.P[:4, :4], narrow.P)

    def test_zeropad_mode_runs_and_respects_ball(self):
        est = BinaryOutputEstimator(GaussianNoise(), epoch_mode="zeropad")
        drive(est, 80, seed=5)
        assert np.all(np.isfinite(est.theta))
        assert np.abs(est.theta).sum() <= est.radius_at(est.k - 1) * (1.0 + 1e-9)
        prod = est.P @ est.P_inverse
        assert np.abs(prod - np.eye(est.p)).max() < 1e-6


class TestDerivedViews:
    def test_regressor_padding_and_order(self):
        est = BinaryOutputEstimator(GaussianNoise())
        for u, s in ((1.0, 1), (2.0, 0), (3.0, 1)):
            est.step(u, 0.0, s)
        assert np.array_equal(regressor(est, 2, 5), [3.0, 2.0, 1.0, 0.0, 0.0])
        assert np.array_equal(est.regressor(0, 2), [1.0, 0.0])
        with pytest.raises(IndexError):
            est.regressor(3)
        with pytest.raises(DomainError):
            est.regressor(0, 0)

    def test_recent_inputs(self):
        est = BinaryOutputEstimator(GaussianNoise())
        for u, s in ((1.0, 1), (2.0, 0), (3.0, 1)):
            est.step(u, 0.0, s)
        assert np.array_equal(est.recent_inputs(2), [3.0, 2.0])
        assert np.array_equal(est.recent_inputs(5), [3.0, 2.0, 1.0, 0.0, 0.0])
        assert est.recent_inputs(0).size == 0

    def test_predict_formula(self):
        est = BinaryOutputEstimator(GaussianNoise())
        est._p = 2
        est._theta = np.array([1.0, 0.5])
        est._u[0] = 2.0
        est._k = 1
        assert predict(est, 1.0) == 2.0

    def test_predict_zero_state(self):
        est = BinaryOutputEstimator(GaussianNoise())
        assert est.predict(5.0) == 0.0

    def test_input_log(self):
        est = BinaryOutputEstimator(GaussianNoise())
        est.step(1.5, 0.0, 1)
        est.step(-0.5, 0.0, 0)
        assert np.array_equal(est.input_log, [1.5, -0.5])


class TestInformationMatrix:
    def test_fresh_state(self):
        est = BinaryOutputEstimator(GaussianNoise())
        assert info_matrix_lambda_min(est) == 1.0

    def test_scalar_accumulation(self):
        est = BinaryOutputEstimator(GaussianNoise())
        est.step(1.0, 0.0, 1)
        est.step(2.0, 0.0, 0)
        # 1/P0 + 1^2 + 2^2 = 6 at dimension 1
        assert abs(est.info_matrix_lambda_min() - 6.0) < 1e-12

    def test_gram_path_matches_rebuild(self):
        est = drive(BinaryOutputEstimator(GaussianNoise()), 150, seed=6)
        fast = est.info_matrix_lambda_min()
        slow = est.info_matrix_lambda_min(t=est.k - 1, dim=est.p)
        assert abs(fast - slow) <= 1e-9 * max(1.0, abs(slow))

    def test_prior_only(self):
        est = BinaryOutputEstimator(GaussianNoise(), P0_scale=4.0)
        est.step(1.0, 0.0, 1)
        assert abs(est.info_matrix_lambda_min(t=-1, dim=3) - 0.25) < 1e-15

    def test_random_inputs_excite_all_directions(self):
        # +-1 inputs at fixed lag-window dimension: lambda_min grows like t
        for seed in (0, 1):
            rng = np.random.default_rng(seed)
            est = BinaryOutputEstimator(GaussianNoise())
            t = 2000
            est._u = rng.choice([-1.0, 1.0], size=t).astype(float)
            est._k = t
            lam = est.info_matrix_lambda_min(t=t - 1, dim=4)
            assert lam >= 0.5 * t

    def test_bounds(self):
        est = BinaryOutputEstimator(GaussianNoise())
        est.step(1.0, 0.0, 1)
        with pytest.raises(IndexError):
            est.info_matrix_lambda_min(t=1, dim=2)
