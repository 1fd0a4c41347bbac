import numpy as np
import pytest

from bintrack import (
    ImpulseResponse,
    InvalidPolynomialError,
    PlantModel,
    Polynomial,
    UnstablePolynomialError,
    binary_sensor,
    impulse_response,
    is_stable,
)
from .oracles import long_division_g, random_stable_poly

A_SV = (1.0, -0.1, 0.5)
B_SV = (1.0, 0.5, -0.4)


class TestPolynomial:
    def test_trims_trailing_zeros(self):
        p = Polynomial((1.0, 2.0, 0.0, 0.0))
        assert p.degree == 1
        assert tuple(p.coeffs) == (1.0, 2.0)

    def test_zero_polynomial_has_no_stability_status(self):
        p = Polynomial((0.0, 0.0))
        assert p.degree == 0
        with pytest.raises(InvalidPolynomialError):
            is_stable(p)

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidPolynomialError):
            Polynomial((1.0, np.nan))

    def test_coeffs_read_only(self):
        p = Polynomial((1.0, 2.0))
        with pytest.raises(ValueError):
            p.coeffs[0] = 5.0


class TestStability:
    def test_reference_plant_polynomials_stable(self):
        assert is_stable(Polynomial(A_SV))
        assert is_stable(Polynomial(B_SV))

    def test_root_inside_disc_unstable(self):
        # 1 - 2z has root 0.5
        assert not is_stable(Polynomial((1.0, -2.0)))

    def test_root_on_circle_unstable(self):
        assert not is_stable(Polynomial((1.0, -1.0)))

    def test_constant_polynomial_stable(self):
        assert is_stable(Polynomial((1.0,)))

    def test_matches_root_oracle_on_random_polynomials(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            deg = int(rng.integers(1, 6))
            coeffs = rng.uniform(-1.0, 1.0, deg + 1)
            coeffs[0] = rng.uniform(0.5, 1.5)
            roots = np.roots(coeffs[::-1])
            expected = bool(np.all(np.abs(roots) > 1.0 + 1e-9))
            assert is_stable(Polynomial(coeffs)) == expected


class TestImpulseResponse:
    def test_reference_plant_leading_terms(self):
        g = impulse_response(Polynomial(A_SV), Polynomial(B_SV), m=3)
        assert np.allclose(g.coeffs, [1.0, 0.6, -0.84], atol=1e-12, rtol=0.0)

    def test_reference_plant_matches_long_division(self):
        g = impulse_response(Polynomial(A_SV), Polynomial(B_SV), m=50)
        ref = long_division_g(A_SV, B_SV, 50)
        assert np.max(np.abs(g.coeffs - ref)) < 1e-10

    def test_random_systems_match_long_division(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            a = random_stable_poly(rng, int(rng.integers(1, 5)))
            b = random_stable_poly(rng, int(rng.integers(0, 5)), monic=False)
            g = impulse_response(Polynomial(a), Polynomial(b), m=40)
            ref = long_division_g(a, b, 40)
            assert np.max(np.abs(g.coeffs - ref)) < 1e-10

    def test_first_coefficient_is_b1(self):
        g = impulse_response(Polynomial(A_SV), Polynomial((2.5, 0.3)), m=5)
        assert g.coeffs[0] == 2.5

    def test_fir_plant_returns_b(self):
        g = impulse_response(Polynomial((1.0,)), Polynomial(B_SV), m=6)
        assert np.allclose(g.coeffs[:3], B_SV, atol=1e-15, rtol=0.0)
        assert np.allclose(g.coeffs[3:], 0.0, atol=0.0, rtol=0.0)

    def test_default_truncation_tail_negligible(self):
        g = impulse_response(Polynomial(A_SV), Polynomial(B_SV))
        m = len(g.coeffs)
        ref = long_division_g(A_SV, B_SV, m + 200)
        assert np.abs(ref[m:]).sum() < 1e-11
        assert g.decay_rate_estimate > 0.0

    def test_convolution_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = random_stable_poly(rng, int(rng.integers(1, 4)))
            b = random_stable_poly(rng, int(rng.integers(0, 4)), monic=False)
            g = impulse_response(Polynomial(a), Polynomial(b), m=60)
            prod = np.convolve(a, g.coeffs)[:40]
            bpad = np.zeros(40)
            bpad[: b.size] = b
            assert np.max(np.abs(prod - bpad)) < 1e-10

    def test_unstable_a_rejected(self):
        with pytest.raises(UnstablePolynomialError):
            impulse_response(Polynomial((1.0, -2.0)), Polynomial(B_SV), m=5)

    def test_nonmonic_a_rejected(self):
        with pytest.raises(InvalidPolynomialError):
            impulse_response(Polynomial((2.0, 1.0)), Polynomial(B_SV), m=5)

    def test_coeffs_read_only(self):
        g = impulse_response(Polynomial(A_SV), Polynomial(B_SV), m=4)
        with pytest.raises(ValueError):
            g.coeffs[0] = 0.0


class TestPlantModel:
    def test_validation(self):
        with pytest.raises(InvalidPolynomialError):
            PlantModel(Polynomial((2.0, 1.0)), Polynomial(B_SV))
        with pytest.raises(UnstablePolynomialError):
            PlantModel(Polynomial((1.0, -2.0)), Polynomial(B_SV))
        with pytest.raises(UnstablePolynomialError):
            PlantModel(Polynomial(A_SV), Polynomial((1.0, -2.0)))
        with pytest.raises(InvalidPolynomialError):
            PlantModel(Polynomial(A_SV), Polynomial((0.0, 1.0)))

    def test_unit_impulse_reproduces_impulse_response(self):
        plant = PlantModel(Polynomial(A_SV), Polynomial(B_SV))
        ys = [plant.plant_step(1.0)]
        for _ in range(7):
            ys.append(plant.plant_step(0.0))
        ref = long_division_g(A_SV, B_SV, 8)
        assert np.max(np.abs(np.array(ys) - ref)) < 1e-12

    def test_first_steps_by_hand(self):
        plant = PlantModel(Polynomial(A_SV), Polynomial(B_SV))
        assert plant.plant_step(1.0) == 1.0
        # y2 = b1 u1 + b2 u0 - a2 y1 = 0 + 0.5 + 0.1 = 0.6
        assert abs(plant.plant_step(0.0) - 0.6) < 1e-15

    def test_zero_input_stays_zero(self):
        plant = PlantModel(Polynomial(A_SV), Polynomial(B_SV))
        for _ in range(10):
            assert plant.plant_step(0.0) == 0.0

    def test_matches_truncated_convolution(self):
        rng = np.random.default_rng(19)
        for _ in range(5):
            a = random_stable_poly(rng, int(rng.integers(1, 4)))
            b = random_stable_poly(rng, int(rng.integers(0, 4)), monic=False)
            plant = PlantModel(Polynomial(a), Polynomial(b))
            g = long_division_g(a, b, 400)
            u = rng.uniform(-1.0, 1.0, 200)
            ys = [plant.plant_step(float(uk)) for uk in u]
            for t in (49, 120, 199):
                conv = float(np.dot(g[: t + 1], u[t::-1]))
                assert abs(ys[t] - conv) < 1e-9

    def test_process_noise_enters_recursion(self):
        quiet = PlantModel(Polynomial(A_SV), Polynomial(B_SV))
        noisy = PlantModel(Polynomial(A_SV), Polynomial(B_SV))
        y1 = noisy.plant_step(1.0, noise=0.25)
        assert y1 == quiet.plant_step(1.0) + 0.25
        # the disturbance recirculates through A on the next step
        assert noisy.plant_step(0.0) != quiet.plant_step(0.0)


class TestBinarySensor:
    def test_strictly_above_threshold(self):
        assert binary_sensor(0.5, 0.2, 0.6) == 1
        assert binary_sensor(0.5, 0.0, 0.6) == 0

    def test_equality_counts_as_below(self):
        assert binary_sensor(0.3, 0.3, 0.6) == 0

    def test_negative_side(self):
        assert binary_sensor(-1.0, 0.2, 0.0) == 0
