import math

import numpy as np
import pytest
import scipy.special as sps
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from lagrangian_dimple.dimple import fd_second_derivative
from lagrangian_dimple.kernels import Kernel, SpectralMixtureSpec
from lagrangian_dimple.transport_euclid import (
    Strategy,
    TransportCovariance,
    UnsupportedModel,
    criterion_F,
    criterion_F_dichotomic,
    criterion_laplacian,
    eval_closed,
    eval_mc,
    eval_spectral,
    has_closed_form,
    radial_criterion,
)
from lagrangian_dimple.velocity import VelocityLaw


def gaussian_velocity_closed(h, u):
    """d=2 closed form for a Gaussian kernel and V ~ N(mu, I), mu = (1, 0)."""
    return math.exp(-((h[0] - u) ** 2 + h[1] ** 2) / (1 + 2 * u * u)) / (1 + 2 * u * u)


def cauchy_F_closed(h):
    """Closed-form criterion for the Cauchy kernel with V = +-(1, 1)."""
    n2 = h[0] ** 2 + h[1] ** 2
    return 4 * (1 - n2 - 4 * h[0] * h[1]) / (1 + n2) ** 3


CLOSED_MODELS = [
    (Kernel.gaussian(2), VelocityLaw.gaussian([0.0, 0.0])),
    (Kernel.gaussian(3), VelocityLaw.gaussian([0.0, 0.0, 0.0], 0.7)),
    (Kernel.cauchy(2), VelocityLaw.dichotomic([1.0, 1.0])),
    (Kernel.dagum(1.5, 0.8, dim=2), VelocityLaw.dichotomic([0.5, -1.0])),
    (Kernel.gaussian(2), VelocityLaw.uniform_sphere(2)),
    (Kernel.gaussian(3), VelocityLaw.uniform_sphere(3)),
    (Kernel.cauchy(1), VelocityLaw.uniform_sphere(1)),
]


class TestClosedForm:
    def test_gaussian_velocity_zero_lags(self):
        assert eval_closed(Kernel.gaussian(2), VelocityLaw.gaussian([1.0, 0.0]), [0.0, 0.0], 0.0) == 1.0

    def test_gaussian_velocity_reference_value(self):
        val = eval_closed(Kernel.gaussian(2), VelocityLaw.gaussian([1.0, 0.0]), [1.0, 0.0], 1.0)
        assert_allclose(val, 1 / 3, rtol=1e-15)

    def test_gaussian_velocity_matches_closed_formula(self, rng):
        law = VelocityLaw.gaussian([1.0, 0.0])
        for _ in range(50):
            h, u = rng.normal(size=2), rng.normal()
            assert_allclose(eval_closed(Kernel.gaussian(2), law, h, u), gaussian_velocity_closed(h, u), rtol=1e-14)

    def test_dichotomic_cauchy(self):
        val = eval_closed(Kernel.cauchy(2), VelocityLaw.dichotomic([1.0, 1.0]), [0.0, 0.0], 1.0)
        assert_allclose(val, 1 / 3, rtol=1e-15)

    def test_frozen_field_shift(self, rng):
        k = Kernel.exponential(2)
        law = VelocityLaw.deterministic([1.0, 0.5])
        h, u = rng.normal(size=2), rng.normal()
        assert eval_closed(k, law, h, u) == k.value(h - u * np.array([1.0, 0.5]))

    def test_gaussian_uniform_sphere_against_quadrature(self):
        # d = 2: average exp(-|h - u v|^2) over the unit circle by the trapezoid rule
        h, u = np.array([0.7, -0.4]), 1.3
        a = 2 * math.pi * np.arange(4096) / 4096
        V = np.column_stack([np.cos(a), np.sin(a)])
        ref = np.mean(np.exp(-np.sum((h - u * V) ** 2, axis=1)))
        assert_allclose(eval_closed(Kernel.gaussian(2), VelocityLaw.uniform_sphere(2), h, u), ref, rtol=1e-13)

    def test_unsupported_pair(self):
        with pytest.raises(UnsupportedModel):
            eval_closed(Kernel.cauchy(2), VelocityLaw.gaussian([0.0, 0.0]), [1.0, 0.0], 1.0)
        with pytest.raises(UnsupportedModel):
            TransportCovariance(Kernel.cauchy(2), VelocityLaw.gaussian([0.0, 0.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_closed(Kernel.gaussian(2), VelocityLaw.uniform_sphere(3), [1.0, 0.0], 1.0)

    @pytest.mark.parametrize("kernel,law", CLOSED_MODELS)
    def test_zero_lags_give_variance(self, kernel, law):
        assert_allclose(eval_closed(kernel, law, np.zeros(kernel.dim), 0.0), kernel.variance, rtol=1e-15)

    @pytest.mark.parametrize("kernel,law", CLOSED_MODELS + [(Kernel.gaussian(2), VelocityLaw.gaussian([1.0, -0.5]))])
    def test_stationarity_identity(self, kernel, law, rng):
        for _ in range(10):
            h, u = rng.normal(size=kernel.dim), rng.normal()
            assert_allclose(eval_closed(kernel, law, h, u), eval_closed(kernel, law, -h, -u), rtol=1e-13)

    @pytest.mark.parametrize("kernel,law", CLOSED_MODELS)
    def test_symmetric_law_even_in_u(self, kernel, law, rng):
        for _ in range(10):
            h, u = rng.normal(size=kernel.dim), rng.normal()
            assert_allclose(eval_closed(kernel, law, h, u), eval_closed(kernel, law, h, -u), rtol=1e-13)

    @pytest.mark.parametrize("kernel,law", CLOSED_MODELS)
    def test_first_derivative_vanishes(self, kernel, law, rng):
        h = rng.uniform(0.3, 1.5, kernel.dim)
        s = 1e-4
        d1 = (eval_closed(kernel, law, h, s) - eval_closed(kernel, law, h, -s)) / (2 * s)
        assert abs(d1) < 1e-8


class TestMonteCarlo:
    def test_u_zero_exact(self):
        est = eval_mc(Kernel.cauchy(2), VelocityLaw.gaussian([1.0, 0.0]), [0.3, 0.4], 0.0, 1000, 1)
        assert est.estimate == Kernel.cauchy(2).value([0.3, 0.4])
        assert est.stderr == 0.0

    def test_gaussian_velocity(self):
        est = eval_mc(Kernel.gaussian(2), VelocityLaw.gaussian([1.0, 0.0]), [1.0, 0.0], 1.0, 100_000, 7)
        assert abs(est.estimate - 1 / 3) < 3 * est.stderr

    def test_dichotomic(self):
        k, law = Kernel.cauchy(2), VelocityLaw.dichotomic([1.0, 1.0])
        h, u = np.array([0.4, -0.2]), 0.8
        est = eval_mc(k, law, h, u, 10_000, 3)
        assert abs(est.estimate - eval_closed(k, law, h, u)) < 3 * est.stderr

    def test_stationarity_within_error(self):
        k, law = Kernel.cauchy(2), VelocityLaw.gaussian([0.5, 0.5])
        h, u = np.array([0.4, -0.2]), 0.8
        a = eval_mc(k, law, h, u, 50_000, 3)
        b = eval_mc(k, law, -h, -u, 50_000, 4)
        assert abs(a.estimate - b.estimate) < 3 * math.hypot(a.stderr, b.stderr)

    def test_standard_error_halves(self):
        k, law = Kernel.gaussian(2), VelocityLaw.gaussian([1.0, 0.0])
        h, u = np.array([0.5, 0.5]), 1.0
        ratios = [
            eval_mc(k, law, h, u, 4000, s).stderr / eval_mc(k, law, h, u, 16000, 100 + s).stderr for s in range(10)
        ]
        # quadrupling n halves the standard error
        assert abs(np.mean(ratios) - 2.0) < 0.2 * 2.0

    def test_workers_bit_identical(self):
        k, law = Kernel.cauchy(2), VelocityLaw.uniform_sphere(2)
        a = eval_mc(k, law, [0.5, 0.1], 1.2, 100_000, 42, workers=1)
        b = eval_mc(k, law, [0.5, 0.1], 1.2, 100_000, 42, workers=4)
        assert a == b

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            eval_mc(Kernel.cauchy(2), VelocityLaw.uniform_sphere(2), [0.5, 0.1], 1.0, 10)


class TestSpectral:
    def test_single_pair_deterministic(self, rng):
        mix = SpectralMixtureSpec.from_arrays([1.0], [[1.0, 0.0]])
        law = VelocityLaw.deterministic([1.0, 0.0])
        for _ in range(20):
            h, u = rng.normal(size=2), rng.normal()
            assert_allclose(eval_spectral(mix, law, h, u), math.cos(h[0] - u), atol=1e-14)

    def test_u_zero_is_spatial(self, rng):
        mix = SpectralMixtureSpec.from_arrays([0.3, 0.7], [[1.0, 0.2], [-0.4, 1.5]])
        k = Kernel.spectral_mixture(mix)
        h = rng.normal(size=2)
        for law in (VelocityLaw.uniform_sphere(2), VelocityLaw.gaussian([1.0, 0.0]), VelocityLaw.dichotomic([1, 2])):
            assert_allclose(eval_spectral(mix, law, h, 0.0), k.value(h), rtol=1e-14)

    def test_uniform_sphere_bessel(self):
        mix = SpectralMixtureSpec.from_arrays([1.0], [[1.0, 0.0]])
        law = VelocityLaw.uniform_sphere(2)
        for u in (0.5, 2.0, 4.0):
            assert_allclose(eval_spectral(mix, law, [0.0, 0.0], u), sps.j0(u), atol=1e-13)

    def test_matches_closed_deterministic(self, rng):
        mix = SpectralMixtureSpec.from_arrays([0.25, 0.75], [[1.0, 0.5], [-0.3, 2.0]])
        k = Kernel.spectral_mixture(mix)
        law = VelocityLaw.deterministic([0.6, -0.8])
        for _ in range(20):
            h, u = rng.normal(size=2), rng.normal()
            closed = float(k.value(h - u * np.array([0.6, -0.8])))
            assert abs(eval_spectral(mix, law, h, u) - closed) < 1e-12

    def test_non_symmetric_both_rejected(self):
        mix = SpectralMixtureSpec.from_arrays([1.0], [[1.0, 0.0]], symmetrized=False)
        with pytest.raises(ValueError):
            eval_spectral(mix, VelocityLaw.deterministic([1.0, 0.0]), [0.0, 0.0], 1.0)


class TestCriteria:
    def test_cauchy_criterion_value(self):
        k, law = Kernel.cauchy(2), VelocityLaw.dichotomic([1.0, 1.0])
        assert_allclose(criterion_F(k, law, [1.0, 1.0]), -20 / 27, rtol=1e-14)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_matches_cauchy_criterion_formula(self, a, b):
        if math.hypot(a, b) < 1e-3:
            return
        h = [a, b]
        k, law = Kernel.cauchy(2), VelocityLaw.dichotomic([1.0, 1.0])
        assert_allclose(criterion_F(k, law, h), cauchy_F_closed(h), rtol=1e-11, atol=1e-14)
        assert_allclose(criterion_F_dichotomic(k, [1.0, 1.0], h), cauchy_F_closed(h), rtol=1e-11, atol=1e-14)

    def test_cauchy_sign_change_along_xi(self):
        k, law = Kernel.cauchy(2), VelocityLaw.dichotomic([1.0, 1.0])
        kappa = 1 / math.sqrt(6)
        assert criterion_F(k, law, [kappa * 0.99] * 2) > 0
        assert criterion_F(k, law, [kappa * 1.01] * 2) < 0

    def test_cauchy_orthogonal_positive(self):
        k, law = Kernel.cauchy(2), VelocityLaw.dichotomic([1.0, 1.0])
        assert criterion_F(k, law, [1.0, -1.0]) > 0
        for s in np.linspace(0.01, 10, 50):
            assert criterion_F(k, law, [s, -s]) > 0

    def test_zero_lag_rejected(self):
        with pytest.raises(ValueError):
            criterion_F(Kernel.cauchy(2), VelocityLaw.dichotomic([1.0, 1.0]), [0.0, 0.0])

    def test_non_symmetric_rejected(self):
        with pytest.raises(ValueError):
            criterion_F(Kernel.gaussian(2), VelocityLaw.gaussian([1.0, 0.0]), [1.0, 0.0])

    def test_gaussian_laplacian_near_origin(self):
        for d in (1, 2, 3):
            assert_allclose(criterion_laplacian(Kernel.gaussian(d), np.full(d, 1e-8)), -2 * d, rtol=1e-12)

    def test_laplacian_links_uniform_sphere(self):
        k = Kernel.cauchy(2)
        F = criterion_F(k, VelocityLaw.uniform_sphere(2), [1.0, 1.0])
        assert_allclose(-0.5 * criterion_laplacian(k, [1.0, 1.0]), F, rtol=1e-14)

    @pytest.mark.parametrize("kernel", [Kernel.gaussian(3), Kernel.cauchy(2), Kernel.dagum(1.5, 0.7, dim=3)])
    def test_laplacian_matches_radial(self, kernel, rng):
        for _ in range(10):
            h = rng.normal(size=kernel.dim)
            assert_allclose(criterion_laplacian(kernel, h), radial_criterion(kernel, np.linalg.norm(h)), rtol=1e-12)

    @pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
    def test_dagum_proportional_to_polynomial(self, d):
        k = Kernel.dagum(2.0, 1.0, dim=d)
        r = np.linspace(0.05, 6, 200)
        ratio = np.array([radial_criterion(k, x) for x in r]) / ((4 - d) * r * r + 1 - d)
        mask = np.abs((4 - d) * r * r + 1 - d) > 1e-3
        # positive proportionality factor (1 + r^2)^(-5/2) / r, derived by hand
        assert np.all(ratio[mask] > 0)
        assert_allclose(ratio[mask], (1 + r[mask] ** 2) ** -2.5 / r[mask], rtol=1e-10)

    def test_dagum_d1_positive_d4_negative(self):
        assert radial_criterion(Kernel.dagum(2.0, 1.0, dim=1), 1.0) > 0
        for r in np.linspace(0.01, 20, 100):
            assert radial_criterion(Kernel.dagum(2.0, 1.0, dim=4), r) < 0

    @pytest.mark.parametrize("kernel,law", [m for m in CLOSED_MODELS if m[1].dim > 1])
    def test_criterion_curvature_identity(self, kernel, law, rng):
        for _ in range(50):
            h = rng.uniform(-1.5, 1.5, kernel.dim)
            F = criterion_F(kernel, law, h)
            fd = fd_second_derivative(lambda u: eval_closed(kernel, law, h, u), 1e-3)
            # absolute floor: step^2 / 12 * max|d^4 C / du^4| is about 1e-5 for these models
            assert abs(F + fd) <= 1e-3 * abs(F) + 1e-5
            fd4 = fd_second_derivative(lambda u: eval_closed(kernel, law, h, u), 1e-3, order=4)
            assert abs(F + fd4) <= 1e-3 * abs(F) + 1e-9


class TestTransportCovariance:
    def test_strategies_agree(self):
        k, law = Kernel.gaussian(2), VelocityLaw.uniform_sphere(2)
        closed = TransportCovariance(k, law)
        mc = TransportCovariance(k, law, Strategy.MONTE_CARLO, n=100_000, seed=5)
        h, u = [0.6, 0.2], 0.9
        assert abs(closed(h, u) - mc(h, u)) < 3 * mc.stderr(h, u)
        assert closed.stderr(h, u) == 0.0

    def test_curve_and_criterion(self):
        model = TransportCovariance(Kernel.cauchy(2), VelocityLaw.dichotomic([1.0, 1.0]))
        us = np.linspace(-1, 1, 5)
        assert_allclose(model.curve([1.0, 1.0], us), [model([1.0, 1.0], u) for u in us])
        assert_allclose(model.criterion([1.0, 1.0]), -20 / 27)

    def test_has_closed_form(self):
        assert has_closed_form(Kernel.exponential(2), VelocityLaw.deterministic([1.0, 0.0]))
        assert not has_closed_form(Kernel.cauchy(2), VelocityLaw.uniform_sphere(2))

    def test_spectral_requires_mixture(self):
        with pytest.raises(UnsupportedModel):
            TransportCovariance(Kernel.gaussian(2), VelocityLaw.uniform_sphere(2), Strategy.SPECTRAL)
