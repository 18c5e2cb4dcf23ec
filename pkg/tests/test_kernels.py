import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import fd_grad, fd_hessian
from lagrangian_dimple.kernels import Family, Kernel, KernelError, SpectralMixtureSpec, gram_min_eig, kernel_from_json


def euclid_kernels(dim):
    freqs = np.linspace(0.4, 1.3, 2 * dim).reshape(2, dim)
    mix = SpectralMixtureSpec.from_arrays([0.6, 0.4], freqs)
    return [
        Kernel.exponential(dim),
        Kernel.gaussian(dim),
        Kernel.cauchy(dim),
        Kernel.dagum(2.0, 1.0, dim=dim),
        Kernel.dagum(1.4, 0.6, dim=dim),
        Kernel.spectral_mixture(mix),
    ]


SPHERE_KERNELS = [Kernel.multiquadric(0.5, 1.0), Kernel.multiquadric(0.3, 0.5), Kernel.cosine()]


class TestValues:
    def test_gaussian_at_zero(self):
        assert Kernel.gaussian(2).value([0.0, 0.0]) == 1.0

    def test_cauchy_norm_sq_two(self):
        assert_allclose(Kernel.cauchy(2).value([1.0, 1.0]), 1 / 3, rtol=1e-15)

    def test_multiquadric_at_zero_angle(self):
        assert_allclose(Kernel.multiquadric(0.3, 0.5).sphere_value(1.0), 1.0, rtol=1e-15)

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_zero_lag_is_variance(self, dim):
        for k in euclid_kernels(dim):
            assert_allclose(k.scaled(2.5).value(np.zeros(dim)), 2.5 * k.variance, rtol=1e-14)

    def test_sphere_zero_angle_is_variance(self):
        for k in SPHERE_KERNELS:
            assert_allclose(k.scaled(3.0).sphere_value(1.0), 3.0, rtol=1e-14)

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_bounded_by_variance(self, dim, rng):
        h = rng.uniform(-5, 5, (500, dim))
        for k in euclid_kernels(dim):
            assert np.all(np.abs(k.value(h)) <= k.value(np.zeros(dim)) + 1e-15)

    def test_sphere_bounded_by_variance(self):
        c = np.cos(np.linspace(0, math.pi, 301))
        for k in SPHERE_KERNELS:
            assert np.all(np.abs(k.sphere_value(c)) <= k.sphere_value(1.0) + 1e-15)

    def test_batched_matches_single(self, rng):
        k = Kernel.dagum(1.5, 0.8, dim=3)
        h = rng.normal(size=(7, 3))
        assert_allclose(k.value(h), [k.value(x) for x in h], rtol=1e-15)


class TestValidation:
    @pytest.mark.parametrize(
        "build",
        [
            lambda: Kernel.dagum(2.5, 1.0),
            lambda: Kernel.dagum(2.0, 2.0),
            lambda: Kernel.dagum(2.0, 0.0),
            lambda: Kernel.multiquadric(1.0, 1.0),
            lambda: Kernel.multiquadric(0.5, 0.0),
            lambda: Kernel.gaussian(2, variance=-1.0),
        ],
    )
    def test_out_of_range_rejected(self, build):
        with pytest.raises(KernelError):
            build()

    def test_sphere_kernel_rejects_euclidean_eval(self):
        with pytest.raises(KernelError):
            Kernel.cosine().value([0.0, 0.0, 1.0])

    def test_cosine_outside_range_rejected(self):
        with pytest.raises(ValueError):
            Kernel.cosine().sphere_value(1.1)

    def test_from_json_round_trip(self):
        k = Kernel.dagum(1.5, 0.7, dim=3, variance=2.0)
        assert kernel_from_json(k.to_json()) == k

    def test_from_json_unknown_family(self):
        with pytest.raises(KernelError):
            kernel_from_json({"family": "matern"})


class TestGradients:
    def test_gaussian_grad_at_zero(self):
        assert_allclose(Kernel.gaussian(2).grad([0.0, 0.0]), [0.0, 0.0], atol=0)

    def test_cauchy_grad(self):
        k = Kernel.cauchy(2)
        assert_allclose(k.grad([1.0, 0.0]), [-0.5, 0.0], atol=1e-15)
        assert_allclose(fd_grad(k.value, [1.0, 0.0]), [-0.5, 0.0], atol=1e-9)

    def test_exponential_grad_at_zero_raises(self):
        with pytest.raises(KernelError):
            Kernel.exponential(2).grad([0.0, 0.0])

    def test_exponential_hessian_at_zero_raises(self):
        with pytest.raises(KernelError):
            Kernel.exponential(2).hessian([0.0, 0.0])

    def test_gaussian_hessian_at_zero(self):
        assert_allclose(Kernel.gaussian(3).hessian(np.zeros(3)), -2 * np.eye(3), atol=1e-15)
        assert_allclose(fd_hessian(Kernel.gaussian(3).value, np.zeros(3)), -2 * np.eye(3), atol=1e-6)

    def test_cauchy_hessian_quadratic_form(self):
        xi = np.array([1.0, 1.0])
        H = Kernel.cauchy(2).hessian([1.0, 1.0])
        assert_allclose(xi @ H @ xi, 20 / 27, rtol=1e-14)
        # independent route: the closed-form criterion F(h) = 4(1-|h|^2-4 h1 h2)/(1+|h|^2)^3
        F = 4 * (1 - 2 - 4) / 27
        assert_allclose(xi @ H @ xi, -F, rtol=1e-14)

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_against_finite_differences(self, dim, rng):
        worst_g = worst_h = 0.0
        for k in euclid_kernels(dim):
            for _ in range(1000 // (6 * 3) + 1):
                h = rng.uniform(-2.5, 2.5, dim)
                g = k.grad(h)
                H = k.hessian(h)
                gfd = fd_grad(k.value, h)
                Hfd = fd_hessian(k.value, h)
                worst_g = max(worst_g, np.max(np.abs(g - gfd)) / max(np.max(np.abs(g)), 1e-3))
                worst_h = max(worst_h, np.max(np.abs(H - Hfd)) / max(np.max(np.abs(H)), 1e-2))
        assert worst_g < 1e-5
        assert worst_h < 1e-5

    @given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.sampled_from(list(range(6))))
    def test_hessian_symmetric(self, h, which):
        h = np.array(h)
        if np.linalg.norm(h) < 1e-3:
            h = h + 0.5
        H = euclid_kernels(3)[which].hessian(h)
        assert np.array_equal(H, H.T)

    def test_laplacian_is_trace(self, rng):
        k = Kernel.cauchy(3)
        h = rng.normal(size=3)
        assert_allclose(k.laplacian(h), np.trace(k.hessian(h)), rtol=1e-14)


class TestRadial:
    def test_dagum_fast_path_derivative(self):
        k = Kernel.dagum(2.0, 1.0, dim=2)
        _, d1, _ = k.radial_derivs(1.0)
        assert_allclose(d1, -(2.0 ** -1.5), rtol=1e-14)
        fd = (k.radial_derivs(1 + 1e-5)[0] - k.radial_derivs(1 - 1e-5)[0]) / 2e-5
        assert_allclose(d1, fd, rtol=1e-8)

    def test_dagum_general_matches_fast_path(self):
        # gamma slightly off 2 takes the general chain-rule branch
        fast = np.array(Kernel.dagum(2.0, 1.0).radial_derivs(0.7))
        near = np.array(Kernel.dagum(2.0 - 1e-9, 1.0).radial_derivs(0.7))
        assert_allclose(near, fast, rtol=1e-7)

    def test_gaussian_first_derivative_vanishes_at_origin(self):
        assert abs(Kernel.gaussian(2).radial_derivs(1e-9)[1]) < 1e-8

    def test_cauchy_value_at_one(self):
        assert Kernel.cauchy(2).radial_derivs(1.0)[0] == 0.5

    @given(st.floats(1e-4, 50.0))
    def test_dagum_monotone(self, r):
        assert Kernel.dagum(2.0, 1.0).radial_derivs(r)[1] < 0

    # the fixed step cannot resolve the r^(gamma-2) curvature of singular kernels near 0
    @given(st.floats(0.05, 8.0), st.sampled_from([Family.GAUSSIAN, Family.CAUCHY, Family.EXPONENTIAL, Family.DAGUM]))
    def test_radial_second_derivative_fd(self, r, fam):
        k = {
            Family.GAUSSIAN: Kernel.gaussian(1),
            Family.CAUCHY: Kernel.cauchy(1),
            Family.EXPONENTIAL: Kernel.exponential(1),
            Family.DAGUM: Kernel.dagum(1.3, 0.9, dim=1),
        }[fam]
        s = 1e-4 * max(1.0, r)
        f = lambda x: k.radial_derivs(x)[0]  # noqa: E731
        _, d1, d2 = k.radial_derivs(r)
        assert_allclose(d1, (f(r + s) - f(r - s)) / (2 * s), rtol=1e-5, atol=1e-9)
        assert_allclose(d2, (f(r + s) - 2 * f(r) + f(r - s)) / (s * s), rtol=1e-5, atol=1e-6)


class TestSphere:
    @given(st.floats(-0.99, 0.99))
    def test_cosine_derivs(self, c):
        assert Kernel.cosine().sphere_derivs(c) == (c, 1.0, 0.0)

    def test_multiquadric_at_zero(self):
        assert_allclose(Kernel.multiquadric(0.5, 1.0).sphere_derivs(0.0)[0], 0.2, rtol=1e-15)

    @pytest.mark.parametrize("delta,tau", [(0.5, 1.0), (0.3, 0.5), (0.8, 2.5)])
    def test_multiquadric_derivatives_fd(self, delta, tau):
        k = Kernel.multiquadric(delta, tau)
        for c in np.linspace(-0.95, 0.95, 21):
            v, d1, d2 = k.sphere_derivs(c)
            s1, s2 = 1e-5 * max(1, abs(c)), 1e-4 * max(1, abs(c))
            f = k.sphere_value
            assert_allclose(d1, (f(c + s1) - f(c - s1)) / (2 * s1), rtol=1e-6)
            assert_allclose(d2, (f(c + s2) - 2 * f(c) + f(c - s2)) / (s2 * s2), rtol=1e-5)

    def test_derivs_need_open_interval(self):
        with pytest.raises(ValueError):
            Kernel.cosine().sphere_derivs(1.0)


class TestPositiveSemidefinite:
    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_euclidean_grams(self, dim, rng):
        for k in euclid_kernels(dim):
            pts = rng.uniform(-3, 3, (50, dim))
            assert gram_min_eig(k, pts) >= -1e-8 * k.variance

    @pytest.mark.parametrize("dim", [2, 3])
    def test_sphere_grams(self, dim, rng):
        pts = rng.normal(size=(50, dim))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        for k in SPHERE_KERNELS:
            k = Kernel(k.family, k.params, dim, k.variance)
            assert gram_min_eig(k, pts) >= -1e-8 * k.variance


class TestSpectralMixture:
    def test_weights_sum_to_variance(self):
        mix = SpectralMixtureSpec.from_arrays([0.25, 0.75], [[1.0, 0.0], [0.0, 2.0]])
        k = Kernel.spectral_mixture(mix)
        assert_allclose(k.value([0.0, 0.0]), 1.0, rtol=1e-15)

    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=2))
    def test_even(self, h):
        mix = SpectralMixtureSpec.from_arrays([0.3, 0.7], [[1.0, -0.5], [0.2, 2.0]])
        k = Kernel.spectral_mixture(mix)
        h = np.array(h)
        assert k.value(h) == k.value(-h)

    def test_cosine_sum(self, rng):
        w = np.array([0.2, 0.5, 0.3])
        om = rng.normal(size=(3, 2))
        k = Kernel.spectral_mixture(SpectralMixtureSpec.from_arrays(w, om))
        h = rng.normal(size=2)
        assert_allclose(k.value(h), np.sum(w * np.cos(om @ h)), rtol=1e-14)

    def test_variance_must_match_weights(self):
        mix = SpectralMixtureSpec.from_arrays([1.0], [[1.0, 0.0]])
        with pytest.raises(KernelError):
            Kernel(Family.SPECTRAL_MIXTURE, {}, 2, 2.0, mix)
