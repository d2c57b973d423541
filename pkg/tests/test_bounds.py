"""Tests for the explicit analytic quantities.
"""

import math

import numpy as np
import pytest

from seplab import ConfigInvalid, BadPlateau, DegenerateTheta, UnsupportedActivation
from seplab.numerics import RngStream, integrate_adaptive, normal_cdf, sample_sphere
from seplab.distributions import SinePairSpec
from seplab.networks import ActivationSpec, RELU
from seplab.witness import grid_base_derivative, sine_v
from seplab.bounds import (BoundReport, kappa, kappa_critical_points, sigma_d_grid,
                           sigma_d_sine, grid_sigma_residual, sine_sigma_residual, u_sup_bounds,
                           pv_bound, gaussian_tail, two_layer_tail_bound,
                           upper_bound_2l_explicit, sphere_area, spherical_cap_area,
                           sphere_moment, cap_expectation_bound, rkhs_upper_bound_explicit,
                           sec4_v_bounds, three_layer_lower_formula)


class TestKappa:
    """max |cos(x) sin(2x)| over the critical points in [-pi, pi]."""

    def test_value(self):
        value, maximizer = kappa()
        assert abs(value - 0.769800358917917) <= 5e-12
        assert value == pytest.approx(4.0 / (3.0 * math.sqrt(3.0)), abs=1e-14)
        assert abs(maximizer - 0.615478880595691) <= 1e-6
        assert maximizer == pytest.approx(math.atan(1.0 / math.sqrt(2.0)), abs=1e-12)

    def test_critical_points(self):
        points = kappa_critical_points()
        assert len(points) == 6
        assert all(-math.pi <= x <= math.pi for x in points)
        for x in points:
            derivative = 2.0 * math.cos(x) * (math.cos(x) ** 2 - 2.0 * math.sin(x) ** 2)
            assert derivative == pytest.approx(0.0, abs=1e-12)

    def test_dominates_grid(self):
        x = np.linspace(-math.pi, math.pi, 100001)
        assert np.max(np.abs(np.cos(x) * np.sin(2.0 * x))) <= kappa().value + 1e-15


class TestSigmaD:

    def test_grid_one_dimension(self):
        assert 0.094 < sigma_d_grid(1) < 0.095

    @pytest.mark.parametrize('d', [1, 2, 5, 10, 50])
    def test_residuals(self, d):
        assert abs(grid_sigma_residual(sigma_d_grid(d), d)) <= 1e-12
        assert abs(sine_sigma_residual(sigma_d_sine(d), d)) <= 1e-12

    def test_decreasing(self):
        grid = [sigma_d_grid(d) for d in range(1, 16)]
        sine = [sigma_d_sine(d) for d in range(1, 16)]
        assert all(a > b for a, b in zip(grid, grid[1:]))
        assert all(a > b for a, b in zip(sine, sine[1:]))
        assert max(grid) <= 1.0 / 6.0
        assert max(sine) <= 2.0

    def test_logarithmic_decay(self):
        # sigma_d ~ x0 / sqrt(2 log d)
        for d in (100, 1000):
            ratio = sigma_d_grid(d) * math.sqrt(2.0 * math.log(d)) / 0.125
            assert 0.8 < ratio < 1.2

    def test_invalid(self):
        with pytest.raises(BadPlateau):
            sigma_d_grid(2, x0=0.3)
        with pytest.raises(ConfigInvalid):
            sigma_d_grid(2, eps=1.5)
        with pytest.raises(ConfigInvalid):
            sigma_d_sine(0)


class TestUSup:
    """B1 and B2 dominate the sampled suprema of |u'| and |t u(t)|."""

    @pytest.mark.parametrize('d, sigma, b', [(2, 0.15, 0.0), (3, 0.1, 1.2), (5, 0.08, -3.0)])
    def test_dominates_grid(self, d, sigma, b):
        g = np.random.default_rng(d)
        theta = g.standard_normal(d)
        theta /= np.linalg.norm(theta)
        t = np.linspace(-80.0, 80.0, 400001)
        bounds = u_sup_bounds(d, sigma, b)
        u_prime = grid_base_derivative(theta, sigma, b)(t)
        u = np.exp(-0.5 * sigma ** 2 * t * t - 1j * b * t) * \
            np.prod(np.cos(0.5 * np.outer(t, theta)) * np.sin(np.outer(t, theta)), axis=1)
        assert np.max(np.abs(u_prime)) <= bounds.b1
        assert np.max(np.abs(t * u)) <= bounds.b2

    def test_invalid_sigma(self):
        with pytest.raises(ConfigInvalid):
            u_sup_bounds(2, 0.0, 0.0)


class TestPrincipalValueBound:

    def test_dominates(self):
        from seplab.numerics import pv_integral
        t = np.linspace(-10.0, 10.0, 200001)
        sup_uprime = np.max(np.abs((1.0 - 2.0 * t * t) * np.exp(-t * t)))
        sup_ut = np.max(np.abs(t * t * np.exp(-t * t)))
        value = abs(pv_integral(lambda s: s * np.exp(-s * s)))
        assert value <= pv_bound(sup_uprime, sup_ut, 1.0)

    def test_invalid(self):
        with pytest.raises(ConfigInvalid):
            pv_bound(1.0, 1.0, 0.0)
        with pytest.raises(ConfigInvalid):
            pv_bound(-1.0, 1.0)


class TestGaussianTail:

    def test_one_sigma(self):
        tail = gaussian_tail(0.3, 0.3)
        assert tail.prob_bound == pytest.approx(math.exp(-0.5) / math.sqrt(2.0 * math.pi))
        assert 1.0 - normal_cdf(1.0) <= tail.prob_bound

    def test_three_sigma(self):
        assert gaussian_tail(3.0, 1.0).prob_bound >= 1.0 - normal_cdf(3.0)

    def test_mean(self):
        sigma, x = 0.7, 1.1

        def density(z):
            return z * math.exp(-0.5 * (z / sigma) ** 2) / (math.sqrt(2.0 * math.pi) * sigma)

        expected = integrate_adaptive(density, x, math.inf)
        assert gaussian_tail(x, sigma).mean_bound == pytest.approx(expected, abs=1e-10)

    def test_two_layer_tail(self):
        assert two_layer_tail_bound(4, 0.1) == gaussian_tail(4.0, 0.1).mean_bound

    def test_invalid(self):
        with pytest.raises(ConfigInvalid):
            gaussian_tail(0.0, 1.0)


class TestTwoLayerUpperBound:

    def test_report(self):
        report = upper_bound_2l_explicit(4, sigma_d_grid(4))
        assert report.combination == 'max'
        assert list(report.terms) == ['interior', 'tail']
        assert report.total == max(report.terms.values())
        assert report.params['b'] == pytest.approx(6.0)
        assert math.isfinite(report.total) and report.total > 0

    def test_json(self):
        report = upper_bound_2l_explicit(3, 0.1, b=1.0)
        assert BoundReport.from_json(report.to_json()) == report

    def test_activation_scaling(self):
        relu = upper_bound_2l_explicit(3, 0.1)
        leaky = upper_bound_2l_explicit(3, 0.1, act=ActivationSpec.leaky(0.5))
        assert leaky.terms['interior'] == pytest.approx(0.5 * relu.terms['interior'])

    def test_one_dimension_linear_term(self):
        base = upper_bound_2l_explicit(1, 0.1, act=ActivationSpec(1, 1.0, 1.0))
        shifted = upper_bound_2l_explicit(1, 0.1, act=ActivationSpec(1, 2.0, 0.0))
        assert shifted.terms['interior'] == pytest.approx(base.terms['interior'] + 2.0)

    def test_power_activation(self):
        with pytest.raises(UnsupportedActivation):
            upper_bound_2l_explicit(3, 0.1, act=ActivationSpec(2, 1.0, 0.0))


class TestSphere:

    def test_area(self):
        assert sphere_area(3) == pytest.approx(4.0 * math.pi)
        assert sphere_area(2, 2.0) == pytest.approx(4.0 * math.pi)

    def test_cap_closed_form(self):
        angle = 0.4
        assert spherical_cap_area(3, 1.0, angle) == pytest.approx(2.0 * math.pi *
                                                                  (1.0 - math.cos(angle)))

    @pytest.mark.parametrize('d', [2, 4, 7])
    def test_hemisphere(self, d):
        half = 0.5 * sphere_area(d, 1.5)
        assert spherical_cap_area(d, 1.5, 0.5 * math.pi) == pytest.approx(half)

    def test_cap_monte_carlo(self):
        n = 400000
        points = sample_sphere(5, RngStream(8), n)
        inside = points[:, 0] >= math.cos(math.pi / 6.0)
        fraction = inside.mean()
        se = math.sqrt(fraction * (1.0 - fraction) / n)
        expected = spherical_cap_area(5, 1.0, math.pi / 6.0) / sphere_area(5)
        assert abs(fraction - expected) <= 4.0 * se

    def test_cap_invalid(self):
        with pytest.raises(ConfigInvalid):
            spherical_cap_area(1, 1.0, 0.3)
        with pytest.raises(ConfigInvalid):
            spherical_cap_area(3, 1.0, 2.0)

    @pytest.mark.parametrize('d', [2, 3, 4, 10])
    def test_moments(self, d):
        assert sphere_moment(d, 2) == pytest.approx(1.0 / d)
        assert sphere_moment(d, 4) == pytest.approx(3.0 / (d * (d + 2.0)))
        assert sphere_moment(d, 3) == 0.0

    def test_moments_monte_carlo(self):
        n = 200000
        theta1 = sample_sphere(4, RngStream(9), n)[:, 0]
        for k in (2, 4):
            values = theta1 ** k
            assert abs(values.mean() - sphere_moment(4, k)) <= 4.0 * values.std() / math.sqrt(n)

    @pytest.mark.parametrize('d, ell, sigma', [(2, 1.0, 1.0), (4, 2.0, 1.0), (8, 3.0, 0.8)])
    def test_cap_expectation(self, d, ell, sigma):
        theta1 = sample_sphere(d, RngStream(d), 200000)[:, 0]
        values = np.exp(-ell * ell * (1.0 - theta1 ** 2) / sigma ** 2)
        assert values.mean() <= cap_expectation_bound(d, ell, sigma)

    def test_cap_expectation_one_dimension(self):
        assert cap_expectation_bound(1, 2.0, 1.0) == 1.0


class TestVBounds:
    """Segment bounds of int_0^inf sin(tb) J(t) / t^2 dt."""

    @staticmethod
    def _segments(spec, theta, b):
        v = sine_v(spec, theta, b)

        def scalar(t):
            return float(v(np.array([t]))[0])

        bounds = sec4_v_bounds(spec, theta, b)
        return bounds, (integrate_adaptive(scalar, 0.0, bounds.split),
                        integrate_adaptive(scalar, bounds.split, 1.0),
                        integrate_adaptive(scalar, 1.0, math.inf))

    @pytest.mark.parametrize('d, sigma, ell, theta, b', [
        (2, 0.3, 3.0, (1.0, 0.0), 0.5),
        (3, 1.0, 1.5, (0.6, 0.8, 0.0), 2.0),
        (4, 0.7, 2.0, (0.5, 0.5, 0.5, 0.5), -1.0),
    ])
    def test_dominate_segments(self, d, sigma, ell, theta, b):
        spec = SinePairSpec(d, sigma, ell)
        bounds, segments = self._segments(spec, np.array(theta), b)
        assert abs(segments[0]) <= bounds.v1
        assert abs(segments[1]) <= bounds.v2 + 1e-14
        assert abs(segments[2]) <= bounds.v3

    def test_split(self):
        bounds = sec4_v_bounds(SinePairSpec(2, 0.3, 3.0), np.array([1.0, 0.0]), 0.5)
        assert bounds.split == pytest.approx(0.03)

    def test_published_split(self):
        bounds = sec4_v_bounds(SinePairSpec(2, 0.3, 3.0), np.array([1.0, 0.0]), 0.5)
        assert bounds.printed_split == pytest.approx(0.06)
        assert bounds.printed_v2 == pytest.approx(9.0 / (4.0 * 0.3 ** 4) * math.exp(-4.0 / 0.18),
                                                  rel=1e-12)
        assert bounds.v2 == pytest.approx(2.0 * 3.0 / 0.09 * math.exp(-4.0 / 0.18), rel=1e-12)
        tilted = sec4_v_bounds(SinePairSpec(3, 1.0, 1.5), np.array([0.6, 0.8, 0.0]), 2.0)
        assert tilted.split == 1.0
        assert tilted.printed_split == pytest.approx(2.0 / 0.9)

    def test_degenerate(self):
        with pytest.raises(DegenerateTheta):
            sec4_v_bounds(SinePairSpec(2, 1.0, 1.0), np.array([0.0, 1.0]), 0.5)


class TestRkhsBound:

    @pytest.mark.parametrize('d', [2, 4, 9, 16])
    def test_terms(self, d):
        report = rkhs_upper_bound_explicit(SinePairSpec.at_sigma_d(d))
        assert list(report.terms) == ['cap', 'small_t', 'middle', 'first_moment']
        assert report.total == pytest.approx(sum(report.terms.values()))
        assert all(v >= 0 for v in report.terms.values())
        assert math.isfinite(report.total)

    def test_relu_default(self):
        spec = SinePairSpec.at_sigma_d(4)
        assert rkhs_upper_bound_explicit(spec) == rkhs_upper_bound_explicit(spec, RELU)

    def test_power_activation(self):
        with pytest.raises(UnsupportedActivation):
            rkhs_upper_bound_explicit(SinePairSpec(2, 1.0, 1.0), ActivationSpec(3))


class TestThreeLayerLowerFormula:

    def test_values(self):
        assert three_layer_lower_formula(2) == pytest.approx(1.0 / 3077.0)
        assert three_layer_lower_formula(10) == pytest.approx(1.0 / (51300.0 + 5120.0 + 1.0))

    def test_small_d(self):
        with pytest.raises(ConfigInvalid):
            three_layer_lower_formula(1)
