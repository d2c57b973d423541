"""Tests for the numerical kernels: quadrature, principal values, roots,
random streams and the multistart search.
"""

import math

import numpy as np
import pytest

from seplab import ConfigInvalid, NoBracket, NonConvergence, SingularitySpacing
from seplab.numerics import (QuadratureConfig, SearchConfig, RngStream, integrate_adaptive,
                             panel_quadrature, gauss_hermite_expectation, gaussian_cutoff,
                             find_root, normal_cdf, normal_pdf, pv_integral, sample_sphere,
                             maximize_multistart)


class TestConfigs:
    """Validation of the quadrature and search budgets."""

    def test_defaults(self):
        cfg = QuadratureConfig()
        assert cfg.abs_tol == 1e-10
        assert cfg.max_subdivisions == 4096
        assert SearchConfig().n_starts >= 1

    @pytest.mark.parametrize('kwargs', [
        {'abs_tol': 0.0}, {'rel_tol': -1.0}, {'max_subdivisions': 0}, {'tail_cutoff': 0.0},
    ])
    def test_bad_quadrature_config(self, kwargs):
        with pytest.raises(ConfigInvalid):
            QuadratureConfig(**kwargs)

    @pytest.mark.parametrize('kwargs', [
        {'n_starts': 0}, {'max_iters': -1}, {'step_init': 0.0}, {'fd_step': 0.0},
    ])
    def test_bad_search_config(self, kwargs):
        with pytest.raises(ConfigInvalid):
            SearchConfig(**kwargs)


class TestIntegrateAdaptive:

    def test_gaussian_over_line(self):
        value = integrate_adaptive(lambda x: math.exp(-x * x), -math.inf, math.inf)
        assert value == pytest.approx(math.sqrt(math.pi), abs=1e-10)

    def test_half_line(self):
        value = integrate_adaptive(lambda x: math.exp(-x), 0.0, math.inf)
        assert value == pytest.approx(1.0, abs=1e-10)

    def test_reversed_limits(self):
        forward = integrate_adaptive(math.sin, 0.0, 1.0)
        assert integrate_adaptive(math.sin, 1.0, 0.0) == pytest.approx(-forward, abs=1e-14)

    def test_breakpoints(self):
        value = integrate_adaptive(abs, -1.0, 2.0, points=[0.0, 5.0])
        assert value == pytest.approx(2.5, abs=1e-12)

    def test_empty_interval(self):
        assert integrate_adaptive(math.cos, 3.0, 3.0) == 0.0


class TestPanelQuadrature:

    def test_real(self):
        assert panel_quadrature(np.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-12)

    def test_complex(self):
        value = panel_quadrature(lambda t: np.exp(1j * t), 0.0, math.pi)
        assert abs(value - 2j) <= 1e-12

    def test_refines_oscillatory(self):
        value = panel_quadrature(lambda t: np.cos(40.0 * t), 0.0, 1.0, width=1.0)
        assert value == pytest.approx(math.sin(40.0) / 40.0, abs=1e-10)

    def test_budget(self):
        cfg = QuadratureConfig(max_subdivisions=1)
        with pytest.raises(NonConvergence):
            panel_quadrature(lambda t: np.sin(50.0 * t), 0.0, 100.0, cfg, width=100.0)

    def test_infinite_limit(self):
        with pytest.raises(ConfigInvalid):
            panel_quadrature(np.exp, 0.0, math.inf)


class TestPrincipalValue:
    """p.v. int u(t)/t dt folded onto the half line."""

    def test_odd_function(self):
        # (u(t) - u(-t)) / t = 2 exp(-t^2)
        value = pv_integral(lambda t: t * np.exp(-t * t))
        assert abs(value - math.sqrt(math.pi)) <= 1e-9

    def test_even_function_vanishes(self):
        value = pv_integral(lambda t: np.exp(-t * t))
        assert abs(value) <= 1e-12

    def test_shifted_gaussian(self):
        # p.v. int exp(-(t-1)^2)/t dt = sqrt(pi) * 2 D(1), D the Dawson function
        from scipy.special import dawsn
        value = pv_integral(lambda t: np.exp(-(t - 1.0) ** 2))
        assert abs(value - 2.0 * math.sqrt(math.pi) * dawsn(1.0)) <= 1e-9

    def test_window_too_wide(self):
        with pytest.raises(SingularitySpacing):
            pv_integral(lambda t: t * np.exp(-t * t), window=0.1)


class TestGaussianHelpers:

    def test_hermite_expectation(self):
        value = gauss_hermite_expectation(lambda x: x * x, mean=1.0, std=2.0)
        assert value == pytest.approx(5.0, rel=1e-12)

    def test_cutoff(self):
        radius = gaussian_cutoff(2.0, 1e-10, weight=3.0)
        assert 3.0 * math.exp(-radius ** 2 / 8.0) == pytest.approx(1e-11, rel=1e-9)
        assert gaussian_cutoff(1.0, 1.0, weight=0.01) == 0.0

    def test_normal(self):
        assert normal_cdf(0.0) == 0.5
        assert normal_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-12)
        assert normal_pdf(0.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi))


class TestFindRoot:

    def test_cosine(self):
        assert find_root(math.cos, 0.0, 2.0) == pytest.approx(0.5 * math.pi, abs=1e-12)

    def test_endpoint(self):
        assert find_root(lambda x: x, 0.0, 1.0) == 0.0

    def test_no_bracket(self):
        with pytest.raises(NoBracket):
            find_root(lambda x: x * x + 1.0, -1.0, 1.0)


class TestRngStream:
    """Seeded streams are reproducible and independent."""

    def test_reproducible(self):
        a = RngStream(7, 3).generator.random(5)
        b = RngStream(7, 3).generator.random(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(7, 3).generator.random(5)
        b = RngStream(7, 4).generator.random(5)
        c = RngStream(8, 3).generator.random(5)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_spawn(self):
        child = RngStream(7, 3).spawn(1)
        assert child.stream_id == (3, 1)
        assert child.fingerprint() == {'seed': 7, 'stream_id': [3, 1]}
        np.testing.assert_array_equal(child.generator.random(3),
                                      RngStream(7, (3, 1)).generator.random(3))

    def test_negative_stream(self):
        with pytest.raises(ConfigInvalid):
            RngStream(0, -1)


class TestSampleSphere:

    def test_unit_norm(self):
        points = sample_sphere(5, RngStream(1), 1000)
        assert points.shape == (1000, 5)
        np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0, atol=1e-12)

    def test_isotropic_second_moment(self):
        points = sample_sphere(4, RngStream(2), 200000)
        np.testing.assert_allclose(np.mean(points ** 2, axis=0), 0.25, atol=5e-3)

    def test_single(self):
        assert sample_sphere(3, RngStream(3)).shape == (3,)

    def test_bad_dimension(self):
        with pytest.raises(ConfigInvalid):
            sample_sphere(0, RngStream(0))


class TestMaximizeMultistart:
    """Projected ascent on the unit sphere."""

    c = np.array([1.0, 2.0, 2.0])

    @staticmethod
    def _project(p):
        return p / np.linalg.norm(p)

    def test_linear_on_sphere(self):
        cfg = SearchConfig(n_starts=4, max_iters=300)
        x, value = maximize_multistart(lambda p: float(p @ self.c), self._project, cfg,
                                       RngStream(5), lambda g: g.standard_normal(3))
        assert value == pytest.approx(3.0, abs=1e-6)
        np.testing.assert_allclose(x, self.c / 3.0, atol=2e-3)

    def test_forced_start(self):
        cfg = SearchConfig(n_starts=1, max_iters=0)
        x, value = maximize_multistart(lambda p: float(p @ self.c), self._project, cfg,
                                       RngStream(5), lambda g: -self.c, starts=[self.c])
        assert value == pytest.approx(3.0, abs=1e-12)
        np.testing.assert_allclose(x, self.c / 3.0)

    def test_deterministic(self):
        cfg = SearchConfig(n_starts=3, max_iters=20)

        def search():
            return maximize_multistart(lambda p: float(p @ self.c) ** 3, self._project, cfg,
                                       RngStream(9), lambda g: g.standard_normal(3))

        first, second = search(), search()
        assert first[1] == second[1]
        np.testing.assert_array_equal(first[0], second[0])

    def test_no_finite_value(self):
        cfg = SearchConfig(n_starts=3, max_iters=5)
        with pytest.raises(NonConvergence):
            maximize_multistart(lambda p: math.nan, self._project, cfg, RngStream(2),
                                lambda g: g.standard_normal(3))

    def test_skips_non_finite_start(self):
        cfg = SearchConfig(n_starts=1, max_iters=0)

        def objective(p):
            return math.inf if p[0] > 0.9 else float(p @ self.c)

        x, value = maximize_multistart(objective, self._project, cfg, RngStream(2),
                                       lambda g: np.array([2.0, 0.0, 0.0]),
                                       starts=[[1.0, 0.0, 0.0], self.c])
        assert value == pytest.approx(3.0, abs=1e-12)

