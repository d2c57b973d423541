"""
Witness integrals W(theta, b) = int rho_d(x) sigma(<theta, x> - b) dx of a
single neuron against the signed difference of a distribution pair, their
maximisation over S^{d-1} x R, the Monte-Carlo three-layer gap and the
random-feature MMD.

Routes for the grid pair: exact enumeration of the 4^d Gaussian components
and the Fourier principal-value formula. Routes for the sine pair: the
one-dimensional Fourier integral and direct quadrature of the projected
density.
"""

import json
import math

import numpy as np

from seplab import logger, ConfigInvalid, DimensionTooLarge, ImaginaryResidual
from seplab import config
from seplab.numerics import (QuadratureConfig, RngStream, SearchConfig, integrate_adaptive,
                             panel_quadrature, pv_integral, gaussian_cutoff, normal_cdf,
                             normal_pdf, sample_sphere, maximize_multistart)
from seplab.distributions import GridPairSpec, SinePairSpec, grid_sample, sine_sample, \
    sine_projected_density
from seplab.networks import RELU, GRID_OFFSETS, GRID_SIGNS, build_F, grid_orientation, \
    eval_three_layer, path_norm_b
from seplab.bounds import two_layer_tail_bound, three_layer_lower_formula

__all__ = ['IpmEstimate', 'relu_gaussian_mean', 'grid_witness_exact', 'grid_witness_fourier',
           'grid_witness', 'grid_base_derivative', 'sine_witness', 'sine_witness_projected',
           'sine_v', 'witness_monte_carlo', 'two_layer_ipm_search', 'three_layer_gap',
           'three_layer_certificate', 'sec4_two_layer_lower', 'random_feature_mmd',
           'mmd_estimate', 'mmd_sample_crosscheck']

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class IpmEstimate(object):
    """Estimate of an integral probability metric (or of one witness value).

    'method' is one of IpmEstimate.Methods; 'std_error' is 0 for
    deterministic routes; 'argmax' is (theta, b) for searches.
    """

    __slots__ = ('value', 'std_error', 'method', 'n_samples', 'argmax', 'seed', 'details')

    Methods = ('enumeration', 'fourier_pv', 'monte_carlo', 'random_feature')

    def __init__(self, value, std_error, method, n_samples=0, argmax=None, seed=None,
                 details=None):
        if method not in IpmEstimate.Methods:
            raise ConfigInvalid('unknown estimate method %r' % (method,))
        if not math.isfinite(value):
            raise ConfigInvalid('estimate value must be finite, got %r' % (value,))
        if not std_error >= 0:
            raise ConfigInvalid('std_error must be non-negative, got %r' % (std_error,))
        self.value = float(value)
        self.std_error = float(std_error)
        self.method = method
        self.n_samples = int(n_samples)
        if argmax is not None:
            argmax = ([float(v) for v in argmax[0]], float(argmax[1]))
        self.argmax = argmax
        self.seed = seed
        self.details = dict(details or {})

    def to_json(self):
        argmax = None if self.argmax is None else {'theta': self.argmax[0], 'b': self.argmax[1]}
        return json.dumps({'value': self.value, 'std_error': self.std_error,
                           'method': self.method, 'n': self.n_samples, 'argmax': argmax,
                           'seed': self.seed, 'details': self.details})

    @staticmethod
    def from_json(text):
        doc = json.loads(text)
        argmax = doc.get('argmax')
        if argmax is not None:
            argmax = (argmax['theta'], argmax['b'])
        return IpmEstimate(doc['value'], doc['std_error'], doc['method'], doc['n'], argmax,
                           doc.get('seed'), doc.get('details'))

    def __repr__(self):
        return 'IpmEstimate(%s: %.6e +- %.2e)' % (self.method, self.value, self.std_error)


def _unit(theta, d):
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != d:
        raise ConfigInvalid('theta has %d entries, spec has d=%d' % (theta.size, d))
    if abs(np.linalg.norm(theta) - 1.0) > 1e-10:
        raise ConfigInvalid('theta must be a unit vector, norm is %r' % np.linalg.norm(theta))
    return theta


def relu_gaussian_mean(m, s, b):
    """E[max(Z - b, 0)] for Z ~ N(m, s^2).
    """
    if not np.all(np.asarray(s) > 0):
        raise ConfigInvalid('s must be positive')
    diff = np.asarray(m, dtype=float) - b
    z = diff / s
    out = diff * normal_cdf(z) + s * normal_pdf(z)
    return float(out) if np.ndim(out) == 0 else out


def _activation_gaussian_mean(act, m, s, b):
    relu = relu_gaussian_mean(m, s, b)
    return act.c_plus * relu + act.c_minus * (relu - (np.asarray(m) - b))


def grid_witness_exact(spec, theta, b, act=RELU):
    """Sum over the 4^d components, each weighted 2/4^d with its parity sign,
    of E[sigma(<theta, beta> + sigma Z - b)].
    """
    act.require_linear()
    d = spec.d
    if d > config.ExactWitnessMaxDim:
        raise DimensionTooLarge('exact witness needs d <= %d, got %d' %
                                (config.ExactWitnessMaxDim, d))
    theta = _unit(theta, d)
    proj = np.zeros(1)
    chi = np.ones(1)
    for t in theta:
        proj = (proj[:, None] + t * GRID_OFFSETS[None, :]).ravel()
        chi = (chi[:, None] * GRID_SIGNS[None, :]).ravel()
    means = _activation_gaussian_mean(act, proj, spec.sigma, b)
    return float(2.0 / 4.0 ** d * np.dot(chi, means))


def grid_base_derivative(theta, sigma, b):
    """Vectorised t -> d/dt [exp(-sigma^2 t^2 / 2 - i t b) prod cos(t theta_i / 2)
    sin(t theta_i)].
    """
    theta = np.asarray(theta, dtype=float)

    def derivative(t):
        t = np.asarray(t, dtype=float)
        arg = t[:, None] * theta[None, :]
        half_cos = np.cos(0.5 * arg)
        sin = np.sin(arg)
        h = half_cos * sin
        dh = theta * (-0.5 * np.sin(0.5 * arg) * sin + half_cos * np.cos(arg))
        ones = np.ones((t.size, 1))
        prefix = np.cumprod(np.hstack([ones, h[:, :-1]]), axis=1)
        suffix = np.cumprod(np.hstack([ones, h[:, :0:-1]]), axis=1)[:, ::-1]
        prod = np.prod(h, axis=1)
        dprod = np.sum(dh * prefix * suffix, axis=1)
        env = np.exp(-0.5 * sigma ** 2 * t * t - 1j * b * t)
        return env * ((-sigma ** 2 * t - 1j * b) * prod + dprod)

    return derivative


def _check_real(value, route):
    if abs(value.imag) > 1e-8 * (1.0 + abs(value.real)):
        raise ImaginaryResidual('%s: imaginary residual %.3e on value %.6e' %
                                (route, value.imag, value.real))
    return float(value.real)


def grid_witness_fourier(spec, theta, b, act=RELU, cfg=None):
    """Principal-value route: -A p.v.[1/t](u') + c M1, where u is the
    projected transform of rho_d shifted by b and M1 the first moment of
    <theta, x> under rho_d.
    """
    act.require_linear()
    if cfg is None:
        cfg = QuadratureConfig()
    d = spec.d
    theta = _unit(theta, d)
    sigma = spec.sigma
    base = grid_base_derivative(theta, sigma, b)
    pref = 2.0 / _SQRT_2PI * (1j ** d)

    def u_prime(t):
        return pref * base(t)

    freq = abs(b) + 1.5 * float(np.sum(np.abs(theta)))
    upper = gaussian_cutoff(1.0 / sigma, cfg.abs_tol, weight=1.0 + abs(b) + d)
    width = min(1.0, math.pi / (freq + 1.0))
    pv = pv_integral(u_prime, cfg, upper=max(upper, width), width=width)
    first_moment = 2.0 * theta[0] if d == 1 else 0.0
    value = -act.a_const * pv + act.linear_part * first_moment
    return _check_real(complex(value), 'grid fourier witness')


def grid_witness(spec, theta, b, act=RELU, cfg=None):
    if spec.d <= config.SearchExactMaxDim:
        return grid_witness_exact(spec, theta, b, act)
    return grid_witness_fourier(spec, theta, b, act, cfg)


def _one_minus_exp_ratio(x):
    # (1 - exp(-x)) / x
    small = x < 1e-4
    safe = np.where(small, 1.0, x)
    out = -np.expm1(-safe) / safe
    series = 1.0 - x / 2.0 + x * x / 6.0 - x ** 3 / 24.0
    return np.where(small, series, out)


def sine_v(spec, theta, b):
    """Vectorised v(t) = sin(t b) J(t) / t^2 with
    J(t) = exp(-|t theta - ell e1|^2 / 2 sigma^2) - exp(-|t theta + ell e1|^2 / 2 sigma^2),
    continuous at t = 0.
    """
    theta = np.asarray(theta, dtype=float)
    t1 = float(theta[0])
    sign = math.copysign(1.0, t1)
    a = abs(t1)
    sigma, ell = spec.sigma, spec.ell
    s2 = sigma * sigma
    decay = ell * ell * (1.0 - t1 * t1) / (2.0 * s2)
    k = 2.0 * ell * a / s2

    def v(t):
        t = np.asarray(t, dtype=float)
        if a == 0:
            return np.zeros_like(t)
        envelope = np.exp(-(t - ell * a) ** 2 / (2.0 * s2) - decay)
        return sign * b * np.sinc(b * t / math.pi) * envelope * k * _one_minus_exp_ratio(k * t)

    return v


def sine_witness(spec, theta, b, act=RELU, cfg=None):
    """-sqrt(2/pi) A int_0^inf v(t) dt + c M1 with v from 'sine_v' and
    M1 = (2 ell theta_1 / sigma^2) exp(-ell^2 / (2 sigma^2)).
    """
    act.require_linear()
    if cfg is None:
        cfg = QuadratureConfig()
    theta = _unit(theta, spec.d)
    t1 = float(theta[0])
    if t1 == 0:
        return 0.0
    sigma, ell = spec.sigma, spec.ell
    centre = ell * abs(t1)
    upper = centre + gaussian_cutoff(sigma, cfg.abs_tol, weight=1.0 + abs(b) + centre / sigma ** 2)
    width = min(0.5 * sigma, math.pi / (abs(b) + 1.0))
    integral = panel_quadrature(sine_v(spec, theta, b), 0.0, upper, cfg, width=width)
    first_moment = 2.0 * ell * t1 / sigma ** 2 * math.exp(-ell * ell / (2.0 * sigma ** 2))
    value = -math.sqrt(2.0 / math.pi) * act.a_const * integral + act.linear_part * first_moment
    return _check_real(complex(value), 'sine witness')


def sine_witness_projected(spec, theta, b, act=RELU, cfg=None):
    """int q(s) sigma(s - b) ds with q the projected density of rho_d.
    """
    act.require_linear()
    if cfg is None:
        cfg = QuadratureConfig()
    theta = _unit(theta, spec.d)
    reach = abs(b) + gaussian_cutoff(1.0 / spec.sigma, cfg.abs_tol, weight=1.0 + abs(b))

    def integrand(s):
        return float(sine_projected_density(spec, theta, s) * act(s - b))

    return integrate_adaptive(integrand, -reach, reach, cfg, points=[b])


def witness_monte_carlo(spec, theta, b, act=RELU, n=config.DefaultMcSamples, rng=None):
    """E_mu sigma(<theta, x> - b) - E_nu sigma(<theta, x> - b) by sampling.
    """
    if rng is None:
        rng = RngStream()
    theta = np.asarray(theta, dtype=float)
    sampler = grid_sample if isinstance(spec, GridPairSpec) else sine_sample
    plus = act(sampler(spec, 'plus', n, rng).points @ theta - b)
    minus = act(sampler(spec, 'minus', n, rng).points @ theta - b)
    se = math.sqrt(plus.var(ddof=1) / n + minus.var(ddof=1) / n)
    return IpmEstimate(plus.mean() - minus.mean(), se, 'monte_carlo', 2 * n,
                       (theta, b), rng.seed)


def _witness_route(spec, act, cfg):
    if isinstance(spec, GridPairSpec):
        return lambda theta, b: grid_witness(spec, theta, b, act, cfg)
    if isinstance(spec, SinePairSpec):
        return lambda theta, b: sine_witness(spec, theta, b, act, cfg)
    raise ConfigInvalid('unknown distribution pair %r' % (spec,))


def two_layer_ipm_search(spec, act=RELU, search=None, rng=None, cfg=None, starts=()):
    """sup |W(theta, b)| over S^{d-1} x [-(d + sqrt d), d + sqrt d] by multistart
    projected ascent. The analytic bound beyond the bias box is reported in
    details['tail_bound'] for the grid pair.
    """
    if search is None:
        search = SearchConfig()
    if rng is None:
        rng = RngStream()
    d = spec.d
    b_max = d + math.sqrt(d)
    witness = _witness_route(spec, act, cfg)

    def projector(p):
        p = np.array(p, dtype=float)
        norm = np.linalg.norm(p[:d])
        if norm > 0:
            p[:d] /= norm
        else:
            p[:d] = 0.0
            p[0] = 1.0
        p[d] = min(max(p[d], -b_max), b_max)
        return p

    def objective(p):
        return abs(witness(p[:d], p[d]))

    def sampler(g):
        theta = g.standard_normal(d)
        return np.append(theta, g.uniform(-b_max, b_max))

    forced = [np.asarray(s, dtype=float) for s in starts]
    diagonal = np.ones(d) / math.sqrt(d)
    if isinstance(spec, GridPairSpec):
        for theta in (diagonal, -diagonal):
            for b in (-0.5 * b_max, 0.0, 0.5 * b_max):
                forced.append(np.append(theta, b))
        method = 'enumeration' if d <= config.SearchExactMaxDim else 'fourier_pv'
        tail = two_layer_tail_bound(d, spec.sigma)
    else:
        e1 = np.zeros(d)
        e1[0] = 1.0
        forced.append(np.append(e1, math.pi / (2.0 * spec.ell)))
        forced.append(np.append(diagonal, 0.0))
        method = 'fourier_pv'
        tail = None
    best, value = maximize_multistart(objective, projector, search, rng, sampler, forced)
    logger.debug('two-layer search d=%d: %.6e at b=%.4f', d, value, best[d])
    details = {'b_max': b_max, 'tail_bound': tail, 'starts': len(forced) + search.n_starts}
    return IpmEstimate(value, 0.0, method, 0, (best[:d], best[d]), rng.seed, details)


def _batch_eval(net, points, chunk=20000):
    return np.concatenate([eval_three_layer(net, RELU, points[i:i + chunk])
                           for i in range(0, points.shape[0], chunk)])


def three_layer_gap(spec, n=config.DefaultMcSamples, rng=None, net=None):
    """Monte-Carlo estimate of s_d (E F(Z+) - E F(Z-)) with F = build_F(spec),
    oriented so the expected value is positive.
    """
    if int(n) < config.MinMcSamples:
        raise ConfigInvalid('three-layer gap needs n >= %d, got %r' % (config.MinMcSamples, n))
    if rng is None:
        rng = RngStream()
    if net is None:
        net = build_F(spec)
    plus = _batch_eval(net, grid_sample(spec, 'plus', n, rng).points)
    minus = _batch_eval(net, grid_sample(spec, 'minus', n, rng).points)
    orientation = grid_orientation(spec.d)
    value = orientation * (plus.mean() - minus.mean())
    se = math.sqrt(plus.var(ddof=1) / n + minus.var(ddof=1) / n)
    details = {'mean_plus': float(plus.mean()), 'mean_minus': float(minus.mean()),
               'orientation': orientation}
    return IpmEstimate(value, se, 'monte_carlo', 2 * n, None, rng.seed, details)


def three_layer_certificate(spec, n=config.DefaultMcSamples, rng=None, estimate=None):
    """(lower confidence bound of the gap) / PN_b(F) against
    1 / (513 d^2 + 512 d + 1). Returns (lower_bound, passes).
    """
    if spec.eps != 0.125 or spec.x0 != 0.125:
        logger.warning('certificate formula assumes eps = x0 = 1/8, got eps=%s, x0=%s',
                       spec.eps, spec.x0)
    net = build_F(spec)
    if estimate is None:
        estimate = three_layer_gap(spec, n, rng, net)
    lower = (estimate.value - config.PassRadius * estimate.std_error) / path_norm_b(net)
    return lower, bool(lower >= three_layer_lower_formula(spec.d))


def sec4_two_layer_lower(spec, act=RELU, cfg=None):
    """|W(e1, pi / (2 ell))| for the sine pair.
    """
    if spec.d < 4:
        logger.warning('lower-bound point is meant for d >= 4, got d=%d', spec.d)
    e1 = np.zeros(spec.d)
    e1[0] = 1.0
    return abs(sine_witness(spec, e1, math.pi / (2.0 * spec.ell), act, cfg))


def random_feature_mmd(plus_points, minus_points, thetas, biases, act=RELU):
    """Per-feature mean differences D_j and their sampling variances.
    """
    diffs = np.empty(len(biases))
    variances = np.empty(len(biases))
    n_plus, n_minus = plus_points.shape[0], minus_points.shape[0]
    for j, (theta, b) in enumerate(zip(thetas, biases)):
        fp = act(plus_points @ theta - b)
        fm = act(minus_points @ theta - b)
        diffs[j] = fp.mean() - fm.mean()
        variances[j] = fp.var(ddof=1) / n_plus + fm.var(ddof=1) / n_minus
    return diffs, variances


def _features(spec, m_features, rng):
    thetas = sample_sphere(spec.d, rng, m_features)
    biases = rng.generator.standard_normal(m_features)
    return thetas, biases


def mmd_estimate(spec, act=RELU, m_features=config.DefaultFeatures, rng=None, cfg=None,
                 witness=None):
    """sqrt(E_tau W(theta, b)^2), tau = Unif(S^{d-1}) x N(0, 1), averaged over
    'm_features' draws of the deterministic witness. 'witness(theta, b)'
    overrides the route of the pair.
    """
    if int(m_features) < config.MinFeatures:
        raise ConfigInvalid('mmd needs at least %d features, got %r' %
                            (config.MinFeatures, m_features))
    if rng is None:
        rng = RngStream()
    if witness is None:
        witness = _witness_route(spec, act, cfg)
    thetas, biases = _features(spec, m_features, rng)
    squares = np.array([witness(theta, b) ** 2 for theta, b in zip(thetas, biases)])
    mean_square = float(squares.mean())
    square_se = float(squares.std(ddof=1) / math.sqrt(m_features))
    value = math.sqrt(mean_square)
    se = square_se / (2.0 * value) if value > 0 else 0.0
    details = {'mean_square': mean_square, 'mean_square_se': square_se}
    return IpmEstimate(value, se, 'random_feature', m_features, None, rng.seed, details)


def mmd_sample_crosscheck(spec, act=RELU, m_features=config.DefaultFeatures,
                          n_samples=10000, rng=None, plus=None, minus=None):
    """Random-feature MMD from samples, sqrt(mean_j D_j^2) with D_j the mean
    difference of feature j between the two batches. Features are drawn
    first, in the same order as 'mmd_estimate', so both see the same
    (theta_j, b_j). details['debiased_mean_square'] subtracts the sampling
    variance of each D_j^2 and is the quantity comparable with
    'mmd_estimate'.
    """
    if int(n_samples) < config.MinMcSamples:
        raise ConfigInvalid('crosscheck needs n_samples >= %d, got %r' %
                            (config.MinMcSamples, n_samples))
    if rng is None:
        rng = RngStream()
    thetas, biases = _features(spec, m_features, rng)
    sampler = grid_sample if isinstance(spec, GridPairSpec) else sine_sample
    if plus is None:
        plus = sampler(spec, 'plus', n_samples, rng)
    if minus is None:
        minus = sampler(spec, 'minus', n_samples, rng)
    diffs, variances = random_feature_mmd(plus.points, minus.points, thetas, biases, act)
    squares = diffs ** 2
    mean_square = float(squares.mean())
    debiased = float((squares - variances).mean())
    square_se = float(squares.std(ddof=1) / math.sqrt(m_features))
    noise_se = float(math.sqrt(np.sum(4.0 * squares * variances)) / m_features)
    value = math.sqrt(mean_square)
    se = square_se / (2.0 * value) if value > 0 else 0.0
    details = {'mean_square': mean_square, 'mean_square_se': square_se,
               'debiased_mean_square': debiased, 'sample_noise_se': noise_se}
    return IpmEstimate(value, se, 'random_feature', len(plus) + len(minus), None, rng.seed,
                       details)
