"""
Explicit analytic quantities: the contraction constant kappa, the noise
scales sigma_d of both constructions, the two-layer exponential upper bound,
the random-feature (RKHS) upper bound, principal-value and Gaussian tail
bounds, spherical caps and the three-layer lower-bound formula.
"""

import collections
import functools
import json
import math

import numpy as np
from scipy import special

from seplab import ConfigInvalid, BadPlateau, DegenerateTheta
from seplab import config
from seplab.numerics import find_root, integrate_adaptive
from seplab.networks import RELU

__all__ = ['BoundReport', 'kappa', 'kappa_critical_points', 'sigma_d_grid', 'sigma_d_sine',
           'grid_sigma_residual', 'sine_sigma_residual', 'u_sup_bounds', 'pv_bound',
           'gaussian_tail', 'two_layer_tail_bound', 'upper_bound_2l_explicit',
           'sphere_area', 'spherical_cap_area', 'sphere_moment', 'cap_expectation_bound',
           'rkhs_upper_bound_explicit', 'sec4_v_bounds', 'three_layer_lower_formula']

Kappa = collections.namedtuple('Kappa', ['value', 'maximizer'])
USup = collections.namedtuple('USup', ['b1', 'b2'])
TailBound = collections.namedtuple('TailBound', ['prob_bound', 'mean_bound'])
VBounds = collections.namedtuple('VBounds', ['v1', 'v2', 'v3', 'split', 'printed_split',
                                             'printed_v2'])


class BoundReport(object):
    """Analytic bound with its per-term breakdown and the inputs it was
    computed from. 'combination' names how 'total' follows from 'terms'.
    """

    __slots__ = ('total', 'terms', 'params', 'combination')

    def __init__(self, total, terms, params, combination='sum'):
        self.total = float(total)
        self.terms = collections.OrderedDict((k, float(v)) for k, v in terms.items())
        self.params = dict(params)
        self.combination = combination

    def to_json(self):
        return json.dumps({'total': self.total, 'terms': self.terms, 'params': self.params,
                           'combination': self.combination}, sort_keys=False)

    @staticmethod
    def from_json(text):
        doc = json.loads(text, object_pairs_hook=collections.OrderedDict)
        return BoundReport(doc['total'], doc['terms'], doc['params'], doc['combination'])

    def __eq__(self, other):
        return (isinstance(other, BoundReport) and self.total == other.total and
                self.terms == other.terms and self.params == other.params and
                self.combination == other.combination)

    def __repr__(self):
        return 'BoundReport(total=%r, terms=%r)' % (self.total, dict(self.terms))


def _h(x):
    return np.cos(x) * np.sin(2.0 * x)


@functools.lru_cache(maxsize=1)
def kappa_critical_points():
    """Critical points of h(x) = cos(x) sin(2x) in [-pi, pi]: one root of
    tan(x) = 2 cot(2x) in each open quarter period, plus +-pi/2.
    """
    eps = 1e-9

    def g(x):
        return math.tan(x) - 2.0 / math.tan(2.0 * x)

    points = [-0.5 * math.pi, 0.5 * math.pi]
    for z in range(-2, 2):
        lo, hi = 0.5 * math.pi * z + eps, 0.5 * math.pi * (z + 1) - eps
        points.append(find_root(g, lo, hi, tol=1e-15))
    return tuple(sorted(points))


@functools.lru_cache(maxsize=1)
def kappa():
    """max |cos(x) sin(2x)| and its maximizer in (0, pi/2).
    """
    points = kappa_critical_points()
    values = [abs(_h(x)) for x in points]
    value = max(values)
    maximizer = [x for x in points if 0 < x < 0.5 * math.pi][0]
    return Kappa(float(value), maximizer)


def _check_grid_params(d, eps, x0):
    if int(d) < 1:
        raise ConfigInvalid('d must be at least 1, got %r' % (d,))
    if not 0 < eps < 1:
        raise ConfigInvalid('eps must be in (0, 1), got %r' % (eps,))
    if not 0 < x0 < 0.25:
        raise BadPlateau('x0 must be in (0, 1/4), got %r' % (x0,))


def grid_sigma_residual(sigma, d, eps=config.DefaultEps, x0=config.DefaultX0):
    return x0 * x0 / (2.0 * sigma * sigma) - math.log(d * sigma / (math.sqrt(2.0 * math.pi) *
                                                                    eps * x0))


def sine_sigma_residual(sigma, d, x0=1.0):
    return x0 * x0 / (2.0 * sigma * sigma) - math.log(math.sqrt(2.0) * d * d * sigma /
                                                      (math.sqrt(math.pi) * x0))


def sigma_d_grid(d, eps=config.DefaultEps, x0=config.DefaultX0):
    """Noise scale of the parity-grid pair: the crossing of
    x0^2 / (2 sigma^2) = log(d sigma / (sqrt(2 pi) eps x0)).
    """
    _check_grid_params(d, eps, x0)
    return find_root(lambda s: grid_sigma_residual(s, d, eps, x0), 1e-8, 10.0, tol=1e-15)


def sigma_d_sine(d):
    """Noise scale of the sine pair (x0 = 1 in the log-balance equation).
    """
    if int(d) < 1:
        raise ConfigInvalid('d must be at least 1, got %r' % (d,))
    return find_root(lambda s: sine_sigma_residual(s, d), 1e-8, 10.0, tol=1e-15)


def _printed_u_bounds(d, sigma, b):
    k = kappa().value
    e = math.e
    se = math.sqrt(e)
    a = abs(b)
    re1 = (2.0 * sigma * sigma / e + 5.0 + b * b + 6.0 * d * sigma / (k * se) +
           4.0 * d * d / (k * k) + d * (d - 1) / (k * k) + 4.0 * d * (d - 1) / (k * k))
    im1 = 2.0 * a * sigma / se + 6.0 * d * a / k
    re2 = 2.0 / e + 2.0 * d * a / (sigma * k * se) + 2.0 * d / (sigma * k * se)
    im2 = a / (sigma * se)
    scale = k ** d
    return scale * math.hypot(re1, im1), scale * math.hypot(re2, im2)


def u_sup_bounds(d, sigma, b):
    """Bounds B1 >= sup|u'| and B2 >= sup|t u(t)| where u is the derivative of
    exp(-sigma^2 t^2 / 2 - i t b) prod cos(t theta_i / 2) sin(t theta_i).

    u(t) equals u*(t/2)/2 for the function u* with frequencies doubled,
    scale 2 sigma and offset 2 b, whose bounds are the appendix displays.
    """
    if not sigma > 0:
        raise ConfigInvalid('sigma must be positive, got %r' % (sigma,))
    b1, b2 = _printed_u_bounds(d, 2.0 * sigma, 2.0 * b)
    return USup(b1 / 4.0, b2)


def pv_bound(sup_uprime, sup_uxdelta, delta=1.0):
    if not delta > 0:
        raise ConfigInvalid('delta must be positive, got %r' % (delta,))
    if sup_uprime < 0 or sup_uxdelta < 0:
        raise ConfigInvalid('suprema must be non-negative')
    return 2.0 * (sup_uprime + sup_uxdelta / delta)


def gaussian_tail(x, sigma):
    """Upper bounds on P(X > x) and E[X; X > x] for X ~ N(0, sigma^2).
    """
    if not (x > 0 and sigma > 0):
        raise ConfigInvalid('gaussian_tail needs x > 0 and sigma > 0')
    decay = math.exp(-x * x / (2.0 * sigma * sigma))
    mean = sigma / math.sqrt(2.0 * math.pi) * decay
    return TailBound(mean / x, mean)


def two_layer_tail_bound(d, sigma):
    """Witness magnitude bound for biases beyond d + sqrt(d).
    """
    return gaussian_tail(float(d), sigma).mean_bound


def upper_bound_2l_explicit(d, sigma, b=None, act=RELU):
    """Two-layer witness bound for the parity-grid pair: max of the
    principal-value branch at |b| (default the worst case d + sqrt(d)) and
    the exterior tail branch.
    """
    act.require_linear()
    if b is None:
        b = d + math.sqrt(d)
    usup = u_sup_bounds(d, sigma, abs(b))
    pv = pv_bound(usup.b1, usup.b2, 1.0)
    interior = abs(act.a_const) * 2.0 / math.sqrt(2.0 * math.pi) * pv
    if d == 1:
        interior += 2.0 * abs(act.linear_part)
    tail = two_layer_tail_bound(d, sigma)
    terms = collections.OrderedDict([('interior', interior), ('tail', tail)])
    params = {'d': int(d), 'sigma': float(sigma), 'b': float(abs(b)),
              'u_prime_sup': usup.b1, 'u_t_sup': usup.b2}
    return BoundReport(max(interior, tail), terms, params, combination='max')


def sphere_area(d, r=1.0):
    return math.exp(math.log(2.0) + 0.5 * d * math.log(math.pi) - special.gammaln(0.5 * d)) * \
        r ** (d - 1)


def spherical_cap_area(d, r, angle, cfg=None):
    """Area of {x in r S^{d-1} : angle(x, e1) <= angle}.
    """
    if d < 2 or not 0 < angle <= 0.5 * math.pi or not r > 0:
        raise ConfigInvalid('spherical_cap_area needs d >= 2, 0 < angle <= pi/2, r > 0')
    const = math.exp(math.log(2.0) + 0.5 * (d - 1) * math.log(math.pi) -
                     special.gammaln(0.5 * (d - 1)))
    inner = integrate_adaptive(lambda t: math.sin(t) ** (d - 2), 0.0, angle, cfg)
    return const * r ** (d - 1) * inner


def sphere_moment(d, k):
    """E[theta_1^k] for theta uniform on S^{d-1}.
    """
    if k % 2:
        return 0.0
    return math.exp(special.gammaln(0.5 * d) + special.gammaln(0.5 * (k + 1)) -
                    0.5 * math.log(math.pi) - special.gammaln(0.5 * (d + k)))


def cap_expectation_bound(d, ell, sigma):
    """Bound on E[exp(-ell^2 (1 - theta_1^2) / sigma^2)] over the sphere.
    """
    if d == 1:
        return 1.0
    ratio = math.exp(special.gammaln(0.5 * d) - special.gammaln(0.5 * (d - 1)) -
                     0.5 * math.log(math.pi))
    return 0.5 * math.pi * ratio * (2.0 ** (-(d - 2) / 2.0) +
                                    math.exp(-ell * ell / (2.0 * sigma * sigma)))


def rkhs_upper_bound_explicit(spec, act=RELU):
    """Upper bound on the random-feature MMD of the sine pair.

    The witness is bounded by sqrt(2/pi)|A|(V1 + V2 + V3) + |c| |M1| (segment
    bounds of 'sec4_v_bounds', first-moment term M1); squaring costs a factor
    4 per term and each term is averaged over tau. Reported terms are
    2 sqrt(E[term^2]); total is their sum.
    """
    act.require_linear()
    d, sigma, ell = spec.d, spec.sigma, spec.ell
    pref = 2.0 / math.pi * abs(act.a_const) ** 2
    s2 = sigma * sigma
    e_cap = pref * 2.0 * math.pi * s2 * cap_expectation_bound(d, ell, sigma)
    e_small = pref * (math.e + 1.0 / math.e) ** 2 * math.exp(-ell * ell / s2)
    e_middle = pref * 4.0 * ell * ell / (s2 * s2) * sphere_moment(d, 2) * \
        math.exp(-max(ell - 1.0, 0.0) ** 2 / s2)
    e_moment = act.linear_part ** 2 * 4.0 * ell * ell / (s2 * s2) * sphere_moment(d, 2) * \
        math.exp(-ell * ell / s2)
    terms = collections.OrderedDict()
    for name, value in (('cap', e_cap), ('small_t', e_small), ('middle', e_middle),
                        ('first_moment', e_moment)):
        terms[name] = 2.0 * math.sqrt(value)
    params = {'d': int(d), 'sigma': float(sigma), 'ell': float(ell)}
    return BoundReport(sum(terms.values()), terms, params)


def sec4_v_bounds(spec, theta, b):
    """Bounds on the three pieces of int_0^inf v over [0, c], [c, 1], [1, inf)
    where c = sigma^2 / (ell |theta_1|) and v(t) = sin(t b) J(t) / t^2.

    printed_split = 2 sigma^2 / (ell |theta_1|) and printed_v2 =
    ell^2 theta_1^2 exp(-(ell - 1)^2 / (2 sigma^2)) / (4 sigma^4) are the
    published split and middle bound, kept for comparison only.
    """
    theta = np.asarray(theta, dtype=float)
    t1 = abs(float(theta[0]))
    if t1 == 0:
        raise DegenerateTheta('theta_1 = 0: v vanishes identically')
    sigma, ell = spec.sigma, spec.ell
    s2 = sigma * sigma
    split = s2 / (ell * t1)
    v1 = abs(b) * (math.e + 1.0 / math.e) * math.exp(-ell * ell / (2.0 * s2))
    if split < 1.0:
        v2 = 2.0 * ell * t1 / s2 * math.exp(-max(ell - 1.0, 0.0) ** 2 / (2.0 * s2))
    else:
        v2 = 0.0
    v3 = math.sqrt(2.0 * math.pi * s2) * math.exp(-ell * ell * (1.0 - t1 * t1) / (2.0 * s2))
    printed_v2 = (ell * t1) ** 2 / (4.0 * s2 * s2) * math.exp(-(ell - 1.0) ** 2 / (2.0 * s2))
    return VBounds(v1, v2, v3, min(split, 1.0), 2.0 * split, printed_v2)


def three_layer_lower_formula(d):
    if d < 2:
        raise ConfigInvalid('d must be at least 2, got %r' % (d,))
    return 1.0 / (513.0 * d * d + 512.0 * d + 1.0)
