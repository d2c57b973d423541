"""
Numerical kernels shared by every seplab module: adaptive and panel
quadrature, Cauchy principal values, root finding, Gaussian special
functions, seeded random streams, sphere sampling and multistart
maximization.
"""

import collections
import math

import numpy as np
from scipy import integrate, optimize, special

from seplab import logger, NonConvergence, NoBracket, SingularitySpacing, ConfigInvalid
from seplab import config

__all__ = ['QuadratureConfig', 'SearchConfig', 'RngStream', 'integrate_adaptive',
           'panel_quadrature', 'gauss_hermite_expectation', 'gaussian_cutoff', 'find_root',
           'normal_cdf', 'normal_pdf', 'pv_integral', 'sample_sphere', 'maximize_multistart']

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class QuadratureConfig(collections.namedtuple('QuadratureConfig', ['abs_tol', 'rel_tol',
                                                                   'max_subdivisions',
                                                                   'tail_cutoff'])):
    """Tolerances for quadrature. 'tail_cutoff' is the truncation radius used
    for improper integrals; 'max_subdivisions' caps both QUADPACK
    subintervals and Gauss-Legendre panels.
    """

    __slots__ = ()

    def __new__(cls, abs_tol=config.AbsTol, rel_tol=config.RelTol,
                max_subdivisions=config.MaxSubdivisions, tail_cutoff=config.TailCutoff):
        if not abs_tol > 0:
            raise ConfigInvalid('abs_tol must be positive, got %r' % (abs_tol,))
        if not rel_tol > 0:
            raise ConfigInvalid('rel_tol must be positive, got %r' % (rel_tol,))
        if int(max_subdivisions) < 1:
            raise ConfigInvalid('max_subdivisions must be at least 1, got %r' %
                                (max_subdivisions,))
        if not tail_cutoff > 0:
            raise ConfigInvalid('tail_cutoff must be positive, got %r' % (tail_cutoff,))
        return super(QuadratureConfig, cls).__new__(cls, float(abs_tol), float(rel_tol),
                                                    int(max_subdivisions), float(tail_cutoff))


class SearchConfig(collections.namedtuple('SearchConfig', ['n_starts', 'max_iters', 'step_init',
                                                           'grad_tol', 'fd_step'])):
    """Budget of the multistart projected ascent.
    """

    __slots__ = ()

    def __new__(cls, n_starts=config.SearchStarts, max_iters=config.SearchIters,
                step_init=config.SearchStep, grad_tol=config.SearchGradTol,
                fd_step=config.SearchFdStep):
        if int(n_starts) < 1:
            raise ConfigInvalid('n_starts must be at least 1, got %r' % (n_starts,))
        if int(max_iters) < 0:
            raise ConfigInvalid('max_iters must be non-negative, got %r' % (max_iters,))
        if not step_init > 0:
            raise ConfigInvalid('step_init must be positive, got %r' % (step_init,))
        if not fd_step > 0:
            raise ConfigInvalid('fd_step must be positive, got %r' % (fd_step,))
        return super(SearchConfig, cls).__new__(cls, int(n_starts), int(max_iters),
                                                float(step_init), float(grad_tol),
                                                float(fd_step))


class RngStream(object):
    """Seeded random stream. Streams with equal (seed, stream_id) produce
    identical sequences; different stream ids are independent (distinct
    SeedSequence spawn keys).

    'stream_id' is an integer or a tuple of integers; 'spawn' appends to it.
    The underlying numpy Generator is available as 'generator' and is
    advanced by every sampling operation, so a stream must not be shared
    between concurrent samplers.
    """

    __slots__ = ('seed', 'stream_id', 'generator')

    def __init__(self, seed=config.DefaultSeed, stream_id=0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        if isinstance(stream_id, (tuple, list)):
            stream_id = tuple(int(i) for i in stream_id)
        else:
            stream_id = (int(stream_id),)
        if any(i < 0 for i in stream_id):
            raise ConfigInvalid('stream_id must be non-negative, got %r' % (stream_id,))
        self.stream_id = stream_id
        seq = np.random.SeedSequence(self.seed, spawn_key=stream_id)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def spawn(self, k):
        return RngStream(self.seed, self.stream_id + (int(k),))

    def fingerprint(self):
        return {'seed': self.seed, 'stream_id': list(self.stream_id)}

    def __repr__(self):
        return 'RngStream(seed=%d, stream_id=%r)' % (self.seed, self.stream_id)


def integrate_adaptive(f, a, b, cfg=None, points=None):
    """Integrate scalar function 'f' over [a, b] with QUADPACK.

    Infinite limits are truncated at 'cfg.tail_cutoff' (measured from the
    finite end, or from 0 for the whole line); the integrand at the cut is
    checked and a warning is logged when it is not negligible.
    """
    if cfg is None:
        cfg = QuadratureConfig()
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b = b, a
        sign = -1.0
    lo, hi = float(a), float(b)
    truncated = []
    if math.isinf(lo) and math.isinf(hi):
        lo, hi = -cfg.tail_cutoff, cfg.tail_cutoff
        truncated = [lo, hi]
    elif math.isinf(hi):
        hi = lo + cfg.tail_cutoff
        truncated = [hi]
    elif math.isinf(lo):
        lo = hi - cfg.tail_cutoff
        truncated = [lo]
    for x in truncated:
        tail = abs(f(x))
        if tail > cfg.abs_tol:
            logger.warning('integrand is %.3e at truncation point %s', tail, x)
    if points is not None:
        points = [p for p in points if lo < p < hi]
        if not points:
            points = None
    out = integrate.quad(f, lo, hi, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
                         limit=cfg.max_subdivisions, points=points, full_output=1)
    value, abserr = out[0], out[1]
    if len(out) > 3:
        # roundoff warnings at tight tolerances are harmless when the error
        # estimate is still small
        if abserr > 100.0 * max(cfg.abs_tol, cfg.rel_tol * abs(value)):
            raise NonConvergence('quadrature on [%s, %s] stopped at error %.3e: %s' %
                                 (lo, hi, abserr, out[3]))
        logger.debug('quad on [%s, %s]: %s (error %.3e)', lo, hi, out[3], abserr)
    return sign * value


def _legendre_rule(order):
    return np.polynomial.legendre.leggauss(order)


def panel_quadrature(f, a, b, cfg=None, width=1.0, order=config.PanelOrder):
    """Composite Gauss-Legendre rule for a vectorised integrand over a finite
    interval. Each panel is integrated with 'order' and order/2 nodes; panels
    are halved until the two estimates agree to tolerance.

    Returns a complex number if 'f' returns complex values.
    """
    if cfg is None:
        cfg = QuadratureConfig()
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ConfigInvalid('panel quadrature needs finite limits, got [%s, %s]' % (a, b))
    if a == b:
        return 0.0
    nodes_hi, weights_hi = _legendre_rule(order)
    nodes_lo, weights_lo = _legendre_rule(max(2, order // 2))
    n_panels = max(1, int(math.ceil(abs(b - a) / width)))

    def composite(nodes, weights, edges):
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        t = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        vals = np.asarray(f(t)).reshape(len(half), len(nodes))
        return np.sum((vals @ weights) * half)

    while True:
        if n_panels > cfg.max_subdivisions:
            raise NonConvergence('panel quadrature on [%s, %s] needs more than %d panels' %
                                 (a, b, cfg.max_subdivisions))
        edges = np.linspace(a, b, n_panels + 1)
        fine = composite(nodes_hi, weights_hi, edges)
        coarse = composite(nodes_lo, weights_lo, edges)
        if abs(fine - coarse) <= cfg.abs_tol + cfg.rel_tol * abs(fine):
            return fine
        n_panels *= 2


def gauss_hermite_expectation(f, mean=0.0, std=1.0, order=config.GaussHermiteOrder):
    """E[f(mean + std*Z)] for standard normal Z (vectorised 'f').
    """
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    return np.sum(weights * f(mean + std * nodes)) / _SQRT_2PI


def gaussian_cutoff(scale, tol, weight=1.0):
    """Radius T with weight * exp(-T^2 / (2 scale^2)) <= tol / 10.
    """
    ratio = 10.0 * weight / tol
    if ratio <= 1.0:
        return 0.0
    return scale * math.sqrt(2.0 * math.log(ratio))


def find_root(f, lo, hi, tol=1e-12):
    """Root of 'f' in the bracket [lo, hi] (Brent's method).
    """
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if not (f_lo * f_hi < 0):
        raise NoBracket('no sign change on [%s, %s]: f(lo)=%s, f(hi)=%s' % (lo, hi, f_lo, f_hi))
    return optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)


def normal_cdf(x):
    return special.ndtr(x)


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def pv_integral(u, cfg=None, upper=None, width=1.0, order=config.PanelOrder,
                window=config.SingularWindow):
    """Cauchy principal value p.v.[1/t](u) = int_0^inf (u(t) - u(-t)) / t dt.

    'u' is vectorised (complex allowed) and must decay before 'upper'
    (default 'cfg.tail_cutoff'). Inside |t| < window the quotient is replaced
    by its limit 2u'(0), taken as a central difference.
    """
    if cfg is None:
        cfg = QuadratureConfig()
    if upper is None:
        upper = cfg.tail_cutoff
    nodes, _ = _legendre_rule(order)
    first_node = 0.5 * min(width, upper) * (1.0 + nodes[0])
    if window >= first_node:
        raise SingularitySpacing('singular window %g reaches first node %g' %
                                 (window, first_node))
    limit = (u(np.array([window]))[0] - u(np.array([-window]))[0]) / window

    def quotient(t):
        near = t < window
        safe = np.where(near, 1.0, t)
        out = (u(t) - u(-t)) / safe
        if np.any(near):
            out = np.where(near, limit, out)
        return out

    return complex(panel_quadrature(quotient, 0.0, upper, cfg, width=width, order=order))


def sample_sphere(d, rng, n=None):
    """Uniform point(s) on the unit sphere S^{d-1} (normalised Gaussians).
    Returns shape (d,) or (n, d).
    """
    if d < 1:
        raise ConfigInvalid('dimension must be positive, got %r' % (d,))
    shape = (d,) if n is None else (int(n), d)
    while True:
        z = rng.generator.standard_normal(shape)
        norms = np.linalg.norm(z, axis=-1, keepdims=True)
        if np.all(norms > 0):
            return z / norms


def _fd_gradient(f, x, h):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def _ascend(objective, projector, x, cfg):
    def composed(p):
        return objective(projector(p))

    x = projector(x)
    value = objective(x)
    step = cfg.step_init
    for _ in range(cfg.max_iters):
        grad = _fd_gradient(composed, x, cfg.fd_step)
        norm = np.linalg.norm(grad)
        if not np.isfinite(norm) or norm <= cfg.grad_tol:
            break
        direction = grad / norm
        while step > 1e-14:
            candidate = projector(x + step * direction)
            cand_value = objective(candidate)
            if cand_value > value:
                break
            step *= 0.5
        else:
            break
        x, value = candidate, cand_value
        step = min(2.0 * step, cfg.step_init)
    return x, value


def maximize_multistart(objective, projector, cfg, rng, sampler, starts=()):
    """Maximize 'objective' over the feasible set defined by 'projector' with
    random restarts and projected finite-difference gradient ascent.

    'sampler(generator)' draws a random start; 'starts' are forced start
    points tried first. Returns (argmax, value); ties keep the first found.
    Non-finite values are skipped; NonConvergence if no start gives a
    finite value.
    """
    if cfg is None:
        cfg = SearchConfig()
    points = [np.asarray(s, dtype=float) for s in starts]
    points.extend(np.asarray(sampler(rng.generator), dtype=float) for _ in range(cfg.n_starts))
    best_x, best_value = None, -np.inf
    for i, start in enumerate(points):
        x, value = _ascend(objective, projector, start, cfg)
        logger.debug('start %d: value %.6e', i, value)
        if np.isfinite(value) and value > best_value:
            best_x, best_value = x, value
    if best_x is None:
        raise NonConvergence('multistart search found no finite value over %d starts' %
                             len(points))
    return best_x, float(best_value)
