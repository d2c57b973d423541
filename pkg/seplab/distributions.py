"""
The two distribution pairs: the parity-grid Gaussian mixture (mu_d, nu_d
with signed density rho_d = rho_d^+ - rho_d^-) and the sine-modulated
Gaussian. Densities, samplers, masses, moments and closed-form Fourier
transforms.
"""

import collections
import csv
import functools
import itertools
import json
import math
import struct

import numpy as np

from seplab import logger, ConfigInvalid, BadPlateau, DimensionTooLarge, DimensionMismatch, \
    RejectionStall, IoFailure
from seplab import config
from seplab.numerics import integrate_adaptive, normal_cdf, QuadratureConfig
from seplab.networks import GRID_OFFSETS, GRID_SIGNS

__all__ = ['GridPairSpec', 'SinePairSpec', 'SignedDensityValue', 'SampleBatch',
           'grid_signed_density', 'grid_pair_density', 'grid_fourier', 'grid_fourier_quadrature',
           'grid_sample', 'grid_moment_checks', 'grid_plateau_probability',
           'sine_signed_density', 'sine_abs_mass', 'sine_sample', 'sine_fourier',
           'sine_projected_density']

_LOG_2PI = math.log(2.0 * math.pi)

SignedDensityValue = collections.namedtuple('SignedDensityValue',
                                            ['value', 'positive_part', 'negative_part'])
MomentReport = collections.namedtuple('MomentReport', ['mass', 'first_moment', 'positive_mass',
                                                       'negative_mass', 'passes'])
PlateauProbability = collections.namedtuple('PlateauProbability', ['exact', 'bound'])


class GridPairSpec(collections.namedtuple('GridPairSpec', ['d', 'sigma', 'x0', 'eps'])):
    """Parity-grid pair: centres B^d with B = {-3/2, -1/2, 1/2, 3/2}, noise
    N(0, sigma^2 I), plateau half-width x0 and failure probability eps.
    """

    __slots__ = ()

    def __new__(cls, d, sigma, x0=config.DefaultX0, eps=config.DefaultEps):
        if int(d) != d or d < 1:
            raise ConfigInvalid('d must be a positive integer, got %r' % (d,))
        if not sigma > 0:
            raise ConfigInvalid('sigma must be positive, got %r' % (sigma,))
        if not 0 < x0 < 0.25:
            raise BadPlateau('x0 must be in (0, 1/4), got %r' % (x0,))
        if not 0 < eps < 1:
            raise ConfigInvalid('eps must be in (0, 1), got %r' % (eps,))
        return super(GridPairSpec, cls).__new__(cls, int(d), float(sigma), float(x0), float(eps))

    @classmethod
    def at_sigma_d(cls, d, eps=config.DefaultEps, x0=config.DefaultX0):
        from seplab.bounds import sigma_d_grid
        return cls(d, sigma_d_grid(d, eps, x0), x0, eps)


class SinePairSpec(collections.namedtuple('SinePairSpec', ['d', 'sigma', 'ell', 'ref_density'])):
    """Sine pair: rho_d(x) = 2 sigma^d (2 pi)^{-d/2} exp(-sigma^2 |x|^2 / 2)
    sin(ell x_1). Coordinates of the Gaussian factor have variance 1/sigma^2.
    """

    __slots__ = ()

    def __new__(cls, d, sigma, ell, ref_density='standard_gaussian'):
        if int(d) != d or d < 1:
            raise ConfigInvalid('d must be a positive integer, got %r' % (d,))
        if not sigma > 0:
            raise ConfigInvalid('sigma must be positive, got %r' % (sigma,))
        if not ell > 0:
            raise ConfigInvalid('ell must be positive, got %r' % (ell,))
        if ref_density != 'standard_gaussian':
            raise ConfigInvalid('unsupported reference density %r' % (ref_density,))
        return super(SinePairSpec, cls).__new__(cls, int(d), float(sigma), float(ell),
                                                ref_density)

    @classmethod
    def at_sigma_d(cls, d):
        """ell = sqrt(d), sigma = sigma_d of the sine construction.
        """
        from seplab.bounds import sigma_d_sine
        return cls(d, sigma_d_sine(d), math.sqrt(d))


class SampleBatch(object):
    """Points drawn from mu_d ('plus') or nu_d ('minus') with the stream
    fingerprint they were drawn from.
    """

    __slots__ = ('points', 'label', 'fingerprint')

    Magic = b'SEPLAB01'
    Labels = ('plus', 'minus')
    _header = struct.Struct('<QQBI')

    def __init__(self, points, label, fingerprint=None):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2:
            raise DimensionMismatch('points must have shape (n, d), got %s' % (points.shape,))
        if label not in SampleBatch.Labels:
            raise ConfigInvalid('label must be plus or minus, got %r' % (label,))
        if not np.all(np.isfinite(points)):
            raise ConfigInvalid('sample batch contains non-finite points')
        self.points = points
        self.label = label
        self.fingerprint = dict(fingerprint or {})

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def to_csv(self, path):
        try:
            with open(path, 'w', newline='') as fd:
                writer = csv.writer(fd, lineterminator='\n')
                writer.writerow(['x%d' % (i + 1) for i in range(self.dim)] + ['label'])
                for row in self.points:
                    writer.writerow([repr(float(v)) for v in row] + [self.label])
        except (IOError, OSError) as exc:
            raise IoFailure('could not write %s: %s' % (path, exc))

    @staticmethod
    def from_csv(path):
        try:
            with open(path, newline='') as fd:
                rows = list(csv.reader(fd))
        except (IOError, OSError) as exc:
            raise IoFailure('could not read %s: %s' % (path, exc))
        if not rows or rows[0][-1] != 'label':
            raise IoFailure('%s is not a sample batch' % path)
        labels = set(row[-1] for row in rows[1:])
        if len(labels) != 1:
            raise IoFailure('%s mixes labels %s' % (path, sorted(labels)))
        points = np.array([[float(v) for v in row[:-1]] for row in rows[1:]])
        return SampleBatch(points, labels.pop())

    def to_bytes(self):
        meta = json.dumps(self.fingerprint, sort_keys=True).encode()
        n, d = self.points.shape
        return (SampleBatch.Magic +
                SampleBatch._header.pack(n, d, SampleBatch.Labels.index(self.label), len(meta)) +
                meta + self.points.astype('<f8').tobytes())

    @staticmethod
    def from_bytes(data):
        magic = SampleBatch.Magic
        if data[:len(magic)] != magic:
            raise IoFailure('bad magic %r' % (data[:len(magic)],))
        offset = len(magic)
        try:
            n, d, label, meta_len = SampleBatch._header.unpack_from(data, offset)
        except struct.error as exc:
            raise IoFailure('truncated header: %s' % exc)
        offset += SampleBatch._header.size
        meta = json.loads(data[offset:offset + meta_len].decode())
        offset += meta_len
        if len(data) - offset != 8 * n * d:
            raise IoFailure('expected %d bytes of points, got %d' % (8 * n * d, len(data) - offset))
        points = np.frombuffer(data, dtype='<f8', offset=offset).reshape(n, d)
        return SampleBatch(points.astype(float), SampleBatch.Labels[label], meta)


def _points(x, d):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise DimensionMismatch('point dimension %d, spec has d=%d' % (x.shape[-1], d))
    return x


def _grid_factors(spec, x):
    # per-coordinate unsigned and signed four-Gaussian sums, shape (..., d)
    z = (x[..., None] - GRID_OFFSETS) / spec.sigma
    phi = np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * spec.sigma)
    return 0.25 * phi.sum(axis=-1), 0.25 * (phi * GRID_SIGNS).sum(axis=-1)


def _grid_enumerated(spec, point):
    # direct sum over all 4^d components, inner block vectorised
    d = spec.d
    z = (point[:, None] - GRID_OFFSETS) / spec.sigma
    signed = GRID_SIGNS * np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * spec.sigma)
    inner_dims = min(d, 8)
    inner = np.ones(1)
    for i in range(d - inner_dims, d):
        inner = (inner[:, None] * signed[i][None, :]).ravel()
    total = 0.0
    for outer in itertools.product(range(4), repeat=d - inner_dims):
        coef = 1.0
        for i, k in enumerate(outer):
            coef *= signed[i][k]
        total += coef * inner.sum()
    return 2.0 * total / 4.0 ** d


def grid_signed_density(spec, x, mode='factorized'):
    """rho_d(x) = 2 prod_i S(x_i) with S the signed four-Gaussian sum.

    mode='enumeration' sums the 4^d mixture components directly (d <= 15).
    """
    x = _points(x, spec.d)
    if mode == 'factorized':
        _, signed = _grid_factors(spec, x)
        value = 2.0 * np.prod(signed, axis=-1)
    elif mode == 'enumeration':
        if spec.d > config.EnumerationMaxDim:
            raise DimensionTooLarge('enumeration needs d <= %d, got %d' %
                                    (config.EnumerationMaxDim, spec.d))
        flat = x.reshape(-1, spec.d)
        value = np.array([_grid_enumerated(spec, p) for p in flat]).reshape(x.shape[:-1])
    else:
        raise ConfigInvalid('unknown density mode %r' % (mode,))
    if value.ndim == 0:
        value = float(value)
    return SignedDensityValue(value, np.maximum(value, 0.0), np.maximum(-value, 0.0))


def grid_pair_density(spec, x):
    """Normalised densities of mu_d and nu_d: prod P +- prod S.
    """
    x = _points(x, spec.d)
    unsigned, signed = _grid_factors(spec, x)
    p = np.prod(unsigned, axis=-1)
    s = np.prod(signed, axis=-1)
    if p.ndim == 0:
        p, s = float(p), float(s)
    return SignedDensityValue(2.0 * s, p + s, p - s)


def grid_fourier(spec, w):
    """Unitary Fourier transform of rho_d:
    2 (-i / sqrt(2 pi))^d prod exp(-sigma^2 w_i^2 / 2) cos(w_i / 2) sin(w_i).
    """
    w = _points(w, spec.d)
    factors = np.exp(-0.5 * spec.sigma ** 2 * w * w) * np.cos(0.5 * w) * np.sin(w)
    pref = 2.0 * (-1j / math.sqrt(2.0 * math.pi)) ** spec.d
    out = pref * np.prod(factors, axis=-1)
    return complex(out) if np.ndim(out) == 0 else out


def _signed_line(spec):
    def signed(t):
        return float(_grid_factors(spec, np.array([t]))[1][0])
    return signed


def _grid_reach(spec, cfg):
    return 1.5 + math.sqrt(2.0 * math.log(1.0 / cfg.abs_tol) + 2.0) * spec.sigma


def grid_fourier_quadrature(spec, w, cfg=None):
    """Numeric Fourier transform of rho_d: each coordinate factor
    int S(x) exp(-i w x) dx / sqrt(2 pi) by adaptive quadrature.
    """
    if cfg is None:
        cfg = QuadratureConfig()
    w = _points(w, spec.d)
    signed = _signed_line(spec)
    reach = _grid_reach(spec, cfg)
    points = list(GRID_OFFSETS)
    out = 2.0 + 0j
    for wi in w:
        re = integrate_adaptive(lambda t: signed(t) * math.cos(wi * t), -reach, reach, cfg, points)
        im = integrate_adaptive(lambda t: -signed(t) * math.sin(wi * t), -reach, reach, cfg,
                                points)
        out *= complex(re, im) / math.sqrt(2.0 * math.pi)
    return out


def _check_draw(label, n):
    if label not in SampleBatch.Labels:
        raise ConfigInvalid('label must be plus or minus, got %r' % (label,))
    if int(n) < 1:
        raise ConfigInvalid('sample size must be positive, got %r' % (n,))


def grid_sample(spec, label, n, rng):
    """Z = xi + X with xi uniform on the centres of the given parity and
    X ~ N(0, sigma^2 I). The last sign of xi is fixed by the parity.
    """
    _check_draw(label, n)
    g = rng.generator
    d = spec.d
    mags = g.integers(0, 2, size=(n, d)) + 0.5
    signs = 2.0 * g.integers(0, 2, size=(n, d)) - 1.0
    target = 1.0 if label == 'plus' else -1.0
    signs[:, -1] = target * np.prod(signs[:, :-1], axis=1)
    noise = g.normal(0.0, spec.sigma, size=(n, d))
    return SampleBatch(mags * signs + noise, label, rng.fingerprint())


def _grid_line_integrals(spec, cfg):
    reach = _grid_reach(spec, cfg)
    points = list(GRID_OFFSETS)
    signed = _signed_line(spec)

    def unsigned(t):
        return float(_grid_factors(spec, np.array([t]))[0][0])

    def first(t):
        return t * signed(t)

    return (integrate_adaptive(unsigned, -reach, reach, cfg, points),
            integrate_adaptive(signed, -reach, reach, cfg, points),
            integrate_adaptive(first, -reach, reach, cfg, points))


def grid_moment_checks(spec, cfg=None, tol=1e-8):
    """Quadrature check of the signed mass, first moment and the masses of
    rho_d^+ and rho_d^-, using the per-coordinate factorisation (d <= 6).

    The first moment vanishes only for d >= 2; for d = 1 it is 2.
    """
    if spec.d > config.MomentCheckMaxDim:
        raise DimensionTooLarge('moment checks need d <= %d, got %d' %
                                (config.MomentCheckMaxDim, spec.d))
    if cfg is None:
        cfg = QuadratureConfig(abs_tol=1e-12, rel_tol=1e-12)
    d = spec.d
    p_mass, s_mass, s_first = _grid_line_integrals(spec, cfg)
    mass = 2.0 * s_mass ** d
    first = [2.0 * s_first * s_mass ** (d - 1)] * d
    positive = p_mass ** d + s_mass ** d
    negative = p_mass ** d - s_mass ** d
    passes = abs(mass) <= tol and abs(positive - 1.0) <= tol and abs(negative - 1.0) <= tol
    if d >= 2:
        passes = passes and all(abs(m) <= tol for m in first)
    if not passes:
        logger.warning('grid moment check failed for d=%d: mass %s, first %s', d, mass, first)
    return MomentReport(mass, first, positive, negative, passes)


def grid_plateau_probability(spec):
    """P(|X_i| <= x0 for all i), X ~ N(0, sigma^2 I), and its union-bound lower
    bound 1 - 2 d sigma / (x0 sqrt(2 pi)) exp(-x0^2 / (2 sigma^2)).
    """
    ratio = spec.x0 / spec.sigma
    exact = (2.0 * float(normal_cdf(ratio)) - 1.0) ** spec.d
    bound = 1.0 - 2.0 * spec.d / (ratio * math.sqrt(2.0 * math.pi)) * math.exp(-0.5 * ratio ** 2)
    return PlateauProbability(exact, bound)


def sine_abs_mass(spec):
    """int |rho_d| = 2 E|sin(ell X)|, X ~ N(0, 1/sigma^2).

    Gauss-Legendre panels between consecutive zeros of sin(ell x), no wider
    than one standard deviation; closed-form cosine series when the zeros
    are too dense. Depends only on (sigma, ell) and is cached on them.
    """
    return _sine_abs_mass(float(spec.sigma), float(spec.ell))


@functools.lru_cache(maxsize=256)
def _sine_abs_mass(sigma, ell):
    tau = 1.0 / sigma
    reach = tau * math.sqrt(2.0 * math.log(1e12))
    n_zeros = int(ell * reach / math.pi)
    if n_zeros > 100000:
        # |sin y| = 2/pi - (4/pi) sum cos(2ky)/(4k^2 - 1)
        k = np.arange(1, 2000)
        terms = np.exp(-2.0 * (k * ell * tau) ** 2) / (4.0 * k * k - 1.0)
        return 2.0 * (2.0 / math.pi - 4.0 / math.pi * float(terms.sum()))
    zeros = np.arange(n_zeros + 1) * math.pi / ell
    grid = np.arange(0.0, reach, tau)
    edges = np.union1d(np.union1d(zeros, grid), [reach])
    nodes, weights = np.polynomial.legendre.leggauss(config.PanelOrder)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    y = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.exp(-0.5 * (y / tau) ** 2) / (math.sqrt(2.0 * math.pi) * tau) * \
        np.abs(np.sin(ell * y))
    half_line = float(np.sum((vals @ weights) * half))
    return min(2.0, 4.0 * half_line)


def _sine_log_prefactor(spec):
    return math.log(2.0) + spec.d * math.log(spec.sigma) - 0.5 * spec.d * _LOG_2PI


def sine_signed_density(spec, x):
    """rho_d with the split rho^+- = (1 - |rho|/2) xi + max(0, +-rho_d), xi the
    standard Gaussian density.
    """
    x = _points(x, spec.d)
    sq = np.sum(x * x, axis=-1)
    value = np.exp(_sine_log_prefactor(spec) - 0.5 * spec.sigma ** 2 * sq) * \
        np.sin(spec.ell * x[..., 0])
    ref = np.exp(-0.5 * spec.d * _LOG_2PI - 0.5 * sq)
    weight = 1.0 - 0.5 * sine_abs_mass(spec)
    pos = weight * ref + np.maximum(value, 0.0)
    neg = weight * ref + np.maximum(-value, 0.0)
    if np.ndim(value) == 0:
        value, pos, neg = float(value), float(pos), float(neg)
    return SignedDensityValue(value, pos, neg)


def _rejection_first_coordinate(spec, sign, count, g):
    tau = 1.0 / spec.sigma
    out = np.empty(count)
    filled = proposed = accepted = 0
    rate = 0.5
    while filled < count:
        batch = max(1024, int(2 * (count - filled) / max(rate, config.RejectionMinRate)))
        batch = min(batch, 10 * config.RejectionTrials)
        x = g.normal(0.0, tau, size=batch)
        u = g.random(batch)
        keep = x[u < np.maximum(0.0, sign * np.sin(spec.ell * x))]
        proposed += batch
        accepted += keep.size
        rate = accepted / float(proposed)
        if proposed >= config.RejectionTrials and rate < config.RejectionMinRate:
            raise RejectionStall('acceptance rate %.2e after %d proposals' % (rate, proposed))
        take = min(keep.size, count - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def sine_sample(spec, label, n, rng):
    """Mixture sampler: with probability 1 - |rho|/2 from xi, otherwise from
    max(0, +-rho_d) normalised (x_1 by rejection, the rest Gaussian).
    """
    _check_draw(label, n)
    g = rng.generator
    d = spec.d
    p_ref = 1.0 - 0.5 * sine_abs_mass(spec)
    from_ref = g.random(n) < p_ref
    k = int(from_ref.sum())
    points = np.empty((n, d))
    points[from_ref] = g.standard_normal((k, d))
    rest = n - k
    if rest:
        tail = np.empty((rest, d))
        tail[:, 1:] = g.normal(0.0, 1.0 / spec.sigma, size=(rest, d - 1))
        sign = 1.0 if label == 'plus' else -1.0
        tail[:, 0] = _rejection_first_coordinate(spec, sign, rest, g)
        points[~from_ref] = tail
    return SampleBatch(points, label, rng.fingerprint())


def sine_fourier(spec, w):
    """i (2 pi)^{-d/2} (exp(-|w + ell e1|^2 / 2 sigma^2) - exp(-|w - ell e1|^2 / 2 sigma^2)).
    """
    w = _points(w, spec.d)
    shift = np.zeros(spec.d)
    shift[0] = spec.ell
    s2 = 2.0 * spec.sigma ** 2
    plus = np.sum((w + shift) ** 2, axis=-1)
    minus = np.sum((w - shift) ** 2, axis=-1)
    out = 1j * (2.0 * math.pi) ** (-0.5 * spec.d) * (np.exp(-plus / s2) - np.exp(-minus / s2))
    return complex(out) if np.ndim(out) == 0 else out


def sine_projected_density(spec, theta, z):
    """Density of <theta, x> under rho_d:
    2 phi_{1/sigma}(z) sin(ell theta_1 z) exp(-ell^2 (1 - theta_1^2) / (2 sigma^2)).
    """
    t1 = float(np.asarray(theta, dtype=float)[0])
    z = np.asarray(z, dtype=float)
    sigma = spec.sigma
    gauss = sigma / math.sqrt(2.0 * math.pi) * np.exp(-0.5 * (sigma * z) ** 2)
    decay = math.exp(-spec.ell ** 2 * (1.0 - t1 * t1) / (2.0 * sigma ** 2))
    return 2.0 * gauss * np.sin(spec.ell * t1 * z) * decay
