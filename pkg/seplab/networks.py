"""
Dense ReLU-family networks of depth two and three, the explicit
discriminators f1, f2 and F of the parity-grid construction, path norms and
the Fourier constants of the activation.
"""

import decimal
import json
import math

import numpy as np

from seplab import logger, ConfigInvalid, DimensionMismatch, BadPlateau, ZeroNetwork, \
    UnsupportedActivation

__all__ = ['ActivationSpec', 'RELU', 'TwoLayerNet', 'ThreeLayerNet', 'eval_two_layer',
           'eval_three_layer', 'build_f1', 'build_f2', 'build_F', 'grid_orientation',
           'path_norm_b', 'path_norm_nb', 'normalize_to_unit_path_norm',
           'activation_fourier_constants', 'network_to_json', 'network_from_json']

GRID_OFFSETS = np.array([-1.5, -0.5, 0.5, 1.5])
GRID_SIGNS = np.sign(GRID_OFFSETS)
# f1 trapezoid: knots at beta + j*x0 with these slope changes
_F1_SHIFTS = (-2.0, -1.0, 1.0, 2.0)
_F1_SLOPES = (1.0, -1.0, -1.0, 1.0)


class ActivationSpec(object):
    """sigma(z) = c_plus * max(z, 0)^alpha + c_minus * max(-z, 0)^alpha.

    ReLU is (1, 1, 0); the leaky ReLU with negative slope s is (1, 1, -s).
    """

    __slots__ = ('alpha', 'c_plus', 'c_minus')

    def __init__(self, alpha=1, c_plus=1.0, c_minus=0.0):
        if int(alpha) != alpha or alpha < 1:
            raise ConfigInvalid('alpha must be a positive integer, got %r' % (alpha,))
        if not (math.isfinite(c_plus) and math.isfinite(c_minus)):
            raise ConfigInvalid('activation coefficients must be finite')
        if c_minus <= -1:
            raise ConfigInvalid('c_minus must exceed -1, got %r' % (c_minus,))
        self.alpha = int(alpha)
        self.c_plus = float(c_plus)
        self.c_minus = float(c_minus)

    @staticmethod
    def leaky(slope):
        return ActivationSpec(1, 1.0, -float(slope))

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        pos = np.maximum(z, 0.0)
        neg = np.maximum(-z, 0.0)
        if self.alpha != 1:
            pos = pos ** self.alpha
            neg = neg ** self.alpha
        return self.c_plus * pos + self.c_minus * neg

    @property
    def _odd_sum(self):
        return self.c_plus - (-1) ** self.alpha * self.c_minus

    @property
    def a_const(self):
        return (1j ** (self.alpha - 1)) * math.factorial(self.alpha) / \
            math.sqrt(2.0 * math.pi) * self._odd_sum

    @property
    def b_const(self):
        return (1j ** self.alpha) * math.sqrt(0.5 * math.pi) * self._odd_sum + \
            ((-1j) ** self.alpha) * self.c_minus

    @property
    def abs_part(self):
        self.require_linear()
        return 0.5 * (self.c_plus + self.c_minus)

    @property
    def linear_part(self):
        self.require_linear()
        return 0.5 * (self.c_plus - self.c_minus)

    def require_linear(self):
        if self.alpha != 1:
            raise UnsupportedActivation('witness routes need alpha = 1, got %d' % self.alpha)

    def to_dict(self):
        return {'alpha': self.alpha, 'c_plus': _exact(self.c_plus),
                'c_minus': _exact(self.c_minus)}

    @staticmethod
    def from_dict(doc):
        return ActivationSpec(int(doc['alpha']), _inexact(doc['c_plus']),
                              _inexact(doc['c_minus']))

    def __eq__(self, other):
        return isinstance(other, ActivationSpec) and \
            (self.alpha, self.c_plus, self.c_minus) == (other.alpha, other.c_plus, other.c_minus)

    def __repr__(self):
        return 'ActivationSpec(alpha=%d, c_plus=%r, c_minus=%r)' % (self.alpha, self.c_plus,
                                                                    self.c_minus)


RELU = ActivationSpec(1, 1.0, 0.0)


def activation_fourier_constants(act):
    return act.a_const, act.b_const


def _finite(name, array):
    if not np.all(np.isfinite(array)):
        raise ConfigInvalid('%s has non-finite entries' % name)
    return array


class TwoLayerNet(object):
    """x -> sum_i w_i sigma(<theta_i, x> - b_i) + w0.

    'theta' has shape (m, d); 'b' and 'w' have shape (m,).
    """

    __slots__ = ('theta', 'b', 'w', 'w0')

    def __init__(self, theta, b, w, w0=0.0):
        theta = np.asarray(theta, dtype=float)
        if theta.ndim == 1:
            theta = theta[:, None]
        b = np.asarray(b, dtype=float).reshape(-1)
        w = np.asarray(w, dtype=float).reshape(-1)
        if not (theta.shape[0] == b.shape[0] == w.shape[0]) or theta.shape[0] < 1:
            raise DimensionMismatch('unit counts differ: theta %s, b %s, w %s' %
                                    (theta.shape, b.shape, w.shape))
        self.theta = _finite('theta', theta)
        self.b = _finite('b', b)
        self.w = _finite('w', w)
        self.w0 = float(w0)

    @property
    def dim(self):
        return self.theta.shape[1]

    @property
    def width(self):
        return self.theta.shape[0]

    def __call__(self, x, act=RELU):
        return eval_two_layer(self, act, x)


class ThreeLayerNet(object):
    """x -> sum_i w_i sigma(W_i0 + sum_j W_ij sigma(<theta_j, x> - b_j)) + w0.

    'W' has shape (m2, m1 + 1) with the bias in column 0.
    """

    __slots__ = ('theta', 'b', 'W', 'w', 'w0')

    def __init__(self, theta, b, W, w, w0=0.0):
        theta = np.asarray(theta, dtype=float)
        b = np.asarray(b, dtype=float).reshape(-1)
        W = np.asarray(W, dtype=float)
        w = np.asarray(w, dtype=float).reshape(-1)
        if theta.ndim != 2 or theta.shape[0] != b.shape[0] or theta.shape[0] < 1:
            raise DimensionMismatch('first layer: theta %s, b %s' % (theta.shape, b.shape))
        if W.ndim != 2 or W.shape[1] != theta.shape[0] + 1 or W.shape[0] != w.shape[0] or \
           W.shape[0] < 1:
            raise DimensionMismatch('second layer W %s does not fit m1=%d, m2=%d' %
                                    (W.shape, theta.shape[0], w.shape[0]))
        self.theta = _finite('theta', theta)
        self.b = _finite('b', b)
        self.W = _finite('W', W)
        self.w = _finite('w', w)
        self.w0 = float(w0)

    @property
    def dim(self):
        return self.theta.shape[1]

    @property
    def widths(self):
        return self.theta.shape[0], self.W.shape[0]

    def __call__(self, x, act=RELU):
        return eval_three_layer(self, act, x)


def _inputs(net, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.shape[-1] != net.dim:
        raise DimensionMismatch('input dimension %d, network expects %d' %
                                (x.shape[-1], net.dim))
    return x


def eval_two_layer(net, act, x):
    """Forward pass on one point (shape (d,)) or a batch (shape (n, d)).
    """
    x = _inputs(net, x)
    out = act(x @ net.theta.T - net.b) @ net.w + net.w0
    return float(out) if x.ndim == 1 else out


def eval_three_layer(net, act, x):
    x = _inputs(net, x)
    hidden = act(x @ net.theta.T - net.b)
    hidden = act(hidden @ net.W[:, 1:].T + net.W[:, 0])
    out = hidden @ net.w + net.w0
    return float(out) if x.ndim == 1 else out


def build_f1(x0):
    """Sum of four trapezoid bumps of height sign(beta), plateau
    [beta - x0, beta + x0] and support [beta - 2 x0, beta + 2 x0].
    """
    if not 0 < x0 < 0.25:
        raise BadPlateau('x0 must be in (0, 1/4), got %r' % (x0,))
    b, w = [], []
    for beta, sign in zip(GRID_OFFSETS, GRID_SIGNS):
        for shift, slope in zip(_F1_SHIFTS, _F1_SLOPES):
            b.append(beta + shift * x0)
            w.append(sign * slope / x0)
    return TwoLayerNet(np.ones((len(b), 1)), b, w, 0.0)


def build_f2(d):
    """1-D net with alternating values +-1 at the even (d even) or odd
    (d odd) integers of [-d, d], constant beyond +-d.
    """
    if int(d) < 2:
        raise ConfigInvalid('f2 needs d >= 2, got %r' % (d,))
    d = int(d)
    units = []
    if d % 2 == 0:
        w0 = 1.0
        units += [(1.0, 0.0, -1.0), (-1.0, 0.0, -1.0)]
        edge = -(-1.0) ** (d // 2)
        units += [(1.0, float(d), edge), (-1.0, float(d), edge)]
        for k in range(1, d // 2):
            coef = -2.0 * (-1.0) ** k
            units += [(1.0, 2.0 * k, coef), (-1.0, 2.0 * k, coef)]
    else:
        w0 = 0.0
        units += [(1.0, 0.0, 1.0), (-1.0, 0.0, -1.0)]
        edge = (-1.0) ** ((d - 1) // 2)
        units += [(1.0, float(d), -edge), (-1.0, float(d), edge)]
        for k in range((d - 1) // 2):
            coef = 2.0 * (-1.0) ** k
            units += [(1.0, 2.0 * k + 1.0, -coef), (-1.0, 2.0 * k + 1.0, coef)]
    theta, b, w = zip(*units)
    return TwoLayerNet(np.array(theta)[:, None], b, w, w0)


def grid_orientation(d):
    """Sign s_d with F(x) = s_d * prod sign(x_i) on every plateau.
    """
    return 1 if d % 4 in (0, 1) else -1


def build_F(spec):
    """Three-layer net x -> f2(sum_i f1(x_i)) with widths 16d and d+2 (d even)
    or d+3 (d odd).
    """
    d = spec.d
    if d < 2:
        raise ConfigInvalid('F needs d >= 2, got %r' % (d,))
    f1 = build_f1(spec.x0)
    f2 = build_f2(d)
    m = f1.width
    theta = np.zeros((m * d, d))
    for i in range(d):
        theta[i * m:(i + 1) * m, i] = 1.0
    b = np.tile(f1.b, d)
    inner = np.tile(f1.w, d)
    W = np.empty((f2.width, m * d + 1))
    W[:, 0] = -f2.b
    W[:, 1:] = f2.theta[:, :1] * inner[None, :]
    logger.debug('built F for d=%d: widths %d, %d', d, m * d, f2.width)
    return ThreeLayerNet(theta, b, W, f2.w, f2.w0)


def path_norm_b(net):
    """l2 path norm with biases.
    """
    if isinstance(net, TwoLayerNet):
        first = np.sqrt(np.sum(net.theta ** 2, axis=1) + net.b ** 2)
        return float(np.abs(net.w) @ first + abs(net.w0))
    first = np.sqrt(np.sum(net.theta ** 2, axis=1) + net.b ** 2)
    second = np.abs(net.W[:, 1:]) @ first + np.abs(net.W[:, 0])
    return float(np.abs(net.w) @ second + abs(net.w0))


def path_norm_nb(net):
    first = np.linalg.norm(net.theta, axis=1)
    if isinstance(net, TwoLayerNet):
        return float(np.abs(net.w) @ first)
    return float(np.abs(net.w) @ (np.abs(net.W[:, 1:]) @ first))


def normalize_to_unit_path_norm(net):
    """Divide the outer layer by path_norm_b(net).
    """
    norm = path_norm_b(net)
    if not norm > 0:
        raise ZeroNetwork('path norm is %r' % (norm,))
    if isinstance(net, TwoLayerNet):
        return TwoLayerNet(net.theta, net.b, net.w / norm, net.w0 / norm)
    return ThreeLayerNet(net.theta, net.b, net.W, net.w / norm, net.w0 / norm)


def _exact(x):
    return str(decimal.Decimal(float(x)))


def _inexact(text):
    return float(decimal.Decimal(text))


def _matrix(a):
    return [[_exact(v) for v in row] for row in np.atleast_2d(a)]


def network_to_json(net, act=RELU):
    """JSON document {activation, layers}; weights are exact decimal strings
    of the stored doubles.
    """
    if isinstance(net, TwoLayerNet):
        layers = [{'theta': _matrix(net.theta), 'b': [_exact(v) for v in net.b]},
                  {'w': [_exact(v) for v in net.w], 'w0': _exact(net.w0)}]
    else:
        layers = [{'theta': _matrix(net.theta), 'b': [_exact(v) for v in net.b]},
                  {'W': _matrix(net.W)},
                  {'w': [_exact(v) for v in net.w], 'w0': _exact(net.w0)}]
    return json.dumps({'activation': act.to_dict(), 'layers': layers})


def network_from_json(text):
    """Inverse of network_to_json; returns (net, act).
    """
    doc = json.loads(text)
    try:
        act = ActivationSpec.from_dict(doc['activation'])
        layers = doc['layers']

        def mat(rows):
            return np.array([[_inexact(v) for v in row] for row in rows])

        def vec(vals):
            return np.array([_inexact(v) for v in vals])

        first = layers[0]
        outer = layers[-1]
        if len(layers) == 2:
            net = TwoLayerNet(mat(first['theta']), vec(first['b']), vec(outer['w']),
                              _inexact(outer['w0']))
        elif len(layers) == 3:
            net = ThreeLayerNet(mat(first['theta']), vec(first['b']), mat(layers[1]['W']),
                                vec(outer['w']), _inexact(outer['w0']))
        else:
            raise ConfigInvalid('network document has %d layers' % len(layers))
    except (KeyError, TypeError, IndexError, decimal.InvalidOperation) as exc:
        raise ConfigInvalid('malformed network document: %s' % exc)
    return net, act
