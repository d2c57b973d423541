"""
seplab: numerical certificates for depth separation and feature-learning
separation of neural-network discriminators (integral probability metrics
over two-layer, three-layer and random-feature ReLU classes).
"""

import pycos

__license__ = "Apache 2.0"
__status__ = "Beta"
__version__ = "1.0.0"

__all__ = ['logger', 'SeplabError', 'NonConvergence', 'NoBracket', 'SingularitySpacing',
           'DimensionTooLarge', 'DimensionMismatch', 'RejectionStall', 'BadPlateau',
           'ZeroNetwork', 'ImaginaryResidual', 'DegenerateTheta', 'UnsupportedActivation',
           'ConfigInvalid', 'IoFailure']

logger = pycos.Logger('seplab')


class SeplabError(Exception):
    """Base class of all errors raised by seplab.
    """


class NonConvergence(SeplabError):
    """Quadrature or refinement exhausted its budget before reaching tolerance,
    or a search found no finite value.
    """


class NoBracket(SeplabError):
    """Root finder called on an interval without a sign change.
    """


class SingularitySpacing(SeplabError):
    """Principal-value window wider than the first quadrature node.
    """


class DimensionTooLarge(SeplabError):
    """Dimension above the cap of an exponential-cost route.
    """


class DimensionMismatch(SeplabError):
    """Point, direction or sample dimension differs from that of the pair.
    """


class RejectionStall(SeplabError):
    """Rejection sampler acceptance rate fell below the configured floor.
    """


class BadPlateau(SeplabError):
    """Plateau half-width x0 outside (0, 1/4).
    """


class ZeroNetwork(SeplabError):
    """Network with zero path norm cannot be normalised.
    """


class ImaginaryResidual(SeplabError):
    """A route that must be real produced a non-negligible imaginary part.
    """


class DegenerateTheta(SeplabError):
    """Direction with theta_1 = 0, where the sine-pair witness vanishes.
    """


class UnsupportedActivation(SeplabError):
    """Activation exponent other than 1 given to a witness route.
    """


class ConfigInvalid(SeplabError):
    """Invalid parameter, option or configuration file.
    """


class IoFailure(SeplabError):
    """Report or sample file could not be read, written or decoded.
    """


from seplab.numerics import (QuadratureConfig, SearchConfig, RngStream, integrate_adaptive,
                             find_root, normal_cdf, normal_pdf, pv_integral, sample_sphere,
                             maximize_multistart)
from seplab.distributions import (GridPairSpec, SinePairSpec, SignedDensityValue, SampleBatch,
                                  grid_signed_density, grid_fourier, grid_sample,
                                  grid_moment_checks, sine_signed_density, sine_abs_mass,
                                  sine_sample, sine_fourier)
from seplab.networks import (ActivationSpec, RELU, TwoLayerNet, ThreeLayerNet, eval_two_layer,
                             eval_three_layer, build_f1, build_f2, build_F, path_norm_b,
                             path_norm_nb, normalize_to_unit_path_norm,
                             activation_fourier_constants)
from seplab.bounds import (BoundReport, kappa, sigma_d_grid, sigma_d_sine, u_sup_bounds,
                           upper_bound_2l_explicit, pv_bound, gaussian_tail, spherical_cap_area,
                           rkhs_upper_bound_explicit, sec4_v_bounds, three_layer_lower_formula)
from seplab.witness import (IpmEstimate, relu_gaussian_mean, grid_witness_exact,
                            grid_witness_fourier, two_layer_ipm_search, three_layer_gap,
                            three_layer_certificate, sine_witness, sec4_two_layer_lower,
                            mmd_estimate, mmd_sample_crosscheck)
