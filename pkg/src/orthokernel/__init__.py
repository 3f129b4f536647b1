"""Orthogonally initialised layers: weight samplers, kernels, width bounds and
Monte Carlo checks of those bounds."""

__version__ = "0.1.0"

from .activation import Activation, UnboundedActivationError, alpha_rescale, builtin, normalize
from .bounds import (
    BoundInputs,
    bound_report,
    chatterjee_bound,
    concentration_tail,
    daniely_min_width,
    gradient_h,
    lipschitz_g,
    lipschitz_h,
    mean_bias_bound,
    suo_conditions,
    wasserstein_bound,
)
from .kernel import (
    InputPair,
    SigmaPair,
    approx_kernel_mc,
    approx_kernel_quadrature,
    canonical_pair,
    closed_form_kernel,
    empirical_kernel,
    sigma_of_pair,
)
from .sampler import (
    MatrixShape,
    Scheme,
    WeightMatrix,
    sample,
    sample_gaussian_fanin,
    sample_haar_rect,
    sample_haar_square,
    sample_suo,
    sample_suo_reference,
)
