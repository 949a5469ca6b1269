"""Log-correlated bi-fractional Brownian motions on metric spaces.

Kernel evaluation, singular quadrature of covariance functionals, Monte
Carlo samplers for the stochastic-integral representations, and aggregated
central-limit models with characteristic-function verification.
"""

from .kernels import (
    KernelParams,
    KernelValue,
    bifbm_cov,
    gamma_kernel,
    gamma_r_kernel,
    lei_nualart_shift_cov,
    limit_scaling_check,
    occupancy_cov,
    subordinated_bifbm_cov,
)
from .quadrature import (
    QuadratureSettings,
    cov_functional,
    exp_integral_e1,
    frullani_truncated,
    truncated_cov,
)
from .rng import RngStream
from .spaces import (
    Space,
    SpacePoint,
    distance,
    euclidean,
    full_line,
    half_line,
    mu_A,
    parse_point,
    parse_space,
    sphere,
)
from .testfun import SphereCap, TestFunction, parse_test_function

__version__ = "0.1.0"

__all__ = [
    "KernelParams",
    "KernelValue",
    "QuadratureSettings",
    "RngStream",
    "Space",
    "SpacePoint",
    "SphereCap",
    "TestFunction",
    "bifbm_cov",
    "cov_functional",
    "distance",
    "euclidean",
    "exp_integral_e1",
    "frullani_truncated",
    "full_line",
    "gamma_kernel",
    "gamma_r_kernel",
    "half_line",
    "lei_nualart_shift_cov",
    "limit_scaling_check",
    "mu_A",
    "occupancy_cov",
    "parse_point",
    "parse_space",
    "parse_test_function",
    "sphere",
    "subordinated_bifbm_cov",
    "truncated_cov",
]
