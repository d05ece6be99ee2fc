"""Fractional calculus with respect to a function.

The package evaluates Riemann-Liouville, Caputo and Hilfer operators taken
with respect to an increasing substitution ``Psi``, the matching Laplace
transform and convolution, the Mittag-Leffler family of special functions,
and closed-form solutions of the associated Cauchy problems together with an
independent Volterra-equation oracle.
"""

from .errors import (
    AbscissaViolation,
    AccuracyLoss,
    ContourFailure,
    DomainMismatch,
    InvalidParameter,
    InvalidProblem,
    NeedsSmoothness,
    NoConvergence,
    NumericalError,
    PsiFracError,
    SeriesDivergence,
    ToleranceNotMet,
    TransformIneligible,
    UnboundedGrowth,
    UnknownKind,
    ValidationError,
    WindowTooSmall,
)
from .frac_operators import (
    FracOrder,
    psi_caputo_derivative,
    psi_hilfer_derivative,
    psi_integral,
    psi_rl_derivative,
)
from .laplace import (
    ContourSpec,
    ExponentialOrder,
    TransformImage,
    convolution_function,
    estimate_exponential_order,
    glt_forward,
    glt_inverse,
    psi_convolve,
    reference_image,
    reference_original,
)
from .psi_kernel import BUILTIN_KINDS, PsiFunction, RealFunction, builtin_psi, conjugate_in, conjugate_out
from .quadrature import QuadratureSpec
from .solvers import (
    BoundReport,
    FdeProblem,
    SeriesSpec,
    SolutionTable,
    check_regularity_bound,
    diffusion_green,
    diffusion_reference,
    diffusion_solve,
    solve,
    solve_caputo_ivp,
    solve_hilfer2,
    solve_hilfer3,
    solve_rl_ivp,
    volterra_oracle,
)
from .special_functions import MlParams, WrightParams, ml2, ml3, wright

__version__ = "0.1.0"
