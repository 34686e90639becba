"""Heat equation on a half-space with a dynamical boundary condition.

Kernel-based solution construction (Dirichlet heat semigroup, Poisson-type
boundary semigroup, boundary-flux coupling, Picard iteration), an
independent finite-difference oracle, and a harness that verifies the
smoothing/decay estimates, semigroup identities, and contraction properties
at desk scale.
"""

from .kernels import (
    HalfSpacePoint,
    boundary_kernel,
    dirichlet_heat_kernel,
    dt_boundary_kernel,
    gauss_kernel,
    normal_derivative_kernel,
    poisson_constant,
)
from .norms import (
    DampedNormParams,
    HalfSpaceGrid,
    SampledBoundaryField,
    SampledField,
    TimeSliceNorms,
    WeightedExponentSet,
    alpha_of,
    energy_functional,
    exponent_set,
    lp_norm,
    membership_criterion,
    weight_h,
    weighted_lq_norm,
    xtm_norm,
)
from .quadrature import (
    SingularTimeSpec,
    SpatialQuadratureSpec,
    integrate_boundary,
    integrate_halfspace,
    integrate_time_singular,
)

__version__ = "0.1.0"
