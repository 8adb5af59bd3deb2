"""Relativistic particle dynamics in multiscale spacetimes.

A numerical laboratory for worldline mechanics with weighted derivatives:
factorized measure weights, weighted calculus on analytic functions and
grids, free and charged particle integration validated against
integer-picture closed forms, energy-momentum continuity checks on grids,
and the composite-coordinate variant with exactly affine geodesics.
"""

from .errors import (
    CompatibilityError,
    ConstraintDriftError,
    DegenerateGeometryError,
    DomainError,
    ExpressionError,
    MsParticleError,
    SignatureError,
    SingularWeightError,
    ValidationError,
)
from .measure import (
    MeasureWeight,
    ProfileKind,
    SmoothedDelta,
    WeightProfile,
    binomial_profile,
    constant_profile,
    power_profile,
    unit_measure,
)
from .calculus import (
    AnalyticFunction,
    DerivativeFlavor,
    GridField,
    ScalarWeight,
    WeightedOperatorSpec,
    anisotropic_differential,
    apply_lorentz,
    boost_matrix,
    grid_from_function,
    is_lorentz,
    minkowski_dot,
    minkowski_metric,
    weighted_derivative,
)
from .line_element import (
    LineElementInput,
    ds_anisotropic,
    ds_isotropic_explicit,
    gamma_factor,
    implicit_residual,
)
from .free_particle import (
    ActionWeights,
    Momentum,
    NonrelComparison,
    StepControl,
    Trajectory,
    WorldlineState,
    canonical_momentum,
    closed_form_position,
    dirac_hamiltonian,
    eom_rhs_anisotropic,
    eom_rhs_isotropic,
    integer_picture_map,
    integer_picture_momentum,
    integrate,
    mass_shell_residual,
    nonrel_limit_compare,
    normalization_residual,
)

__version__ = "0.1.0"
