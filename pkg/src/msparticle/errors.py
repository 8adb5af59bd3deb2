"""Exception hierarchy shared by all msparticle modules.

Every numerical failure raises an explicit error; silent NaN propagation is
never an acceptable outcome.
"""

from __future__ import annotations


class MsParticleError(Exception):
    """Base class for all package errors."""


class DomainError(MsParticleError):
    """Evaluation point lies outside the declared domain of a profile."""


class SingularWeightError(DomainError):
    """A measure or action weight was evaluated at (or inside the excluded
    neighborhood of) one of its singular points."""


class SignatureError(MsParticleError):
    """A displacement that must be timelike is null or spacelike, or a
    velocity is superluminal."""


class DegenerateGeometryError(MsParticleError):
    """The line-element denominator 4/omega + Omega^2 x.x vanished or
    changed sign; the explicit closed form is not valid there."""


class ConstraintDriftError(MsParticleError):
    """Velocity-normalization drift exceeded the hard abort limit during
    integration.  Carries a diagnostic dump of the offending state."""

    def __init__(self, message: str, *, s: float, state: object = None) -> None:
        super().__init__(message)
        self.s = s
        self.state = state


class CompatibilityError(MsParticleError):
    """Charged-particle configuration violates the field-theory
    compatibility condition (time weight and worldline weights must be
    trivial; the geometry may be multiscale only along spatial directions)."""


class ValidationError(MsParticleError):
    """Scenario configuration failed validation; ``field`` names the key."""

    def __init__(self, message: str, *, field: str | None = None) -> None:
        super().__init__(message)
        self.field = field


class ExpressionError(ValidationError):
    """A closed-form expression string failed to parse or used a symbol
    outside the supported set."""
