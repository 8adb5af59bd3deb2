"""Factorized multiscale measure weights v(x) and smoothed point densities.

The spacetime integration weight factorizes per coordinate,
v(x) = prod_mu v_mu(x^mu), with each factor positive on its domain.
Three closed-form profiles are provided:

* constant          v(x) = 1
* power law         v(x) = |x/l|^(alpha-1)
* binomial          v(x) = 1 + |x/l|^(alpha-1)

and a finite multiscale sum v(x) = 1 + sum_n |x/l_n|^(alpha_n-1) covering
hierarchies of scales.  Power-law and binomial profiles with alpha < 1 are
singular at x = 0; evaluation inside the declared excluded neighborhood
|x| <= epsilon raises instead of returning inf/NaN.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import sympy

from .errors import SingularWeightError

SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


class ProfileKind(enum.Enum):
    CONSTANT = "constant"
    POWER = "power"
    BINOMIAL = "binomial"
    MULTISCALE = "multiscale"


@dataclass(frozen=True)
class WeightProfile:
    """Single-coordinate weight factor v_mu(x^mu).

    alpha in (0, 1] is the anomalous exponent, scale > 0 the length at
    which the profile turns over, epsilon >= 0 the radius of the excluded
    neighborhood around the x = 0 singularity (alpha < 1 only).
    For MULTISCALE profiles ``terms`` lists (alpha_n, scale_n) pairs and
    the scalar alpha/scale fields are ignored.
    """

    kind: ProfileKind = ProfileKind.CONSTANT
    alpha: float = 1.0
    scale: float = 1.0
    epsilon: float = 0.0
    terms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        for a, l in self._term_list():
            if not 0.0 < a <= 1.0:
                raise ValueError(f"alpha must be in (0, 1], got {a}")
            if l <= 0.0:
                raise ValueError(f"length scale must be positive, got {l}")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")
        if self.kind is ProfileKind.MULTISCALE and not self.terms:
            raise ValueError("multiscale profile needs at least one (alpha, scale) term")

    def _term_list(self) -> tuple[tuple[float, float], ...]:
        if self.kind is ProfileKind.CONSTANT:
            return ()
        if self.kind is ProfileKind.MULTISCALE:
            return self.terms
        return ((self.alpha, self.scale),)

    @property
    def is_singular(self) -> bool:
        return any(a < 1.0 for a, _ in self._term_list())

    def _check_domain(self, x) -> None:
        if not self.is_singular:
            return
        bad = np.abs(x) <= self.epsilon if self.epsilon > 0.0 else np.equal(x, 0.0)
        if np.any(bad):
            raise SingularWeightError(
                f"weight profile singular at |x| <= {self.epsilon} (evaluated at x={x})"
            )

    def value(self, x):
        """Evaluate v(x); accepts scalars or numpy arrays."""
        if self.kind is ProfileKind.CONSTANT:
            return np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else 1.0
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        if self.kind is ProfileKind.POWER:
            out = np.abs(x / self.scale) ** (self.alpha - 1.0)
        else:
            out = 1.0 + sum(
                np.abs(x / l) ** (a - 1.0) for a, l in self._term_list()
            )
        return float(out) if out.ndim == 0 else out

    def derivative(self, x):
        """Closed-form dv/dx; never a finite difference."""
        if self.kind is ProfileKind.CONSTANT:
            return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        # d/dx |x/l|^(a-1) = (a-1) |x/l|^(a-1) / x
        out = sum(
            (a - 1.0) * np.abs(x / l) ** (a - 1.0) / x for a, l in self._term_list()
        )
        return float(out) if np.ndim(out) == 0 else out

    def sqrt_log_derivative(self, x):
        """d/dx ln sqrt(v) = v' / (2 v)."""
        if self.kind is ProfileKind.CONSTANT:
            return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
        return self.derivative(x) / (2.0 * self.value(x))

    def sympy_expr(self, sym: sympy.Symbol, positive: bool = False) -> sympy.Expr:
        """Symbolic form of the profile; ``positive`` drops the |.| for x > 0."""
        if self.kind is ProfileKind.CONSTANT:
            return sympy.Integer(1)
        base = (lambda l: sym / l) if positive else (lambda l: sympy.Abs(sym) / l)
        powers = [base(l) ** sympy.Float(a - 1.0) for a, l in self._term_list()]
        if self.kind is ProfileKind.POWER:
            return powers[0]
        return sympy.Integer(1) + sympy.Add(*powers)


def constant_profile() -> WeightProfile:
    return WeightProfile(kind=ProfileKind.CONSTANT)


def power_profile(alpha: float, scale: float = 1.0, epsilon: float = 0.0) -> WeightProfile:
    return WeightProfile(kind=ProfileKind.POWER, alpha=alpha, scale=scale, epsilon=epsilon)


def binomial_profile(alpha: float, scale: float = 1.0, epsilon: float = 0.0) -> WeightProfile:
    return WeightProfile(kind=ProfileKind.BINOMIAL, alpha=alpha, scale=scale, epsilon=epsilon)


@dataclass(frozen=True)
class MeasureWeight:
    """Factorized spacetime weight v(x) = prod_mu v_mu(x^mu).

    Index 0 is the time direction.  The metric is fixed Minkowski
    diag(-, +, ..., +).
    """

    profiles: tuple[WeightProfile, ...]

    def __post_init__(self) -> None:
        if len(self.profiles) < 2:
            raise ValueError("need at least 2 coordinates (1 time + 1 space)")

    @property
    def dimension(self) -> int:
        return len(self.profiles)

    @property
    def is_spatial_only(self) -> bool:
        """True when the time direction carries no weight (v_0 = 1)."""
        return self.profiles[0].kind is ProfileKind.CONSTANT

    def metric(self) -> np.ndarray:
        eta = np.eye(self.dimension)
        eta[0, 0] = -1.0
        return eta

    def weight(self, x) -> float:
        """Total weight v(x) at a spacetime point (length-D array)."""
        x = np.asarray(x, dtype=float)
        out = 1.0
        for profile, xi in zip(self.profiles, x):
            out *= profile.value(xi)
        return out

    def spatial_weight(self, xs) -> float:
        """Product of the spatial factors v_i at a (D-1)-vector."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = 1.0
        for profile, xi in zip(self.profiles[1:], xs):
            out *= profile.value(xi)
        return out

    def sqrt_weight(self, x) -> float:
        return math.sqrt(self.weight(x))

    def sqrt_log_derivative(self, mu: int, x) -> float:
        """d/dx^mu ln sqrt(v) at a spacetime point (factorized: only the
        mu-th profile contributes)."""
        x = np.asarray(x, dtype=float)
        return self.profiles[mu].sqrt_log_derivative(x[mu])


def unit_measure(dimension: int) -> MeasureWeight:
    """Ordinary spacetime: every profile constant 1."""
    return MeasureWeight(profiles=tuple(constant_profile() for _ in range(dimension)))


@dataclass(frozen=True)
class SmoothedDelta:
    """Mollified multiscale point density around a spatial center.

    delta_v(x, x0) = prod_i G_sigma(x^i - x0^i) / sqrt(v_i(x^i) v_i(x0^i))
    with a normalized Gaussian mollifier G_sigma.  Symmetric in (x, x0) by
    construction; the weighted integral of v * delta_v * f converges to
    f(x0) as sigma -> 0.
    """

    measure: MeasureWeight
    center: tuple[float, ...]
    sigma: float

    def __post_init__(self) -> None:
        if self.sigma <= 0.0:
            raise ValueError("smoothing width sigma must be positive")
        if len(self.center) != self.measure.dimension - 1:
            raise ValueError("center must be a spatial point (D-1 components)")

    def value(self, xs) -> float:
        """Evaluate at a spatial point; scalar in, scalar out."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        out = 1.0
        for profile, xi, ci in zip(self.measure.profiles[1:], xs, self.center):
            g = math.exp(-0.5 * ((xi - ci) / self.sigma) ** 2) / (self.sigma * SQRT_TWO_PI)
            out *= g / math.sqrt(profile.value(xi) * profile.value(ci))
        return out

    def value_on_axis(self, i: int, x):
        """Vectorized single-axis factor; used for grid deposition."""
        profile = self.measure.profiles[1 + i]
        ci = self.center[i]
        x = np.asarray(x, dtype=float)
        g = np.exp(-0.5 * ((x - ci) / self.sigma) ** 2) / (self.sigma * SQRT_TWO_PI)
        return g / np.sqrt(profile.value(x) * profile.value(ci))
