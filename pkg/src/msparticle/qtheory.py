"""Composite-coordinate variant: geodesics affine in the mapped coordinates.

Each direction carries a strictly monotone profile rho^mu(x^mu); the
dynamics is the standard one in rho, so geodesics are exactly affine there
and no ODE solver is involved.  The original coordinates are recovered by
per-direction inversion, closed-form where available, otherwise bracketed
bisection polished by Newton steps to 1e-12.

The physical momentum is canonically associated with x, not rho; both the
affine rho-velocity and the reconstructed dx/ds are reported and no
position is taken on which is observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .calculus import minkowski_dot
from .errors import DomainError, SignatureError
from .expressions import compile_expression
from .free_particle import Trajectory

INVERSION_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CoordinateProfile:
    """Strictly monotone map rho(x) with closed-form derivative.

    ``inverse`` is the closed-form inverse when one exists; otherwise
    inversion brackets the root inside ``domain`` and polishes with Newton.
    ``scaling_exponent`` declares the asymptotic anomalous scaling
    rho(lambda x) ~ lambda^exponent rho(x).
    """

    value: Callable[[float], float]
    derivative: Callable[[float], float]
    inverse: Callable[[float], float] | None
    domain: tuple[float, float]
    scaling_exponent: float

    def invert(self, rho: float) -> float:
        with np.errstate(invalid="ignore", divide="ignore"):
            if self.inverse is not None:
                x = float(self.inverse(rho))
            else:
                x = self._invert_numeric(rho)
            if not (self.domain[0] <= x <= self.domain[1]):
                raise DomainError(f"rho={rho} inverts outside the profile domain {self.domain}")
            # Newton polish against the forward map
            for _ in range(3):
                f = self.value(x) - rho
                if abs(f) <= INVERSION_TOLERANCE * max(1.0, abs(rho)):
                    break
                x -= f / self.derivative(x)
            residual = abs(self.value(x) - rho)
        # written so a NaN residual also fails
        if not residual <= 1e-9 * max(1.0, abs(rho)):
            raise DomainError(f"inversion failed at rho={rho}: residual {residual:.3e}")
        return x

    def _invert_numeric(self, rho: float) -> float:
        lo, hi = self.domain
        lo = lo + 1e-300 if lo == 0.0 else lo
        a = max(lo, -1e12)
        b = min(hi, 1e12)
        # shrink/expand a finite bracket inside the (possibly infinite) domain
        if not math.isfinite(self.domain[0]):
            a = -1.0
            while self.value(a) > rho:
                a *= 2.0
                if a < -1e15:
                    raise DomainError(f"rho={rho} below profile range")
        if not math.isfinite(self.domain[1]):
            b = 1.0
            while self.value(b) < rho:
                b *= 2.0
                if b > 1e15:
                    raise DomainError(f"rho={rho} above profile range")
        fa, fb = self.value(a) - rho, self.value(b) - rho
        if fa * fb > 0.0:
            raise DomainError(f"rho={rho} outside profile range on {self.domain}")
        return float(brentq(lambda x: self.value(x) - rho, a, b, xtol=1e-15, rtol=8.9e-16))


def identity_coordinate() -> CoordinateProfile:
    return CoordinateProfile(
        value=lambda x: x,
        derivative=lambda x: 1.0,
        inverse=lambda r: r,
        domain=(-math.inf, math.inf),
        scaling_exponent=1.0,
    )


def power_coordinate(exponent: float) -> CoordinateProfile:
    """rho(x) = x^exponent on x > 0; closed-form inverse x = rho^(1/exponent)."""
    if exponent <= 0.0:
        raise ValueError("exponent must be positive for monotonicity")
    return CoordinateProfile(
        value=lambda x: x**exponent,
        derivative=lambda x: exponent * x ** (exponent - 1.0),
        inverse=lambda r: r ** (1.0 / exponent),
        domain=(0.0, math.inf),
        scaling_exponent=exponent,
    )


def expression_coordinate(
    source: str, domain: tuple[float, float], scaling_exponent: float = 1.0
) -> CoordinateProfile:
    """Monotone profile from a closed-form expression in x1; inverted
    numerically inside the declared domain."""
    expr = compile_expression(source, variables=("x1",))
    import sympy

    sym = sympy.Symbol("x1", real=True)
    dfunc = sympy.lambdify(sym, sympy.diff(expr.sympy_expr, sym), modules="math")
    return CoordinateProfile(
        value=lambda x: expr(x1=x),
        derivative=lambda x: float(dfunc(x)),
        inverse=None,
        domain=domain,
        scaling_exponent=scaling_exponent,
    )


@dataclass(frozen=True)
class CompositeCoordinates:
    """Per-direction monotone coordinate maps."""

    profiles: tuple[CoordinateProfile, ...]

    @property
    def dimension(self) -> int:
        return len(self.profiles)

    def to_rho(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([p.value(xi) for p, xi in zip(self.profiles, x)])

    def from_rho(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        return np.array([p.invert(ri) for p, ri in zip(self.profiles, rho)])

    def jacobian_diagonal(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([p.derivative(xi) for p, xi in zip(self.profiles, x)])


@dataclass(frozen=True)
class QTrajectory:
    """Geodesic in both coordinate systems: affine rho(s) and inverted x(s)."""

    s: np.ndarray
    rho: np.ndarray
    x: np.ndarray
    drho_ds: np.ndarray            # constant along the geodesic
    dx_ds: np.ndarray              # reconstructed: drho/ds / rho'(x)
    inversion_residual: np.ndarray  # |rho(x_i) - rho_i| round-trip error

    def to_trajectory(self) -> Trajectory:
        """Shared output schema: positions x, velocities dx/ds, with the
        affinity/inversion/normalization diagnostics."""
        n = len(self.s)
        affinity = np.zeros(n)
        if n >= 3:
            second = np.diff(self.rho, n=2, axis=0)
            affinity[1:-1] = np.max(np.abs(second), axis=1)
        norm_residual = minkowski_dot(self.drho_ds, self.drho_ds) + 1.0
        return Trajectory(
            s=self.s,
            x=self.x,
            u=self.dx_ds,
            diagnostics={
                "affinity_residual": affinity,
                "inversion_residual": self.inversion_residual.copy(),
                "normalization_residual": np.full(n, norm_residual),
            },
        )


def q_geodesic(
    coords: CompositeCoordinates, x0, drho_ds0, s_span, n_samples: int = 101
) -> QTrajectory:
    """Geodesic with affine mapped coordinates: rho(s) = rho(x0) + drho0 s,
    then per-direction inversion back to x.  No ODE solver is involved;
    affinity is exact by construction.
    """
    x0 = np.asarray(x0, dtype=float)
    drho0 = np.asarray(drho_ds0, dtype=float)
    if minkowski_dot(drho0, drho0) >= 0.0:
        raise SignatureError("initial mapped velocity must be timelike")
    rho0 = coords.to_rho(x0)
    s = np.linspace(float(s_span[0]), float(s_span[1]), n_samples)
    rho = rho0[None, :] + drho0[None, :] * (s - s[0])[:, None]
    x = np.empty_like(rho)
    dx = np.empty_like(rho)
    inv_res = np.empty(n_samples)
    for i in range(n_samples):
        x[i] = coords.from_rho(rho[i])
        dx[i] = drho0 / coords.jacobian_diagonal(x[i])
        inv_res[i] = float(np.max(np.abs(coords.to_rho(x[i]) - rho[i])))
    return QTrajectory(
        s=s, rho=rho, x=x, drho_ds=drho0, dx_ds=dx, inversion_residual=inv_res
    )


def q_line_element(coords: CompositeCoordinates, x, dx) -> float:
    """ds = sqrt(-drho.drho) with drho^mu = rho'(x^mu) dx^mu; rejects
    null/spacelike displacements."""
    x = np.asarray(x, dtype=float)
    dx = np.asarray(dx, dtype=float)
    drho = coords.jacobian_diagonal(x) * dx
    square = minkowski_dot(drho, drho)
    if square >= 0.0:
        raise SignatureError(f"mapped displacement is not timelike: drho.drho = {square}")
    return math.sqrt(-square)
