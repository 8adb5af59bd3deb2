"""Multiscale line elements for massive worldlines.

The isotropic worldline weight makes the proper-parameter interval ds an
implicit function of the displacement; solving the quadratic gives the
explicit form

    ds = 2 [ -Omega x.dx + sqrt(Omega^2 (x.dx)^2 - (4/omega + Omega^2 x.x) dx.dx) ]
         / (4/omega + Omega^2 x.x)

with Omega the log-derivative of the weight and all dots Minkowski.  The
root sign is the one that stays positive as Omega -> 0.  The anisotropic
system with trivial time weight has the closed form ds = dt / gamma with
gamma = 1 / sqrt(1 - v0 (weighted spatial velocity)^2).

Only timelike displacements are accepted; null or spacelike input raises
SignatureError rather than returning an imaginary interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calculus import minkowski_dot
from .errors import DegenerateGeometryError, SignatureError

DEGENERATE_DENOMINATOR = 1e-14


@dataclass(frozen=True)
class LineElementInput:
    """Point, displacement and isotropic weight data for one evaluation."""

    x: np.ndarray          # spacetime point
    dx: np.ndarray         # displacement
    omega: float           # isotropic action weight at current s
    capital_omega: float   # log-derivative d ln(omega)/ds at current s

    def __post_init__(self) -> None:
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")


def ds_isotropic_explicit(inp: LineElementInput) -> float:
    """Explicit proper interval for the isotropic weighted worldline.

    Raises SignatureError when the radicand is negative (the displacement
    is not timelike) and DegenerateGeometryError when the denominator
    4/omega + Omega^2 x.x vanishes or goes negative.
    """
    x = np.asarray(inp.x, dtype=float)
    dx = np.asarray(inp.dx, dtype=float)
    om, big = inp.omega, inp.capital_omega
    x_dx = minkowski_dot(x, dx)
    x_x = minkowski_dot(x, x)
    dx_dx = minkowski_dot(dx, dx)
    denom = 4.0 / om + big * big * x_x
    if denom <= DEGENERATE_DENOMINATOR:
        raise DegenerateGeometryError(
            f"4/omega + Omega^2 x.x = {denom} at x={x}; explicit form invalid there"
        )
    radicand = big * big * x_dx * x_dx - denom * dx_dx
    if radicand < 0.0:
        raise SignatureError(f"displacement {dx} is not timelike (radicand {radicand})")
    return 2.0 * (-big * x_dx + math.sqrt(radicand)) / denom


def implicit_residual(inp: LineElementInput, ds: float) -> float:
    """Back-substitution check: ds^2 + omega * (d_w x).(d_w x) with
    d_w x = dx + (Omega/2) x ds.  Zero when ds solves the implicit
    definition."""
    x = np.asarray(inp.x, dtype=float)
    dx = np.asarray(inp.dx, dtype=float)
    d_omega_x = dx + 0.5 * inp.capital_omega * x * ds
    return ds * ds + inp.omega * minkowski_dot(d_omega_x, d_omega_x)


def ds_anisotropic(dt: float, weighted_velocity, v0: float = 1.0) -> float:
    """ds = dt * sqrt(1 - v0 * (weighted spatial velocity)^2) = dt / gamma.

    ``weighted_velocity`` holds the weighted time derivatives of the
    spatial coordinates.  Superluminal input raises SignatureError.
    """
    return dt / gamma_factor(weighted_velocity, v0)


def gamma_factor(weighted_velocity, v0: float = 1.0) -> float:
    """gamma = 1 / sqrt(1 - v0 (weighted spatial velocity)^2) >= 1."""
    w = np.atleast_1d(np.asarray(weighted_velocity, dtype=float))
    speed2 = v0 * float(np.dot(w, w))
    if speed2 >= 1.0:
        raise SignatureError(f"superluminal weighted velocity: v0*|vDx|^2 = {speed2} >= 1")
    return 1.0 / math.sqrt(1.0 - speed2)
