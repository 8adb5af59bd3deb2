"""Uncharged relativistic particle with worldline action weights.

The weighted velocity u^mu (the worldline derivative of x^mu conjugated
by sqrt(omega_mu)) obeys per-direction linear equations of motion

    dx^mu/ds = u^mu - (Omega_mu/2) x^mu
    du^mu/ds = -(Omega_mu/2) u^mu

with Omega_mu the log-derivative of the direction's weight.  The mapped
coordinates chi^mu = sqrt(omega_mu) x^mu are then affine in s, which is
both the closed-form solution and the oracle every integration is checked
against.  The velocity normalization sum_mu omega_mu u^mu u_mu = -1 is
conserved by the flow and monitored at every sample; drift beyond a hard
limit aborts the run.

Integration uses the classical fourth-order one-step method, fixed step by
default, optionally adaptive by step doubling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .calculus import ScalarWeight, minkowski_metric
from .errors import ConstraintDriftError, DomainError, SignatureError

NORMALIZATION_TOLERANCE = 1e-10
DEFAULT_HARD_DRIFT_LIMIT = 1e-6


@dataclass(frozen=True)
class ActionWeights:
    """Per-direction worldline weights omega_mu(s) plus the overall action
    weight omega_tilde(s).

    omega_tilde is fixed to 1 by the dynamics; setting another profile is
    allowed only with ``allow_nonunit_tilde`` (an exploration mode that
    disables the mass-shell bookkeeping, which assumes the consistent
    value).
    """

    profiles: tuple[ScalarWeight, ...]
    omega_tilde: ScalarWeight = field(default_factory=ScalarWeight.unit)
    isotropic: bool = False
    allow_nonunit_tilde: bool = False

    @property
    def dimension(self) -> int:
        return len(self.profiles)

    @staticmethod
    def unit(dimension: int) -> "ActionWeights":
        w = ScalarWeight.unit()
        return ActionWeights(profiles=(w,) * dimension, isotropic=True)

    @staticmethod
    def make_isotropic(weight: ScalarWeight, dimension: int) -> "ActionWeights":
        return ActionWeights(profiles=(weight,) * dimension, isotropic=True)

    @staticmethod
    def make_anisotropic(profiles) -> "ActionWeights":
        profiles = tuple(profiles)
        return ActionWeights(profiles=profiles, isotropic=len(set(map(id, profiles))) == 1)

    def omegas(self, s: float) -> np.ndarray:
        out = np.array([p(s) for p in self.profiles])
        if np.any(out <= 0.0):
            raise DomainError(f"action weight not positive at s={s}: {out}")
        return out

    def sqrt_omegas(self, s: float) -> np.ndarray:
        return np.sqrt(self.omegas(s))

    def half_log_derivatives(self, s: float) -> np.ndarray:
        """Omega_mu / 2 = d ln sqrt(omega_mu) / ds for every direction."""
        return np.array([p.sqrt_log_derivative(s) for p in self.profiles])

    def isotropic_omega(self, s: float) -> float:
        if not self.isotropic:
            raise DomainError("weights are anisotropic; no single omega(s)")
        return self.profiles[0](s)

    def tilde(self, s: float) -> float:
        value = self.omega_tilde(s)
        if not self.allow_nonunit_tilde and abs(value - 1.0) > 1e-14:
            raise DomainError(
                "omega_tilde != 1 requires the exploration flag; the dynamics fixes it to 1"
            )
        return value


@dataclass(frozen=True)
class WorldlineState:
    """One phase-space sample: parameter s, position x, weighted velocity u."""

    s: float
    x: np.ndarray
    u: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        if self.x.shape != self.u.shape or self.x.ndim != 1:
            raise ValueError("x and u must be D-vectors of equal length")

    @property
    def dimension(self) -> int:
        return self.x.size

    @staticmethod
    def from_spatial_velocity(s: float, x, u_spatial, weights: ActionWeights) -> "WorldlineState":
        """Solve u^0 from the normalization given the spatial weighted
        velocity (future-directed positive root)."""
        x = np.asarray(x, dtype=float)
        u_spatial = np.atleast_1d(np.asarray(u_spatial, dtype=float))
        om = weights.omegas(s)
        u0_sq = (1.0 + np.sum(om[1:] * u_spatial**2)) / om[0]
        u = np.concatenate([[math.sqrt(u0_sq)], u_spatial])
        return WorldlineState(s=s, x=x, u=u)


def normalization_residual(state: WorldlineState, weights: ActionWeights) -> float:
    """sum_mu omega_mu u^mu u_mu + 1; zero on properly normalized states."""
    om = weights.omegas(state.s)
    eta_diag = np.ones(state.dimension)
    eta_diag[0] = -1.0
    return float(np.sum(om * eta_diag * state.u**2) + 1.0)


@dataclass(frozen=True)
class Momentum:
    """Canonical momentum with the bare and effective masses."""

    p: np.ndarray
    m: float
    m_w: float


@dataclass(frozen=True)
class Trajectory:
    """Ordered worldline samples with per-sample diagnostics.

    ``diagnostics`` maps column name to an array of length n_samples; every
    sample carries every diagnostic.  ``weights`` records the action
    weights the trajectory was integrated with.
    """

    s: np.ndarray
    x: np.ndarray
    u: np.ndarray
    diagnostics: dict[str, np.ndarray]
    weights: ActionWeights | None = None

    def __post_init__(self) -> None:
        if np.any(np.diff(self.s) <= 0.0):
            raise ValueError("trajectory parameter must be strictly increasing")
        for name, column in self.diagnostics.items():
            if len(column) != len(self.s):
                raise ValueError(f"diagnostic {name!r} has wrong length")

    @property
    def n_samples(self) -> int:
        return len(self.s)

    @property
    def dimension(self) -> int:
        return self.x.shape[1]

    def state(self, i: int) -> WorldlineState:
        return WorldlineState(s=float(self.s[i]), x=self.x[i].copy(), u=self.u[i].copy())

    @property
    def final_state(self) -> WorldlineState:
        return self.state(self.n_samples - 1)

    def column_names(self) -> list[str]:
        d = self.dimension
        return (
            ["s"]
            + [f"x{mu}" for mu in range(d)]
            + [f"u{mu}" for mu in range(d)]
            + list(self.diagnostics)
        )

    def to_csv(self, path) -> None:
        columns = [self.s] + [self.x[:, mu] for mu in range(self.dimension)]
        columns += [self.u[:, mu] for mu in range(self.dimension)]
        columns += [self.diagnostics[name] for name in self.diagnostics]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.column_names()) + "\n")
            for row in zip(*columns):
                fh.write(",".join(f"{val:.17g}" for val in row) + "\n")


@dataclass(frozen=True)
class StepControl:
    """Integration step policy: fixed step by default, step-doubling
    adaptivity on request.  ``hard_drift_limit`` aborts the run when the
    velocity normalization drifts beyond it."""

    step: float = 1e-3
    adaptive: bool = False
    tolerance: float = 1e-12
    hard_drift_limit: float = DEFAULT_HARD_DRIFT_LIMIT
    max_steps: int = 2_000_000


# --- Equations of motion ------------------------------------------------------


def _rhs(s: float, x: np.ndarray, u: np.ndarray, weights: ActionWeights):
    half = weights.half_log_derivatives(s)
    return u - half * x, -half * u


def eom_rhs_isotropic(state: WorldlineState, weights: ActionWeights):
    """First-order reduction of the isotropic weighted geodesic equation."""
    if not weights.isotropic:
        raise DomainError("isotropic right-hand side called with anisotropic weights")
    return _rhs(state.s, state.x, state.u, weights)


def eom_rhs_anisotropic(state: WorldlineState, weights: ActionWeights):
    """Per-direction right-hand side with Omega_mu = d ln omega_mu / ds."""
    return _rhs(state.s, state.x, state.u, weights)


# --- Generic one-step integration --------------------------------------------


def rk4_step(rhs: Callable, s: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(s, y)
    k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(s + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_ode(rhs: Callable, s_span, y0: np.ndarray, control: StepControl):
    """Drive rk4_step over s_span; returns (s_samples, y_samples).

    Fixed mode lands exactly on a uniform grid.  Adaptive mode compares one
    full step against two half steps and keeps the local error estimate
    below control.tolerance, halving or doubling the step as needed.
    """
    s0, s1 = float(s_span[0]), float(s_span[1])
    if s1 <= s0:
        raise ValueError("s_span must be increasing")
    y = np.asarray(y0, dtype=float).copy()
    if not control.adaptive:
        n = max(1, int(round((s1 - s0) / control.step)))
        if n > control.max_steps:
            raise ValueError(f"{n} steps exceed max_steps={control.max_steps}")
        s_values = np.linspace(s0, s1, n + 1)
        ys = [y.copy()]
        for i in range(n):
            y = rk4_step(rhs, s_values[i], y, s_values[i + 1] - s_values[i])
            ys.append(y.copy())
        return s_values, np.array(ys)

    s = s0
    h = control.step
    out_s = [s0]
    out_y = [y.copy()]
    steps = 0
    while s < s1 - 1e-15 * (s1 - s0):
        h = min(h, s1 - s)
        big = rk4_step(rhs, s, y, h)
        half = rk4_step(rhs, s, y, 0.5 * h)
        small = rk4_step(rhs, s + 0.5 * h, half, 0.5 * h)
        err = float(np.max(np.abs(small - big))) / 15.0
        if err > control.tolerance and h > 1e-12:
            h *= 0.5
            continue
        s += h
        y = small
        out_s.append(s)
        out_y.append(y.copy())
        if err < control.tolerance / 32.0:
            h *= 2.0
        steps += 1
        if steps > control.max_steps:
            raise ValueError("adaptive integration exceeded max_steps")
    return np.array(out_s), np.array(out_y)


# --- Particle integration ------------------------------------------------------


def integrate(
    initial: WorldlineState,
    weights: ActionWeights,
    s_span,
    control: StepControl | None = None,
    mass: float = 1.0,
) -> Trajectory:
    """Integrate the free equations of motion and attach diagnostics.

    The initial state must satisfy the velocity normalization to 1e-10
    (use WorldlineState.from_spatial_velocity to construct one).  Each
    sample records the normalization residual, the mass-shell residual and
    the deviation of the mapped coordinates from their affine oracle.
    """
    control = control or StepControl()
    initial_residual = abs(normalization_residual(initial, weights))
    if initial_residual > NORMALIZATION_TOLERANCE:
        raise DomainError(
            f"initial state violates the normalization by {initial_residual:.3e}; "
            "renormalize u^0 from the spatial velocity first"
        )
    d = initial.dimension

    def rhs(s, y):
        dx, du = _rhs(s, y[:d], y[d:], weights)
        return np.concatenate([dx, du])

    y0 = np.concatenate([initial.x, initial.u])
    s_values, ys = integrate_ode(rhs, s_span, y0, control)
    xs = ys[:, :d]
    us = ys[:, d:]

    # affine oracle in the mapped coordinates, anchored on the initial data
    sqrt_w0 = weights.sqrt_omegas(initial.s)
    chi0 = sqrt_w0 * initial.x
    chi_dot0 = sqrt_w0 * initial.u

    constraint = np.empty(len(s_values))
    shell = np.empty(len(s_values))
    oracle = np.empty(len(s_values))
    for i, s in enumerate(s_values):
        state = WorldlineState(s=float(s), x=xs[i], u=us[i])
        constraint[i] = normalization_residual(state, weights)
        shell[i] = mass_shell_residual(canonical_momentum(state, weights, mass), weights, float(s))
        chi = weights.sqrt_omegas(float(s)) * xs[i]
        oracle[i] = float(np.max(np.abs(chi - (chi0 + chi_dot0 * (s - initial.s)))))
        if abs(constraint[i]) > control.hard_drift_limit:
            raise ConstraintDriftError(
                f"normalization drift {constraint[i]:.3e} exceeded the hard limit "
                f"{control.hard_drift_limit:.1e} at s={s}; state x={xs[i]}, u={us[i]}",
                s=float(s),
                state=state,
            )

    return Trajectory(
        s=s_values,
        x=xs,
        u=us,
        diagnostics={
            "constraint_residual": constraint,
            "shell_residual": shell,
            "oracle_deviation": oracle,
        },
        weights=weights,
    )


def integer_picture_map(obj, weights: ActionWeights) -> np.ndarray:
    """chi^mu = sqrt(omega_mu(s)) x^mu for a state or a whole trajectory."""
    if isinstance(obj, WorldlineState):
        return weights.sqrt_omegas(obj.s) * obj.x
    chi = np.empty_like(obj.x)
    for i, s in enumerate(obj.s):
        chi[i] = weights.sqrt_omegas(float(s)) * obj.x[i]
    return chi


def closed_form_position(initial: WorldlineState, weights: ActionWeights, s) -> np.ndarray:
    """Exact solution x(s) = chi_affine(s) / sqrt(omega(s)); the
    integer-picture oracle used to validate integrations."""
    sqrt_w0 = weights.sqrt_omegas(initial.s)
    chi0 = sqrt_w0 * initial.x
    chi_dot0 = sqrt_w0 * initial.u
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty((len(s), initial.dimension))
    for i, si in enumerate(s):
        out[i] = (chi0 + chi_dot0 * (si - initial.s)) / weights.sqrt_omegas(float(si))
    return out if out.shape[0] > 1 else out[0]


def canonical_momentum(state: WorldlineState, weights: ActionWeights, mass: float) -> Momentum:
    """Isotropic: p = omega_tilde m u with effective mass
    m_w = omega_tilde m / sqrt(omega); anisotropic: p = m u with m_w = m
    (the dispersion then weighs the momentum square instead)."""
    if weights.isotropic:
        tilde = weights.tilde(state.s)
        p = tilde * mass * state.u
        m_w = tilde * mass / math.sqrt(weights.isotropic_omega(state.s))
    else:
        p = mass * state.u
        m_w = mass
    return Momentum(p=p, m=mass, m_w=m_w)


def integer_picture_momentum(state: WorldlineState, weights: ActionWeights, mass: float) -> np.ndarray:
    """p_bar^mu = sqrt(omega_mu) p^mu; conserved along solutions."""
    return weights.sqrt_omegas(state.s) * canonical_momentum(state, weights, mass).p


def mass_shell_residual(momentum: Momentum, weights: ActionWeights, s: float) -> float:
    """|p.p + m_w^2| (isotropic) or |omega.p.p + m^2| (anisotropic)."""
    d = len(momentum.p)
    eta_diag = np.ones(d)
    eta_diag[0] = -1.0
    if weights.isotropic:
        p_sq = float(np.sum(eta_diag * momentum.p**2))
        return abs(p_sq + momentum.m_w**2)
    om = weights.omegas(s)
    return abs(float(np.sum(om * eta_diag * momentum.p**2)) + momentum.m**2)


def dirac_hamiltonian(
    state: WorldlineState, momentum: Momentum, weights: ActionWeights, mass: float
) -> float:
    """Constraint Hamiltonian f * (p.p + m_w^2) with the multiplier f fixed
    so the Hamilton flow for x returns the weighted velocity exactly:
    f = sqrt(-omega u.u) / (2 m omega_tilde).  Vanishes weakly on
    normalized states.
    """
    om = weights.omegas(state.s)
    eta_diag = np.ones(state.dimension)
    eta_diag[0] = -1.0
    u_sq_weighted = float(np.sum(om * eta_diag * state.u**2))
    if u_sq_weighted >= 0.0:
        raise SignatureError(f"weighted velocity square {u_sq_weighted} is not timelike")
    f = math.sqrt(-u_sq_weighted) / (2.0 * mass * weights.tilde(state.s))
    d = len(momentum.p)
    eta = np.ones(d)
    eta[0] = -1.0
    p_sq = float(np.sum(eta * momentum.p**2))
    return f * (p_sq + momentum.m_w**2)


def hamilton_velocity(
    state: WorldlineState, momentum: Momentum, weights: ActionWeights, mass: float
) -> np.ndarray:
    """2 f p^mu, the Hamilton-flow velocity; equals u^mu on the constraint
    surface (cross-check against the Lagrangian right-hand side)."""
    om = weights.omegas(state.s)
    eta_diag = np.ones(state.dimension)
    eta_diag[0] = -1.0
    u_sq_weighted = float(np.sum(om * eta_diag * state.u**2))
    if u_sq_weighted >= 0.0:
        raise SignatureError(f"weighted velocity square {u_sq_weighted} is not timelike")
    f = math.sqrt(-u_sq_weighted) / (2.0 * mass * weights.tilde(state.s))
    return 2.0 * f * momentum.p


# --- Nonrelativistic limit ------------------------------------------------------


@dataclass(frozen=True)
class NonrelComparison:
    """Outcome of comparing a slow trajectory against the weighted
    nonrelativistic equation of motion with matched initial data."""

    max_deviation: float
    motion_scale: float
    relative_deviation: float
    velocity_scale: float


def nonrel_limit_compare(trajectory: Trajectory, mw) -> NonrelComparison:
    """Integrate the weighted nonrelativistic equation (vanishing weighted
    time-acceleration of the spatial coordinates, weight v_0(t) from the
    measure) with matched initial position and weighted velocity, and
    report the spatial deviation relative to the distance travelled.

    The trajectory must be slow: max |dchi^i/dchi^0| < 0.1.
    """
    weights = trajectory.weights
    if weights is None:
        raise DomainError("trajectory carries no action weights")
    chi = integer_picture_map(trajectory, weights)
    dchi = np.diff(chi, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.abs(dchi[:, 1:]) / np.abs(dchi[:, :1])
    velocity_scale = float(np.nanmax(ratios))
    if not velocity_scale < 0.1:
        raise DomainError(
            f"trajectory not in the nonrelativistic regime: max |dchi^i/dchi^0| = {velocity_scale:.3f}"
        )

    t = trajectory.x[:, 0]
    if np.any(np.diff(t) <= 0.0):
        raise DomainError("coordinate time must be strictly increasing for the comparison")
    time_profile = mw.profiles[0]
    d_spatial = trajectory.dimension - 1

    def rhs(tk, y):
        half = time_profile.sqrt_log_derivative(tk)
        xk = y[:d_spatial]
        qk = y[d_spatial:]
        return np.concatenate([qk - half * xk, -half * qk])

    # matched initial data: same spatial position and weighted velocity
    y = np.concatenate([trajectory.x[0, 1:], trajectory.u[0, 1:]])
    nonrel = np.empty((len(t), d_spatial))
    nonrel[0] = y[:d_spatial]
    for k in range(len(t) - 1):
        y = rk4_step(rhs, t[k], y, t[k + 1] - t[k])
        nonrel[k + 1] = y[:d_spatial]

    deviation = np.linalg.norm(trajectory.x[:, 1:] - nonrel, axis=1)
    travelled = np.linalg.norm(trajectory.x[:, 1:] - trajectory.x[0, 1:], axis=1)
    max_dev = float(np.max(deviation))
    scale = float(np.max(travelled))
    relative = 0.0 if scale == 0.0 and max_dev == 0.0 else max_dev / scale if scale > 0.0 else math.inf
    return NonrelComparison(
        max_deviation=max_dev,
        motion_scale=scale,
        relative_deviation=relative,
        velocity_scale=velocity_scale,
    )
