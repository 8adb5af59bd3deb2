"""Charged particle in a prescribed multiscale Maxwell field.

The field strength carries the sqrt-weighted derivative,
F_mu_nu = D_mu A_nu - D_nu A_mu, and the particle couples through the
position-dependent effective charge e(x) = e0 sqrt(v(x)).  The equations
of motion

    dx^mu/ds = u^mu,    m du_mu/ds = e(x) u^nu F_mu_nu

require the compatibility condition: the time direction must carry no
measure weight and the worldline weights must be trivial (the geometry is
multiscale only along spatial directions).  Configurations violating it
are rejected with a structured error, never silently accepted.

The field is prescribed (external); back-reaction is out of scope.  Gauge
fields are sympy-backed so that all partial derivatives, the
integer-picture curl and the Maxwell source are closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import sympy

from .calculus import minkowski_metric
from .errors import CompatibilityError, DomainError
from .expressions import compile_expression
from .free_particle import (
    ActionWeights,
    StepControl,
    Trajectory,
    WorldlineState,
    integrate_ode,
    normalization_residual,
)
from .measure import MeasureWeight, SmoothedDelta

CONFIG_VARIABLE_MAP = {"t": 0, "x1": 1, "x2": 2, "x3": 3}


def _coordinate_symbols(dimension: int) -> tuple[sympy.Symbol, ...]:
    return tuple(sympy.Symbol(f"x{mu}", real=True) for mu in range(dimension))


def _sqrt_weight_expr(measure: MeasureWeight, syms) -> sympy.Expr:
    out = sympy.Integer(1)
    for profile, sym in zip(measure.profiles, syms):
        out = out * profile.sympy_expr(sym)
    return sympy.sqrt(out)


def _drop_point_singularities(expr: sympy.Expr) -> sympy.Expr:
    """Derivatives of |x|-shaped weights leave DiracDelta terms that vanish
    everywhere off the (excluded) singular point; drop them before
    lambdifying."""
    return expr.replace(sympy.DiracDelta, lambda *args: sympy.Integer(0))


def lambdify_clean(syms, exprs):
    """lambdify with point-singular terms removed from every entry."""
    if isinstance(exprs, sympy.MatrixBase):
        exprs = exprs.applyfunc(_drop_point_singularities)
    else:
        exprs = _map_nested(exprs)
    return sympy.lambdify(syms, exprs, modules="numpy")


def _map_nested(obj):
    if isinstance(obj, (list, tuple)):
        return [_map_nested(item) for item in obj]
    return _drop_point_singularities(sympy.sympify(obj))


@dataclass(frozen=True)
class GaugeField:
    """Abelian gauge field with closed-form components and partials.

    Components are sympy expressions in the coordinate symbols x0..x{D-1};
    every derivative used downstream (field strength, integer-picture
    curl, Maxwell source, cyclic sums) is exact symbolic differentiation,
    lambdified once at construction.
    """

    measure: MeasureWeight
    component_exprs: tuple[sympy.Expr, ...]

    def __post_init__(self) -> None:
        if len(self.component_exprs) != self.measure.dimension:
            raise ValueError("need one component expression per coordinate")

    @property
    def dimension(self) -> int:
        return self.measure.dimension

    @staticmethod
    def from_expressions(sources: Sequence[str], measure: MeasureWeight) -> "GaugeField":
        """Build from config-style strings in the variables t, x1..x3."""
        d = measure.dimension
        syms = _coordinate_symbols(d)
        exprs = []
        for src in sources:
            parsed = compile_expression(str(src))
            expr = parsed.sympy_expr
            subs = {
                sympy.Symbol(name, real=True): syms[idx]
                for name, idx in CONFIG_VARIABLE_MAP.items()
                if idx < d
            }
            exprs.append(expr.subs(subs))
        return GaugeField(measure=measure, component_exprs=tuple(exprs))

    @staticmethod
    def uniform_electric(strength: float, measure: MeasureWeight) -> "GaugeField":
        """A = (-E x^1, 0, ...): constant field F_01 = E when v = 1."""
        syms = _coordinate_symbols(measure.dimension)
        comps = [sympy.Integer(0)] * measure.dimension
        comps[0] = -sympy.Float(strength) * syms[1]
        return GaugeField(measure=measure, component_exprs=tuple(comps))

    @staticmethod
    def uniform_magnetic(strength: float, measure: MeasureWeight) -> "GaugeField":
        """A = (0, 0, B x^1, 0): constant F_12 = B when v = 1 (needs D >= 3)."""
        if measure.dimension < 3:
            raise ValueError("uniform magnetic preset needs at least 2 spatial dimensions")
        syms = _coordinate_symbols(measure.dimension)
        comps = [sympy.Integer(0)] * measure.dimension
        comps[2] = sympy.Float(strength) * syms[1]
        return GaugeField(measure=measure, component_exprs=tuple(comps))

    def component_functions(self):
        syms = _coordinate_symbols(self.dimension)
        return lambdify_clean(syms, sympy.Matrix(self.component_exprs))

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        func = _cached(self, "_A_func", self.component_functions)
        return np.asarray(func(*x), dtype=float).reshape(self.dimension)


def _cached(obj, attr, builder):
    cache = obj.__dict__.get(attr)
    if cache is None:
        cache = builder()
        object.__setattr__(obj, attr, cache)
    return cache


@dataclass(frozen=True)
class FieldStrength:
    """Weighted field strength F_mu_nu = D_mu A_nu - D_nu A_mu.

    Antisymmetric by construction: only the upper triangle is computed and
    mirrored.  The integer-picture identity sqrt(v) F = curl(sqrt(v) A)
    is available as an independent evaluation route.
    """

    field: GaugeField

    @property
    def dimension(self) -> int:
        return self.field.dimension

    def _builders(self):
        d = self.dimension
        syms = _coordinate_symbols(d)
        A = self.field.component_exprs
        sqrt_v = _sqrt_weight_expr(self.field.measure, syms)
        log_grad = [sympy.diff(sympy.log(sqrt_v), s) for s in syms]
        F = sympy.zeros(d, d)
        for mu in range(d):
            for nu in range(mu + 1, d):
                # expanded form: dA + A dln(sqrt v), finite where sqrt(v) underflows
                entry = (
                    sympy.diff(A[nu], syms[mu])
                    - sympy.diff(A[mu], syms[nu])
                    + A[nu] * log_grad[mu]
                    - A[mu] * log_grad[nu]
                )
                F[mu, nu] = entry
                F[nu, mu] = -entry
        script_F = sympy.zeros(d, d)
        for mu in range(d):
            for nu in range(mu + 1, d):
                # literal product route through the mapped field sqrt(v) A
                entry = sympy.diff(sqrt_v * A[nu], syms[mu]) - sympy.diff(sqrt_v * A[mu], syms[nu])
                script_F[mu, nu] = entry
                script_F[nu, mu] = -entry
        return {
            "F": lambdify_clean(syms, F),
            "script_F": lambdify_clean(syms, script_F),
            "F_exprs": F,
            "syms": syms,
            "sqrt_v": sqrt_v,
            "log_grad": log_grad,
        }

    def _built(self):
        return _cached(self, "_build_cache", self._builders)

    def evaluate(self, x) -> np.ndarray:
        """F_mu_nu at a spacetime point; exactly antisymmetric."""
        x = np.asarray(x, dtype=float)
        out = np.asarray(self._built()["F"](*x), dtype=float)
        return out.reshape(self.dimension, self.dimension)

    def integer_picture(self, x) -> np.ndarray:
        """curl of the mapped field sqrt(v) A, evaluated independently;
        equals sqrt(v(x)) * F(x) on analytic fields."""
        x = np.asarray(x, dtype=float)
        out = np.asarray(self._built()["script_F"](*x), dtype=float)
        return out.reshape(self.dimension, self.dimension)

    def symbolic(self):
        """(coordinate symbols, F matrix, sqrt(v), grad ln sqrt(v)) for
        downstream symbolic work."""
        built = self._built()
        return built["syms"], built["F_exprs"], built["sqrt_v"], built["log_grad"]


def field_strength(field: GaugeField, x) -> np.ndarray:
    """Evaluate F_mu_nu(x) for a gauge field."""
    return FieldStrength(field=field).evaluate(x)


def maxwell_source_function(strength: FieldStrength):
    """Closed-form Maxwell source J^mu = D_nu F^{mu nu} of a prescribed
    field; the consistent current for manufactured-solution checks."""
    syms, F, sqrt_v, _ = strength.symbolic()
    d = strength.dimension
    eta = minkowski_metric(d)
    F_upper = sympy.Matrix(eta) * F * sympy.Matrix(eta)
    J = []
    for mu in range(d):
        total = sympy.Integer(0)
        for nu in range(d):
            # (1/sqrt v) d_nu (sqrt v F^{mu nu})
            total += sympy.diff(sqrt_v * F_upper[mu, nu], syms[nu]) / sqrt_v
        J.append(total)
    func = lambdify_clean(syms, sympy.Matrix(J))

    def source(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(func(*x), dtype=float).reshape(d)

    return source


# --- particle ----------------------------------------------------------------------


@dataclass(frozen=True)
class ChargedParticleSpec:
    """Mass, bare charge and initial state of one charged particle."""

    mass: float
    charge: float
    initial: WorldlineState

    def __post_init__(self) -> None:
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")


def effective_charge(spec: ChargedParticleSpec, measure: MeasureWeight, x) -> float:
    """Position-dependent coupling e(x) = e0 sqrt(v(x))."""
    return spec.charge * measure.sqrt_weight(x)


def _require_compatible(measure: MeasureWeight) -> None:
    if not measure.is_spatial_only:
        raise CompatibilityError(
            "charged-particle coupling requires v_0(t) = 1 and unit worldline weights "
            "(geometry multiscale only along spatial directions); the configured time "
            "profile is not constant"
        )


def lorentz_rhs(
    state: WorldlineState,
    spec: ChargedParticleSpec,
    strength: FieldStrength,
    measure: MeasureWeight,
):
    """dx^mu/ds = u^mu and du^mu/ds = (e(x)/m) eta^{mu alpha} F_alpha_nu u^nu."""
    _require_compatible(measure)
    F = strength.evaluate(state.x)
    e_over_m = effective_charge(spec, measure, state.x) / spec.mass
    du_lower = e_over_m * (F @ state.u)
    du = du_lower.copy()
    du[0] = -du[0]
    return state.u.copy(), du


def integrate_charged(
    spec: ChargedParticleSpec,
    field: GaugeField,
    measure: MeasureWeight,
    s_span,
    control: StepControl | None = None,
) -> Trajectory:
    """Integrate the Lorentz-force equations of motion.

    Diagnostics per sample: velocity-normalization residual, mass-shell
    residual, and the equations-of-motion residual
    |m du_mu/ds - e u^nu F_mu_nu| recomputed from a fourth-order finite
    difference of the stored velocity samples (independent of the
    integrator's own right-hand side).
    """
    _require_compatible(measure)
    control = control or StepControl()
    initial = spec.initial
    d = initial.dimension
    unit_weights = ActionWeights.unit(d)
    res0 = abs(normalization_residual(initial, unit_weights))
    if res0 > 1e-10:
        raise DomainError(f"initial state violates u.u = -1 by {res0:.3e}")
    strength = FieldStrength(field=field)

    def rhs(s, y):
        state = WorldlineState(s=float(s), x=y[:d], u=y[d:])
        dx, du = lorentz_rhs(state, spec, strength, measure)
        return np.concatenate([dx, du])

    y0 = np.concatenate([initial.x, initial.u])
    s_values, ys = integrate_ode(rhs, s_span, y0, control)
    xs, us = ys[:, :d], ys[:, d:]

    eta_diag = np.ones(d)
    eta_diag[0] = -1.0
    constraint = np.sum(eta_diag * us**2, axis=1) + 1.0
    shell = spec.mass**2 * np.abs(constraint)
    eom = _eom_residual(s_values, xs, us, spec, strength, measure)

    from .errors import ConstraintDriftError

    worst = np.argmax(np.abs(constraint))
    if abs(constraint[worst]) > control.hard_drift_limit:
        raise ConstraintDriftError(
            f"normalization drift {constraint[worst]:.3e} exceeded "
            f"{control.hard_drift_limit:.1e} at s={s_values[worst]}",
            s=float(s_values[worst]),
            state=WorldlineState(s=float(s_values[worst]), x=xs[worst], u=us[worst]),
        )

    return Trajectory(
        s=s_values,
        x=xs,
        u=us,
        diagnostics={
            "constraint_residual": constraint,
            "shell_residual": shell,
            "eom_residual": eom,
        },
        weights=unit_weights,
    )


def _eom_residual(s_values, xs, us, spec, strength, measure) -> np.ndarray:
    """|m du_mu/ds - e(x) u^nu F_mu_nu| with du/ds from a five-point stencil."""
    n, d = us.shape
    eta_diag = np.ones(d)
    eta_diag[0] = -1.0
    u_lower = us * eta_diag
    du = np.empty_like(u_lower)
    h = s_values[1] - s_values[0] if n > 1 else 1.0
    if n >= 5:
        du[2:-2] = (u_lower[:-4] - 8 * u_lower[1:-3] + 8 * u_lower[3:-1] - u_lower[4:]) / (12 * h)
        du[:2] = np.gradient(u_lower, h, axis=0, edge_order=2)[:2]
        du[-2:] = np.gradient(u_lower, h, axis=0, edge_order=2)[-2:]
    else:
        du = np.gradient(u_lower, h, axis=0, edge_order=1)
    out = np.empty(n)
    for i in range(n):
        F = strength.evaluate(xs[i])
        force = effective_charge(spec, measure, xs[i]) * (F @ us[i])  # u^nu F_mu_nu
        out[i] = np.max(np.abs(spec.mass * du[i] - force))
    return out


# --- compatibility diagnostic -------------------------------------------------------


def xi_matrix(weights: ActionWeights, state: WorldlineState) -> np.ndarray:
    """Jacobian of the integer-picture coordinate map along the worldline,
    xi_mu^sigma = sqrt(w_sigma) [delta_mu^sigma + (Omega_sigma/2) x^sigma / dx^mu_ds].

    Identity exactly when all worldline weights are 1; any deviation flags
    incompatibility between particle mechanics and the mapped field theory.
    """
    d = state.dimension
    sqrt_w = weights.sqrt_omegas(state.s)
    half = weights.half_log_derivatives(state.s)
    xdot = state.u - half * state.x
    if np.any(np.abs(xdot) < 1e-14):
        raise DomainError(f"vanishing coordinate velocity {xdot}; xi matrix undefined")
    xi = np.zeros((d, d))
    for mu in range(d):
        for sigma in range(d):
            xi[mu, sigma] = sqrt_w[sigma] * (
                (1.0 if mu == sigma else 0.0) + half[sigma] * state.x[sigma] / xdot[mu]
            )
    return xi


def xi_identity_deviation(weights: ActionWeights, state: WorldlineState) -> float:
    """max |xi - identity|; zero iff the integer picture commutes with the
    field-theory coordinates."""
    d = state.dimension
    return float(np.max(np.abs(xi_matrix(weights, state) - np.eye(d))))


# --- density currents ----------------------------------------------------------------


@dataclass(frozen=True)
class PointSource:
    """One mollified point source: coefficient, smoothed density, velocity."""

    coefficient: float
    delta: SmoothedDelta
    velocity: tuple[float, ...]  # spatial dx^i/dt


@dataclass(frozen=True)
class CurrentDensity:
    """Superposition of mollified point currents J^mu = rho xdot^mu with
    xdot^0 = 1 (time parametrization)."""

    kind: str  # "charge" or "mass"
    measure: MeasureWeight
    sources: tuple[PointSource, ...]

    @property
    def dimension(self) -> int:
        return self.measure.dimension

    def rho(self, xs) -> float:
        return float(sum(src.coefficient * src.delta.value(xs) for src in self.sources))

    def current(self, xs) -> np.ndarray:
        """J^mu at a spatial point: (rho, rho xdot^i) summed over sources."""
        out = np.zeros(self.dimension)
        for src in self.sources:
            density = src.coefficient * src.delta.value(xs)
            out[0] += density
            out[1:] += density * np.asarray(src.velocity)
        return out

    def rho_on_axes(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Vectorized density on a tensor-product spatial grid (separable
        per-axis factors)."""
        shape = tuple(len(a) for a in axes)
        out = np.zeros(shape)
        for src in self.sources:
            factors = [src.delta.value_on_axis(i, a) for i, a in enumerate(axes)]
            term = src.coefficient * factors[0]
            for f in factors[1:]:
                term = np.multiply.outer(term, f)
            out += term
        return out

    def current_on_axes(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """J^mu on a spatial grid; shape grid_shape + (D,)."""
        shape = tuple(len(a) for a in axes)
        out = np.zeros(shape + (self.dimension,))
        for src in self.sources:
            factors = [src.delta.value_on_axis(i, a) for i, a in enumerate(axes)]
            term = src.coefficient * factors[0]
            for f in factors[1:]:
                term = np.multiply.outer(term, f)
            out[..., 0] += term
            for i, vel in enumerate(src.velocity):
                out[..., 1 + i] += term * vel
        return out


def build_currents(
    specs: Sequence[ChargedParticleSpec], measure: MeasureWeight, sigma: float
) -> tuple[CurrentDensity, CurrentDensity]:
    """Charge and mass density currents of a set of particles, each taken at
    its spec's current state.  Charges are the effective values at the
    particle positions, e_n = e0 sqrt(v(x_n)); masses are the bare m_n."""
    if sigma <= 0.0:
        raise ValueError("mollifier width sigma must be positive")
    charge_sources = []
    mass_sources = []
    for spec in specs:
        state = spec.initial
        spatial = tuple(float(c) for c in state.x[1:])
        if abs(state.u[0]) < 1e-14:
            raise DomainError("u^0 = 0; cannot form dx/dt")
        velocity = tuple(float(ui / state.u[0]) for ui in state.u[1:])
        delta = SmoothedDelta(measure=measure, center=spatial, sigma=sigma)
        e_n = spec.charge * math.sqrt(measure.spatial_weight(np.asarray(spatial)))
        charge_sources.append(PointSource(coefficient=e_n, delta=delta, velocity=velocity))
        mass_sources.append(PointSource(coefficient=spec.mass, delta=delta, velocity=velocity))
    return (
        CurrentDensity(kind="charge", measure=measure, sources=tuple(charge_sources)),
        CurrentDensity(kind="mass", measure=measure, sources=tuple(mass_sources)),
    )


def spec_at_state(spec: ChargedParticleSpec, state: WorldlineState) -> ChargedParticleSpec:
    """The same particle snapshotted at another worldline state."""
    return replace(spec, initial=state)
