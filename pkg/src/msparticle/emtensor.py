"""Energy-momentum tensors on grids and the continuity chain.

Particle tensor:  pT^{mu nu} = rho_m gamma u^mu u^nu = J_m^mu u^nu
Maxwell tensor:   fT_{mu nu} = -1/4 F.F eta_{mu nu} + F_mu^sigma F_nu_sigma

and the weighted continuity laws they obey (full-weight divergence):

    div J_m                 = 0                       (mass conservation)
    div pT^mu_nu            = -J_e^mu F_mu_nu         (particle exchange)
    div fT^mu_nu            = +J_e^mu F_mu_nu         (Maxwell exchange)
    div (pT + fT)^mu_nu     = 0                       (total, by linearity)

Point sources are mollified, so every continuity statement is verified as
a convergence study in the grid spacing h (and the mollifier width sigma),
never as a fixed-tolerance assert.  The Maxwell law is exact in the
continuum whenever the supplied current is the one actually sourcing F;
the checker recomputes that consistency residual and flags (without
failing) inconsistent inputs.

The cyclic relation is asserted in the sqrt-weight form, which is an
exact identity through the mapped field strength; the full-weight form is
evaluated and reported only, since it does not vanish for generic
multiscale weights.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import sympy

from .calculus import GridField, minkowski_metric
from .charged_particle import (
    ChargedParticleSpec,
    CurrentDensity,
    FieldStrength,
    build_currents,
    lambdify_clean,
    spec_at_state,
)
from .errors import DomainError
from .free_particle import Trajectory, WorldlineState
from .measure import MeasureWeight


@dataclass(frozen=True)
class SlabSpec:
    """Uniform spacetime sampling: time axis plus spatial axes."""

    times: np.ndarray
    spatial_axes: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        for axis in (self.times, *self.spatial_axes):
            steps = np.diff(axis)
            if len(steps) < 4:
                raise DomainError("slab axes need at least 5 nodes (insufficient time slices)")
            if not np.allclose(steps, steps[0], rtol=1e-12, atol=0.0):
                raise ValueError("slab axes must be uniform")

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        return (self.times, *self.spatial_axes)

    @property
    def dimension(self) -> int:
        return 1 + len(self.spatial_axes)

    def grid(self, values: np.ndarray) -> GridField:
        return GridField(
            origin=tuple(float(a[0]) for a in self.axes),
            spacing=tuple(float(a[1] - a[0]) for a in self.axes),
            values=values,
            grid_ndim=self.dimension,
        )

    def sample_vector(self, func) -> GridField:
        """Sample a callable point -> (D,) on every node."""
        shape = tuple(len(a) for a in self.axes)
        values = np.empty(shape + (self.dimension,))
        for idx in np.ndindex(*shape):
            point = np.array([a[j] for a, j in zip(self.axes, idx)])
            values[idx] = func(point)
        return self.grid(values)

    def sample_matrix(self, func) -> GridField:
        shape = tuple(len(a) for a in self.axes)
        d = self.dimension
        values = np.empty(shape + (d, d))
        for idx in np.ndindex(*shape):
            point = np.array([a[j] for a, j in zip(self.axes, idx)])
            values[idx] = func(point)
        return self.grid(values)


def sample_field_strength(strength: FieldStrength, slab: SlabSpec) -> GridField:
    """F_mu_nu on every slab node, via the lambdified closed form."""
    return slab.sample_matrix(strength.evaluate)


# --- tensors -------------------------------------------------------------------


def particle_emt(mass_current: CurrentDensity, u: np.ndarray, spatial_axes) -> np.ndarray:
    """pT^{mu nu} = rho_m gamma u^mu u^nu with gamma = ds/dt = 1/u^0;
    exactly symmetric by construction."""
    u = np.asarray(u, dtype=float)
    rho = mass_current.rho_on_axes(spatial_axes)
    # scale the exactly-symmetric outer product; scaling preserves symmetry
    return np.einsum("...,mn->...mn", rho / u[0], np.outer(u, u))


def particle_emt_current_route(
    mass_current: CurrentDensity, u: np.ndarray, spatial_axes
) -> np.ndarray:
    """Independent construction J_m^mu u^nu; agrees with the symmetric
    product to rounding."""
    J = mass_current.current_on_axes(spatial_axes)
    return np.einsum("...m,n->...mn", J, np.asarray(u, dtype=float))


def maxwell_emt(F: np.ndarray | GridField) -> np.ndarray | GridField:
    """fT^{mu nu} from sampled F_mu_nu (any leading grid shape)."""
    container = F if isinstance(F, GridField) else None
    F = F.values if isinstance(F, GridField) else np.asarray(F, dtype=float)
    d = F.shape[-1]
    eta = minkowski_metric(d)
    F_upper = np.einsum("ma,...ab,bn->...mn", eta, F, eta)
    invariant = np.einsum("...st,...st->...", F_upper, F)
    F_mixed = np.einsum("...ma,an->...mn", F, eta)  # F_mu^nu
    T_lower = (
        -0.25 * invariant[..., None, None] * eta
        + np.einsum("...ms,...ns->...mn", F_mixed, F)
    )
    T_upper = np.einsum("ma,...ab,bn->...mn", eta, T_lower, eta)
    if container is not None:
        return container.with_values(T_upper)
    return T_upper


def mixed_from_upper(T_upper: np.ndarray) -> np.ndarray:
    """T^mu_nu = T^{mu alpha} eta_{alpha nu}."""
    d = T_upper.shape[-1]
    return np.einsum("...ma,an->...mn", T_upper, minkowski_metric(d))


def trace_mixed(T_upper: np.ndarray) -> np.ndarray:
    return np.einsum("...mm->...", mixed_from_upper(T_upper))


# --- weighted divergences --------------------------------------------------------


def _log_weight_gradient(measure: MeasureWeight, slab_grid: GridField, mu: int) -> np.ndarray:
    """d ln v_mu / dx^mu on the mu-th axis, broadcast over the grid."""
    coords = slab_grid.axis_coordinates(mu)
    logv = 2.0 * np.asarray(measure.profiles[mu].sqrt_log_derivative(coords), dtype=float)
    if logv.ndim == 0:
        logv = np.full(len(coords), float(logv))
    shape = [1] * slab_grid.grid_ndim
    shape[mu] = len(coords)
    return logv.reshape(shape)


def weighted_divergence_vector(J: GridField, measure: MeasureWeight) -> np.ndarray:
    """Full-weight divergence of a vector field:
    sum_mu [ d_mu J^mu + J^mu d ln v_mu ]."""
    d = measure.dimension
    out = np.zeros(J.grid_shape)
    for mu in range(d):
        comp = J.values[..., mu]
        dcomp = np.gradient(comp, J.spacing[mu], axis=mu, edge_order=2)
        out += dcomp + comp * _log_weight_gradient(measure, J, mu)
    return out


def sqrt_weighted_divergence_vector(J: GridField, measure: MeasureWeight) -> np.ndarray:
    """Sqrt-weight divergence of a vector field:
    sum_mu [ d_mu J^mu + J^mu d ln sqrt(v_mu) ]; the charge current is
    conserved under this flavor."""
    d = measure.dimension
    out = np.zeros(J.grid_shape)
    for mu in range(d):
        comp = J.values[..., mu]
        dcomp = np.gradient(comp, J.spacing[mu], axis=mu, edge_order=2)
        out += dcomp + comp * 0.5 * _log_weight_gradient(measure, J, mu)
    return out


def weighted_divergence_mixed(T_mixed: GridField, measure: MeasureWeight) -> np.ndarray:
    """Full-weight divergence of a mixed tensor: (div T)_nu =
    sum_mu [ d_mu T^mu_nu + T^mu_nu d ln v_mu ]."""
    d = measure.dimension
    out = np.zeros(T_mixed.grid_shape + (d,))
    for mu in range(d):
        comp = T_mixed.values[..., mu, :]
        dcomp = np.gradient(comp, T_mixed.spacing[mu], axis=mu, edge_order=2)
        out += dcomp + comp * _log_weight_gradient(measure, T_mixed, mu)[..., None]
    return out


def sqrt_weighted_divergence_matrix(F: GridField, measure: MeasureWeight) -> np.ndarray:
    """Sqrt-weight divergence of the raised field strength:
    (div F)^mu = sum_nu [ d_nu F^{mu nu} + F^{mu nu} d ln sqrt(v_nu) ];
    the grid form of the Maxwell operator."""
    d = measure.dimension
    eta = minkowski_metric(d)
    F_upper = np.einsum("ma,...ab,bn->...mn", eta, F.values, eta)
    out = np.zeros(F.grid_shape + (d,))
    for nu in range(d):
        comp = F_upper[..., :, nu]
        dcomp = np.gradient(comp, F.spacing[nu], axis=nu, edge_order=2)
        half_log = 0.5 * _log_weight_gradient(measure, F, nu)
        out += dcomp + comp * half_log[..., None]
    return out


def max_interior(grid: GridField, values: np.ndarray, margin: int = 2) -> float:
    slicer = tuple(slice(margin, -margin) for _ in range(grid.grid_ndim))
    return float(np.max(np.abs(values[slicer])))


# --- continuity residuals ---------------------------------------------------------


@dataclass(frozen=True)
class MassContinuityResult:
    residual: GridField          # scalar per node
    total_mass: np.ndarray       # weighted spatial integral per slice
    relative_mass_drift: float
    max_norm: float


def mass_continuity_residual(J_m: GridField, measure: MeasureWeight) -> MassContinuityResult:
    """Full-weight divergence of the mass current, plus the per-slice total
    mass and its drift."""
    if J_m.grid_shape[0] < 5:
        raise DomainError("insufficient time slices for the time derivative (need >= 5)")
    residual = weighted_divergence_vector(J_m, measure)
    rho = J_m.values[..., 0]
    total = _weighted_spatial_integral(rho, J_m, measure)
    drift = float(np.max(np.abs(total - total[0])) / max(abs(total[0]), 1e-300))
    return MassContinuityResult(
        residual=J_m.with_values(residual),
        total_mass=total,
        relative_mass_drift=drift,
        max_norm=max_interior(J_m, residual),
    )


def _weighted_spatial_integral(values: np.ndarray, grid: GridField, measure: MeasureWeight):
    """Trapezoid integral over the spatial axes with the spatial weight,
    slice by slice; works for scalar (..., ) or vector (..., D) nodes."""
    out = values.copy()
    for axis in range(grid.grid_ndim - 1, 0, -1):
        coords = grid.axis_coordinates(axis)
        v_axis = np.asarray(measure.profiles[axis].value(coords), dtype=float)
        if v_axis.ndim == 0:
            v_axis = np.full(len(coords), float(v_axis))
        shape = [1] * out.ndim
        shape[axis] = len(coords)
        out = np.trapezoid(out * v_axis.reshape(shape), coords, axis=axis)
    return out


@dataclass(frozen=True)
class ContinuityResult:
    residual: GridField          # (grid..., D) covector per node
    max_norm: float
    consistency_residual: float  # Maxwell-source mismatch of the inputs
    consistent: bool


def maxwell_continuity_residual(
    F: GridField, J_e: GridField, measure: MeasureWeight, consistency_threshold: float = 1e-2
) -> ContinuityResult:
    """Residual of div fT^mu_nu = J_e^mu F_mu_nu on interior nodes.

    The identity holds only when J_e is the current actually sourcing F;
    the sqrt-weight Maxwell residual of the pair is recomputed on the grid
    and reported, and inconsistent inputs are flagged (not fatal).
    """
    T_upper = maxwell_emt(F.values)
    divergence = weighted_divergence_mixed(F.with_values(mixed_from_upper(T_upper)), measure)
    exchange = np.einsum("...m,...mn->...n", J_e.values, F.values)
    residual = divergence - exchange
    maxwell_residual = sqrt_weighted_divergence_matrix(F, measure) - J_e.values
    consistency = max_interior(F, maxwell_residual)
    scale = max(float(np.max(np.abs(J_e.values))), 1.0)
    return ContinuityResult(
        residual=F.with_values(residual),
        max_norm=max_interior(F, residual),
        consistency_residual=consistency,
        consistent=consistency <= consistency_threshold * scale,
    )


def particle_continuity_residual(
    pT_upper: GridField, J_e: GridField, F: GridField, measure: MeasureWeight
) -> ContinuityResult:
    """Residual of div pT^mu_nu = -J_e^mu F_mu_nu."""
    divergence = weighted_divergence_mixed(
        pT_upper.with_values(mixed_from_upper(pT_upper.values)), measure
    )
    exchange = np.einsum("...m,...mn->...n", J_e.values, F.values)
    residual = divergence + exchange
    return ContinuityResult(
        residual=pT_upper.with_values(residual),
        max_norm=max_interior(pT_upper, residual),
        consistency_residual=0.0,
        consistent=True,
    )


def total_continuity_residual(particle: ContinuityResult, maxwell: ContinuityResult) -> GridField:
    """Sum of the particle and Maxwell residual fields (linearity of the
    divergence); the total-conservation residual."""
    return particle.residual.with_values(particle.residual.values + maxwell.residual.values)


# --- particle slab assembly --------------------------------------------------------


@dataclass(frozen=True)
class ParticleSlab:
    """Time-resolved particle tensors sampled from a trajectory."""

    pT_upper: GridField   # (Nt, spatial..., D, D)
    J_e: GridField        # (Nt, spatial..., D)
    J_m: GridField
    dual_route_residual: float


def particle_slab(
    trajectory: Trajectory,
    particle: ChargedParticleSpec,
    measure: MeasureWeight,
    slab: SlabSpec,
    sigma: float,
) -> ParticleSlab:
    """Deposit the mollified particle currents and energy-momentum tensor
    on every time slice, interpolating the trajectory in coordinate time."""
    t_samples = trajectory.x[:, 0]
    if np.any(np.diff(t_samples) <= 0.0):
        raise DomainError("trajectory coordinate time must be increasing")
    if slab.times[0] < t_samples[0] - 1e-12 or slab.times[-1] > t_samples[-1] + 1e-12:
        raise DomainError("worldline does not cover the requested time slices")
    d = trajectory.dimension
    shape = tuple(len(a) for a in slab.axes)
    pT = np.empty(shape + (d, d))
    J_e = np.empty(shape + (d,))
    J_m = np.empty(shape + (d,))
    dual = 0.0
    for k, t in enumerate(slab.times):
        x = np.array([t] + [np.interp(t, t_samples, trajectory.x[:, i]) for i in range(1, d)])
        u = np.array([np.interp(t, t_samples, trajectory.u[:, mu]) for mu in range(d)])
        state = WorldlineState(s=float(np.interp(t, t_samples, trajectory.s)), x=x, u=u)
        charge_cur, mass_cur = build_currents([spec_at_state(particle, state)], measure, sigma)
        J_e[k] = charge_cur.current_on_axes(slab.spatial_axes)
        J_m[k] = mass_cur.current_on_axes(slab.spatial_axes)
        pT[k] = particle_emt(mass_cur, u, slab.spatial_axes)
        dual = max(
            dual,
            float(
                np.max(np.abs(pT[k] - particle_emt_current_route(mass_cur, u, slab.spatial_axes)))
            ),
        )
    return ParticleSlab(
        pT_upper=slab.grid(pT),
        J_e=slab.grid(J_e),
        J_m=slab.grid(J_m),
        dual_route_residual=dual,
    )


def integrate_particle_momentum(pT_upper: GridField, measure: MeasureWeight) -> np.ndarray:
    """Weighted spatial integral of pT^{0 nu} per slice; recovers the
    canonical momentum up to quadrature and mollifier error."""
    return _weighted_spatial_integral(pT_upper.values[..., 0, :], pT_upper, measure)


# --- cyclic identity ----------------------------------------------------------------


@dataclass(frozen=True)
class CyclicReport:
    """Max cyclic-sum residuals over sampled points and index triples.

    sqrt_form_max uses the sqrt-weight derivative (exact identity);
    full_form_max uses the full-weight derivative (generally nonzero for
    multiscale weights; reported, never asserted)."""

    sqrt_form_max: float
    full_form_max: float
    n_points: int


def cyclic_identity_check(strength: FieldStrength, points: Sequence[np.ndarray]) -> CyclicReport:
    """Evaluate both candidate cyclic identities at the given points.

    Terms are lambdified individually and summed in floating point, so the
    sqrt-form result is a genuine numerical cancellation, not a symbolic
    simplification.
    """
    syms, F, _, log_grad = strength.symbolic()
    d = strength.dimension
    terms = [
        [
            [sympy.diff(F[mu, nu], syms[sig]) + F[mu, nu] * log_grad[sig] for nu in range(d)]
            for mu in range(d)
        ]
        for sig in range(d)
    ]
    extra = [
        [[F[mu, nu] * log_grad[sig] for nu in range(d)] for mu in range(d)]
        for sig in range(d)
    ]
    term_func = lambdify_clean(syms, terms)
    extra_func = lambdify_clean(syms, extra)
    sqrt_max = 0.0
    full_max = 0.0
    for point in points:
        D_sqrt = np.asarray(term_func(*np.asarray(point, dtype=float)), dtype=float)
        D_extra = np.asarray(extra_func(*np.asarray(point, dtype=float)), dtype=float)
        D_full = D_sqrt + D_extra
        for sig, mu, nu in itertools.permutations(range(d), 3):
            sqrt_max = max(
                sqrt_max, abs(D_sqrt[sig, mu, nu] + D_sqrt[mu, nu, sig] + D_sqrt[nu, sig, mu])
            )
            full_max = max(
                full_max, abs(D_full[sig, mu, nu] + D_full[mu, nu, sig] + D_full[nu, sig, mu])
            )
    return CyclicReport(sqrt_form_max=sqrt_max, full_form_max=full_max, n_points=len(points))


# --- convergence studies --------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceStudy:
    """Norms across refinement levels with the fitted order."""

    spacings: tuple[float, ...]
    norms: tuple[float, ...]
    order_estimate: float

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "refinement_levels": [
                {"h": h, "norm": n} for h, n in zip(self.spacings, self.norms)
            ],
            "norm": self.norms[-1],
            "order_estimate": self.order_estimate,
        }


def estimate_order(spacings: Sequence[float], norms: Sequence[float]) -> ConvergenceStudy:
    """Least-squares slope of log(norm) against log(h)."""
    logs_h = np.log(np.asarray(spacings, dtype=float))
    logs_n = np.log(np.asarray(norms, dtype=float))
    slope = float(np.polyfit(logs_h, logs_n, 1)[0])
    return ConvergenceStudy(
        spacings=tuple(float(h) for h in spacings),
        norms=tuple(float(n) for n in norms),
        order_estimate=slope,
    )
