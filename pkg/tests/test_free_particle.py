"""Free-particle integration against integer-picture closed forms."""

import math

import numpy as np
import pytest

from msparticle import (
    ActionWeights,
    ConstraintDriftError,
    DomainError,
    ScalarWeight,
    StepControl,
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
    unit_measure,
)
from msparticle.free_particle import Momentum, hamilton_velocity
from msparticle.measure import MeasureWeight, binomial_profile, constant_profile


def _isotropic(source, dimension=2):
    return ActionWeights.make_isotropic(ScalarWeight.from_expression(source), dimension)


def test_unit_weights_straight_line():
    aw = ActionWeights.unit(2)
    st = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.0], [0.0], aw)
    traj = integrate(st, aw, (0.0, 1.0), StepControl(step=1e-2))
    assert np.allclose(traj.x[:, 0], traj.s, atol=1e-12)
    assert np.allclose(traj.x[:, 1], 0.0, atol=1e-14)


def test_rhs_unit_weights_is_straight_line_field():
    aw = ActionWeights.unit(2)
    st = WorldlineState(s=0.5, x=np.array([1.0, 2.0]), u=np.array([1.2, 0.3]))
    dx, du = eom_rhs_isotropic(st, aw)
    assert np.allclose(dx, st.u)
    assert np.allclose(du, 0.0)


def test_rhs_matches_closed_form_solution():
    # omega = (1+s)^2: x(s) = (a + c s)/(1+s) with c the initial mapped velocity
    aw = _isotropic("(1+s)^2")
    a = np.array([0.2, 0.7])
    st = WorldlineState.from_spatial_velocity(0.0, a, [0.5], aw)
    c = st.u.copy()  # sqrt(omega(0)) = 1
    traj = integrate(st, aw, (0.0, 2.0), StepControl(step=1e-3))
    exact = np.array([(a + c * s) / (1.0 + s) for s in traj.s])
    rel = np.abs(traj.x - exact) / np.maximum(np.abs(exact), 1e-12)
    assert np.max(rel) < 1e-8


def test_normalization_conserved_along_flow():
    aw = _isotropic("exp(s)")
    st = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.0], [0.8], aw)
    traj = integrate(st, aw, (0.0, 2.0), StepControl(step=1e-3))
    drift = np.max(np.abs(traj.diagnostics["constraint_residual"]))
    assert drift < 1e-8 * 2.0  # per unit s over a span of 2


def test_anisotropic_time_linear_space_mapped():
    unit = ScalarWeight.unit()
    spatial = ScalarWeight.from_expression("(1+s)^2")
    aw = ActionWeights.make_anisotropic([unit, spatial])
    a = np.array([0.0, 1.0])
    st = WorldlineState.from_spatial_velocity(0.0, a, [0.4], aw)
    traj = integrate(st, aw, (0.0, 2.0), StepControl(step=1e-3))
    # time coordinate affine in s
    assert np.max(np.abs(traj.x[:, 0] - st.u[0] * traj.s)) < 1e-10
    # spatial coordinate follows (a + c s)/(1+s)
    exact = (a[1] + st.u[1] * traj.s) / (1.0 + traj.s)
    assert np.max(np.abs(traj.x[:, 1] - exact)) < 1e-9


def test_anisotropic_dispersion_preserved():
    unit = ScalarWeight.unit()
    spatial = ScalarWeight.from_expression("(1+s)^2")
    aw = ActionWeights.make_anisotropic([unit, spatial])
    st = WorldlineState.from_spatial_velocity(0.0, [0.0, 1.0], [0.4], aw)
    traj = integrate(st, aw, (0.0, 2.0), StepControl(step=1e-3), mass=1.5)
    assert np.max(traj.diagnostics["shell_residual"]) < 1e-8 * 1.5**2


def test_rhs_anisotropic_straight_when_unit():
    aw = ActionWeights.unit(3)
    st = WorldlineState(s=0.0, x=np.zeros(3), u=np.array([1.0, 0.0, 0.0]))
    dx, du = eom_rhs_anisotropic(st, aw)
    assert np.allclose(dx, st.u)
    assert np.allclose(du, 0.0)


def test_isotropic_rhs_rejects_anisotropic_weights():
    aw = ActionWeights.make_anisotropic(
        [ScalarWeight.unit(), ScalarWeight.from_expression("(1+s)^2")]
    )
    st = WorldlineState(s=0.0, x=np.zeros(2), u=np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        eom_rhs_isotropic(st, aw)


# --- integer picture -------------------------------------------------------------


def test_integer_picture_identity_for_unit_weights():
    aw = ActionWeights.unit(2)
    st = WorldlineState(s=0.3, x=np.array([1.0, -2.0]), u=np.array([1.0, 0.0]))
    assert np.allclose(integer_picture_map(st, aw), st.x)


def test_integer_picture_exactly_affine_on_closed_form():
    aw = _isotropic("(1+s)^2")
    a, c = 0.5, 0.25
    for s in (0.0, 0.7, 1.9):
        x = (a + c * s) / (1.0 + s)
        st = WorldlineState(s=s, x=np.array([0.0, x]), u=np.zeros(2))
        chi = integer_picture_map(st, aw)
        assert chi[1] == pytest.approx(a + c * s, rel=1e-14)


def test_affinity_of_integrated_trajectory():
    aw = _isotropic("(1+s)^2")
    st = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.4], [0.6], aw)
    traj = integrate(st, aw, (0.0, 2.0), StepControl(step=1e-3))
    chi = integer_picture_map(traj, aw)
    second = np.diff(chi, n=2, axis=0)
    c_scale = np.max(np.abs(integer_picture_map(st, aw) + 1.0))
    assert np.max(np.abs(second)) < 1e-7 * c_scale


def test_oracle_deviation_diagnostic_small():
    aw = _isotropic("exp(s)")
    st = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.0], [0.3], aw)
    traj = integrate(st, aw, (0.0, 2.0), StepControl(step=1e-3))
    assert np.max(traj.diagnostics["oracle_deviation"]) < 1e-10


# --- momentum and Hamiltonian ----------------------------------------------------


def test_canonical_momentum_unit_weight():
    aw = ActionWeights.unit(3)
    st = WorldlineState(s=0.0, x=np.zeros(3), u=np.array([1.0, 0.0, 0.0]))
    mom = canonical_momentum(st, aw, mass=2.0)
    assert np.allclose(mom.p, [2.0, 0.0, 0.0])
    assert mom.m_w == pytest.approx(2.0)


def test_mass_shell_exact_on_normalized_state():
    aw = _isotropic("(1+s)^2")
    st = WorldlineState.from_spatial_velocity(0.5, [0.0, 0.0], [0.7], aw)
    mom = canonical_momentum(st, aw, mass=1.3)
    assert mass_shell_residual(mom, aw, st.s) < 1e-13


def test_integer_picture_momentum_conserved():
    aw = _isotropic("(1+s)^2")
    st = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.0], [0.5], aw)
    traj = integrate(st, aw, (0.0, 2.0), StepControl(step=1e-3))
    pbars = np.array(
        [integer_picture_momentum(traj.state(i), aw, 1.0) for i in range(0, traj.n_samples, 100)]
    )
    assert np.max(np.abs(pbars - pbars[0])) < 1e-8


def test_nonunit_tilde_requires_exploration_flag():
    aw = ActionWeights(
        profiles=(ScalarWeight.unit(), ScalarWeight.unit()),
        omega_tilde=ScalarWeight.from_expression("2"),
        isotropic=True,
    )
    st = WorldlineState(s=0.0, x=np.zeros(2), u=np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        canonical_momentum(st, aw, mass=1.0)


def test_dirac_hamiltonian_vanishes_weakly():
    aw = _isotropic("(1+s)^2")
    m = 1.7
    st = WorldlineState.from_spatial_velocity(0.4, [0.0, 0.0], [0.6], aw)
    mom = canonical_momentum(st, aw, m)
    assert abs(dirac_hamiltonian(st, mom, aw, m)) < 1e-10 * m**2


def test_dirac_hamiltonian_nonzero_off_shell():
    # scaled momentum with p.p + m_w^2 = m^2 gives H_D = m/2 exactly
    # (multiplier 1/(2m) on a normalized state)
    w = ScalarWeight.from_expression("0.75")
    aw = ActionWeights.make_isotropic(w, 2)
    m = 2.0
    st = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.0], [0.0], aw)
    kappa = 0.5  # kappa^2 = 1 - omega
    mom_off = Momentum(p=kappa * m * st.u, m=m, m_w=m / math.sqrt(0.75))
    got = dirac_hamiltonian(st, mom_off, aw, m)
    assert got == pytest.approx(m / 2.0, rel=1e-12)


def test_hamilton_flow_reproduces_weighted_velocity():
    aw = _isotropic("(1+s)^2")
    st = WorldlineState.from_spatial_velocity(0.3, [0.1, -0.2], [0.45], aw)
    mom = canonical_momentum(st, aw, mass=1.0)
    flow = hamilton_velocity(st, mom, aw, mass=1.0)
    assert np.max(np.abs(flow - st.u)) < 1e-9
    # consistency with the Lagrangian right-hand side: dx/ds + (Omega/2) x = u
    dx, _ = eom_rhs_isotropic(st, aw)
    half = aw.half_log_derivatives(st.s)
    assert np.max(np.abs(dx + half * st.x - flow)) < 1e-9


# --- guards and controls ----------------------------------------------------------


def test_initial_state_must_be_normalized():
    aw = ActionWeights.unit(2)
    st = WorldlineState(s=0.0, x=np.zeros(2), u=np.array([2.0, 0.0]))
    with pytest.raises(DomainError):
        integrate(st, aw, (0.0, 1.0))


def test_hard_drift_limit_aborts():
    aw = _isotropic("(1+s)^2")
    st = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.0], [0.3], aw)
    with pytest.raises(ConstraintDriftError):
        integrate(st, aw, (0.0, 2.0), StepControl(step=1e-2, hard_drift_limit=1e-18))


def test_adaptive_matches_fixed_step():
    aw = _isotropic("(1+s)^2")
    st = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.0], [0.5], aw)
    fixed = integrate(st, aw, (0.0, 1.0), StepControl(step=1e-3))
    adaptive = integrate(st, aw, (0.0, 1.0), StepControl(step=1e-2, adaptive=True, tolerance=1e-12))
    exact = closed_form_position(st, aw, adaptive.s)
    assert np.max(np.abs(adaptive.x - exact)) < 1e-8
    assert adaptive.s[-1] == pytest.approx(fixed.s[-1])


def test_convergence_order_is_four():
    aw = _isotropic("(1+s)^2")
    st = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.0], [0.5], aw)
    errors = []
    for h in (2e-2, 1e-2):
        traj = integrate(st, aw, (0.0, 2.0), StepControl(step=h))
        exact = closed_form_position(st, aw, traj.s)
        errors.append(np.max(np.abs(traj.x - exact)))
    ratio = errors[0] / errors[1]
    assert 16.0 * 0.7 <= ratio <= 16.0 * 1.3


# --- nonrelativistic limit ---------------------------------------------------------


def _slow_trajectory(speed, v0_expr="1"):
    unit = ScalarWeight.unit()
    spatial = ScalarWeight.from_expression(v0_expr)
    aw = ActionWeights.make_anisotropic([unit, spatial, spatial])
    st = WorldlineState.from_spatial_velocity(0.0, np.zeros(3), [speed, 0.0], aw)
    return integrate(st, aw, (0.0, 1.0), StepControl(step=1e-3))


def test_nonrel_limit_small_velocity_deviation():
    mw = unit_measure(3)
    report = nonrel_limit_compare(_slow_trajectory(0.01), mw)
    assert report.relative_deviation < 1e-3


def test_nonrel_limit_zero_velocity_identical():
    mw = unit_measure(3)
    report = nonrel_limit_compare(_slow_trajectory(0.0), mw)
    assert report.max_deviation == 0.0
    assert report.relative_deviation == 0.0


def test_nonrel_limit_quadratic_scaling():
    mw = unit_measure(3)
    d1 = nonrel_limit_compare(_slow_trajectory(0.02), mw).relative_deviation
    d2 = nonrel_limit_compare(_slow_trajectory(0.01), mw).relative_deviation
    assert d1 / d2 == pytest.approx(4.0, rel=0.25)


def test_nonrel_limit_weighted_time_profile():
    # binomial time weight v0(t) = 1 + |t|^(-1/2) on t in [0.5, 1.5] with the
    # matched worldline identification omega_i(s) = v0(t0 + u0 s)
    speed = 0.01
    t0 = 0.5
    v0_at_t0 = 1.0 + t0**-0.5
    u0 = math.sqrt(1.0 + v0_at_t0 * speed**2)
    unit = ScalarWeight.unit()
    spatial = ScalarWeight.from_expression(f"1 + abs({t0} + {u0!r}*s)^(-0.5)")
    aw = ActionWeights.make_anisotropic([unit, spatial, spatial])
    st = WorldlineState.from_spatial_velocity(0.0, np.array([t0, 0.0, 0.0]), [speed, 0.0], aw)
    traj = integrate(st, aw, (0.0, 1.0), StepControl(step=1e-3))
    mw = MeasureWeight(
        profiles=(binomial_profile(alpha=0.5), constant_profile(), constant_profile())
    )
    report = nonrel_limit_compare(traj, mw)
    assert report.relative_deviation < 1e-3


def test_nonrel_limit_rejects_fast_trajectory():
    mw = unit_measure(3)
    with pytest.raises(DomainError):
        nonrel_limit_compare(_slow_trajectory(0.5), mw)
