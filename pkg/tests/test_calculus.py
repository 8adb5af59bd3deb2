"""Weighted derivative flavors, worldline differentials, grids, Lorentz maps."""

import math

import numpy as np
import pytest

from msparticle import (
    ActionWeights,
    AnalyticFunction,
    DerivativeFlavor,
    DomainError,
    GridField,
    MeasureWeight,
    MsParticleError,
    ScalarWeight,
    WeightedOperatorSpec,
    anisotropic_differential,
    apply_lorentz,
    boost_matrix,
    constant_profile,
    grid_from_function,
    is_lorentz,
    minkowski_dot,
    power_profile,
    unit_measure,
    weighted_derivative,
)
from msparticle.calculus import weighted_derivative_product_form


def _sqrt_spec(mw, mu):
    return WeightedOperatorSpec(flavor=DerivativeFlavor.SQRT, measure=mw, direction=mu)


def _full_spec(mw, mu):
    return WeightedOperatorSpec(flavor=DerivativeFlavor.FULL, measure=mw, direction=mu)


def test_unit_weight_reduces_to_plain_derivative():
    mw = unit_measure(2)
    f = AnalyticFunction(value=lambda t: t**2, derivative=lambda t: 2 * t)
    for spec in (_sqrt_spec(mw, 0), _full_spec(mw, 0)):
        for t in (0.5, 1.0, 3.0):
            assert weighted_derivative(spec, f, [t, 0.0]) == pytest.approx(2 * t, abs=1e-15)


def test_constant_function_hand_value():
    # v0 = t^(-1/2): D(c) = c * dln(sqrt v)/dt = c (alpha-1)/(2t); t=2, c=1 -> -1/8
    mw = MeasureWeight(profiles=(power_profile(alpha=0.5), constant_profile()))
    spec = _sqrt_spec(mw, 0)
    got = weighted_derivative(spec, AnalyticFunction.constant(1.0), [2.0, 0.0])
    assert got == pytest.approx(-0.125, abs=1e-15)


def test_bilinear_leibniz_rule_analytic():
    # full-flavor derivative of a product splits into sqrt-flavor factors:
    # Dv(fg) = f D(g) + g D(f), exact for analytic inputs
    mw = MeasureWeight(profiles=(power_profile(alpha=0.5), constant_profile()))
    sqrt_spec = _sqrt_spec(mw, 0)
    full_spec = _full_spec(mw, 0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b, c, d = rng.uniform(-1.0, 1.0, size=4)
        f = AnalyticFunction(value=lambda t: a + b * t, derivative=lambda t: b)
        g = AnalyticFunction(value=lambda t: c * np.sin(t) + d, derivative=lambda t: c * np.cos(t))
        fg = AnalyticFunction(
            value=lambda t: f.value(t) * g.value(t),
            derivative=lambda t: f.derivative(t) * g.value(t) + f.value(t) * g.derivative(t),
        )
        t = rng.uniform(0.5, 3.0)
        x = [t, 0.0]
        lhs = weighted_derivative(full_spec, fg, x)
        rhs = f.value(t) * weighted_derivative(sqrt_spec, g, x) + g.value(t) * weighted_derivative(
            sqrt_spec, f, x
        )
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_product_route_matches_expanded_route():
    mw = MeasureWeight(profiles=(power_profile(alpha=0.5), constant_profile()))
    spec = _sqrt_spec(mw, 0)
    f = AnalyticFunction(value=lambda t: math.exp(0.3 * t), derivative=lambda t: 0.3 * math.exp(0.3 * t))
    for t in (0.5, 1.3, 2.7):
        direct = weighted_derivative(spec, f, [t, 0.0])
        product = weighted_derivative_product_form(spec, f, [t, 0.0])
        assert direct == pytest.approx(product, abs=1e-10)


# --- anisotropic worldline differential ----------------------------------------


def test_anisotropic_differential_unit_weights():
    aw = ActionWeights.unit(3)
    x = np.array([1.0, 2.0, 3.0])
    xdot = np.array([0.5, -0.5, 0.25])
    assert anisotropic_differential(aw, 0.3, x, xdot) == pytest.approx(xdot)


def test_anisotropic_differential_constant_coordinate():
    # omega = (1+s)^2, x = c constant: (1/sqrt w) d(sqrt w c)/ds = c/(1+s)
    w = ScalarWeight.from_expression("(1+s)^2")
    aw = ActionWeights.make_isotropic(w, 2)
    c = 3.0
    for s in (0.0, 1.0, 2.0):
        got = anisotropic_differential(aw, s, [c, c], [0.0, 0.0], mu=1)
        assert got == pytest.approx(c / (1.0 + s), rel=1e-14)


def test_isotropic_weights_reproduce_weighted_derivative():
    w = ScalarWeight.from_expression("exp(s)")
    aw = ActionWeights.make_isotropic(w, 2)
    spec = WeightedOperatorSpec(flavor=DerivativeFlavor.SQRT, worldline_weight=w)
    x_val, xdot_val = 1.7, -0.4
    f = AnalyticFunction(value=lambda s: x_val + xdot_val * (s - 1.0), derivative=lambda s: xdot_val)
    s = 1.0
    via_spec = weighted_derivative(spec, f, s)
    via_aniso = anisotropic_differential(aw, s, [x_val, x_val], [xdot_val, xdot_val], mu=0)
    assert via_spec == pytest.approx(via_aniso, rel=1e-14)


# --- Lorentz maps ----------------------------------------------------------------


def test_identity_is_lorentz_and_fixes_points():
    lam = np.eye(4)
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert is_lorentz(lam)
    assert np.allclose(apply_lorentz(lam, x), x)


def test_boost_preserves_interval():
    lam = boost_matrix(0.7, axis=1, dimension=2)
    x = np.array([1.3, 0.4])
    xp = apply_lorentz(lam, x)
    # (t, x) -> (t cosh - x sinh, x cosh - t sinh)
    phi = 0.7
    assert xp[0] == pytest.approx(x[0] * math.cosh(phi) - x[1] * math.sinh(phi), rel=1e-15)
    assert xp[1] == pytest.approx(x[1] * math.cosh(phi) - x[0] * math.sinh(phi), rel=1e-15)
    assert minkowski_dot(xp, xp) == pytest.approx(minkowski_dot(x, x), abs=1e-12)


def test_non_lorentz_matrix_rejected():
    bad = np.eye(2) * 1.1
    with pytest.raises(MsParticleError):
        apply_lorentz(bad, np.array([1.0, 0.0]))


def test_translation_composes():
    lam = np.eye(2)
    out = apply_lorentz(lam, np.array([1.0, 2.0]), translation=[0.5, -0.5])
    assert np.allclose(out, [1.5, 1.5])


def test_boosted_free_trajectory_still_solves_eom():
    # integrate, boost, and check the straight-line equations still hold
    from msparticle import StepControl, WorldlineState, integrate

    aw = ActionWeights.unit(2)
    st = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.0], [0.4], aw)
    traj = integrate(st, aw, (0.0, 1.0), StepControl(step=1e-2))
    boosted = apply_lorentz(boost_matrix(0.5, dimension=2), traj)
    ds = np.diff(boosted.s)
    dx = np.diff(boosted.x, axis=0) / ds[:, None]
    assert np.max(np.abs(dx - boosted.u[:-1])) < 1e-1  # first-order difference check
    du = np.diff(boosted.u, axis=0)
    assert np.max(np.abs(du)) < 1e-12  # u constant for unit weights


# --- grids -----------------------------------------------------------------------


def test_grid_derivative_second_order_convergence():
    def build(n):
        return grid_from_function([0.0], [2.0 / (n - 1)], [n], lambda p: math.sin(3.0 * p[0]))

    errors = []
    for n in (41, 81):
        gf = build(n)
        xs = gf.axis_coordinates(0)
        exact = 3.0 * np.cos(3.0 * xs)
        err = np.max(np.abs(gf.derivative(0) - exact)[2:-2])
        errors.append(err)
    assert 3.5 <= errors[0] / errors[1] <= 4.5


def test_weighted_derivative_on_grid_interior_node():
    mw = MeasureWeight(profiles=(power_profile(alpha=0.5), constant_profile()))
    spec = _sqrt_spec(mw, 0)
    h = 0.01
    gf = grid_from_function([1.0], [h], [201], lambda p: 1.0)
    # same constant-function value as the analytic route, to stencil order
    got = weighted_derivative(spec, gf, [2.0])
    assert got == pytest.approx(-0.125, abs=1e-6)


def test_weighted_derivative_grid_boundary_raises():
    mw = unit_measure(2)
    spec = _sqrt_spec(mw, 0)
    gf = grid_from_function([0.0], [0.1], [11], lambda p: p[0])
    with pytest.raises(DomainError):
        weighted_derivative(spec, gf, [0.0])


def test_grid_requires_positive_spacing_and_five_nodes():
    with pytest.raises(ValueError):
        GridField(origin=(0.0,), spacing=(0.0,), values=np.zeros(7), grid_ndim=1)
    gf = GridField(origin=(0.0,), spacing=(1.0,), values=np.zeros(3), grid_ndim=1)
    with pytest.raises(DomainError):
        gf.derivative(0)
