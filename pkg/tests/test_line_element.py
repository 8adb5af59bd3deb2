"""Explicit line elements: back-substitution, limits, signature guards."""

import math

import numpy as np
import pytest

from msparticle import (
    DegenerateGeometryError,
    LineElementInput,
    SignatureError,
    ds_anisotropic,
    ds_isotropic_explicit,
    gamma_factor,
    implicit_residual,
)


def _random_timelike_input(rng, dimension):
    x = rng.uniform(-1.0, 1.0, size=dimension)
    dt = rng.uniform(0.5, 1.5)
    dx = np.concatenate([[dt], rng.uniform(-0.3, 0.3, size=dimension - 1) * dt])
    omega = rng.uniform(0.5, 2.0)
    big = rng.uniform(-0.5, 0.5)
    return LineElementInput(x=x, dx=dx, omega=omega, capital_omega=big)


def test_zero_log_derivative_unit_weight():
    dx = np.array([0.8, 0.3])
    inp = LineElementInput(x=np.array([1.0, 2.0]), dx=dx, omega=1.0, capital_omega=0.0)
    expected = math.sqrt(dx[0] ** 2 - dx[1] ** 2)
    assert ds_isotropic_explicit(inp) == pytest.approx(expected, rel=1e-14)


def test_zero_log_derivative_scaled_weight_satisfies_implicit_form():
    # omega = 4, dx = (dt, 0): ds = sqrt(omega) |dt| = 2 dt
    inp = LineElementInput(
        x=np.array([0.3, -0.7]), dx=np.array([0.5, 0.0]), omega=4.0, capital_omega=0.0
    )
    ds = ds_isotropic_explicit(inp)
    assert ds == pytest.approx(1.0, rel=1e-14)
    assert abs(implicit_residual(inp, ds)) < 1e-12


def test_back_substitution_on_random_samples():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        inp = _random_timelike_input(rng, rng.choice([2, 4]))
        ds = ds_isotropic_explicit(inp)
        assert ds > 0.0
        assert abs(implicit_residual(inp, ds)) < 1e-12


def test_limit_consistency_linear_in_log_derivative():
    rng = np.random.default_rng(5)
    base = _random_timelike_input(rng, 2)
    ds0 = ds_isotropic_explicit(
        LineElementInput(x=base.x, dx=base.dx, omega=base.omega, capital_omega=0.0)
    )
    deltas = []
    for big in (0.2, 0.1, 0.05):
        ds = ds_isotropic_explicit(
            LineElementInput(x=base.x, dx=base.dx, omega=base.omega, capital_omega=big)
        )
        deltas.append(abs(ds - ds0))
    # halving Omega roughly halves the gap (linear approach)
    assert deltas[0] / deltas[1] == pytest.approx(2.0, rel=0.15)
    assert deltas[1] / deltas[2] == pytest.approx(2.0, rel=0.15)


def test_spacelike_displacement_rejected():
    inp = LineElementInput(
        x=np.zeros(2), dx=np.array([0.1, 1.0]), omega=1.0, capital_omega=0.0
    )
    with pytest.raises(SignatureError):
        ds_isotropic_explicit(inp)


def test_degenerate_denominator_rejected():
    # 4/omega + Omega^2 x.x < 0 for strongly timelike position
    inp = LineElementInput(
        x=np.array([10.0, 0.0]), dx=np.array([1.0, 0.0]), omega=1.0, capital_omega=10.0
    )
    with pytest.raises(DegenerateGeometryError):
        ds_isotropic_explicit(inp)


# --- anisotropic form ---------------------------------------------------------


def test_static_point_gamma_is_one():
    assert gamma_factor([0.0, 0.0, 0.0]) == 1.0
    assert ds_anisotropic(0.25, [0.0, 0.0, 0.0]) == pytest.approx(0.25)


def test_unit_weight_reduces_to_standard_gamma():
    v = [0.3, 0.0, 0.0]
    assert gamma_factor(v, v0=1.0) == pytest.approx(1.0 / math.sqrt(1.0 - 0.09), rel=1e-15)


def test_weighted_gamma_hand_value():
    # v0 = 4, weighted velocity (0.3, 0, 0): gamma = 1/sqrt(1 - 4*0.09) = 1.25
    assert gamma_factor([0.3, 0.0, 0.0], v0=4.0) == pytest.approx(1.25, rel=1e-15)
    assert ds_anisotropic(1.0, [0.3, 0.0, 0.0], v0=4.0) == pytest.approx(0.8, rel=1e-15)


def test_superluminal_rejected():
    with pytest.raises(SignatureError):
        gamma_factor([0.6, 0.0], v0=4.0)


def test_gamma_at_least_one_with_equality_iff_static():
    rng = np.random.default_rng(2)
    for _ in range(200):
        v0 = rng.uniform(0.2, 3.0)
        v = rng.uniform(-0.4, 0.4, size=3) / math.sqrt(v0)
        g = gamma_factor(v, v0=v0)
        if np.allclose(v, 0.0):
            assert g == 1.0
        else:
            assert g > 1.0
