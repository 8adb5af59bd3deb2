"""Measure weights, profile derivatives and the smoothed point density."""

import numpy as np
import pytest

from msparticle import (
    MeasureWeight,
    SingularWeightError,
    SmoothedDelta,
    binomial_profile,
    constant_profile,
    power_profile,
    unit_measure,
)


def test_identity_measure_is_one_everywhere():
    mw = unit_measure(4)
    for x in ([0.0, 1.0, -2.0, 3.0], [5.0, 5.0, 5.0, 5.0]):
        assert mw.weight(x) == 1.0


def test_power_profile_hand_value():
    # |4|^(1/2 - 1) = 4^(-1/2) = 0.5
    mw = MeasureWeight(profiles=(constant_profile(), power_profile(alpha=0.5, scale=1.0)))
    assert mw.weight([7.3, 4.0]) == pytest.approx(0.5, abs=1e-15)


def test_binomial_profile_hand_value():
    # 1 + |4|^(-1/2) = 1.5
    mw = MeasureWeight(profiles=(constant_profile(), binomial_profile(alpha=0.5)))
    assert mw.weight([0.1, 4.0]) == pytest.approx(1.5, abs=1e-15)


def test_factorizability_to_machine_precision():
    rng = np.random.default_rng(7)
    profiles = (
        constant_profile(),
        power_profile(alpha=0.7, scale=0.5),
        binomial_profile(alpha=0.3, scale=2.0),
        binomial_profile(alpha=0.9, scale=1.0),
    )
    mw = MeasureWeight(profiles=profiles)
    for _ in range(50):
        x = rng.uniform(0.5, 3.0, size=4) * rng.choice([-1.0, 1.0], size=4)
        single = 1.0
        for profile, xi in zip(profiles, x):
            single *= profile.value(xi)
        assert mw.weight(x) == pytest.approx(single, rel=1e-15)
        assert mw.weight(x) > 0.0


def test_power_singularity_raises_not_nan():
    profile = power_profile(alpha=0.5, scale=1.0, epsilon=0.1)
    with pytest.raises(SingularWeightError):
        profile.value(0.05)
    with pytest.raises(SingularWeightError):
        profile.value(0.0)
    # outside the excluded neighborhood everything is finite
    assert np.isfinite(profile.value(0.11))


def test_constant_profile_has_zero_log_derivative():
    assert constant_profile().sqrt_log_derivative(3.7) == 0.0


def test_power_log_derivative_hand_value():
    # d/dx ln sqrt(x^(alpha-1)) = (alpha-1)/(2x); alpha=1/2, x=2 -> -1/8
    profile = power_profile(alpha=0.5)
    assert profile.sqrt_log_derivative(2.0) == pytest.approx(-0.125, abs=1e-15)


def test_binomial_log_derivative_vanishes_at_large_x():
    profile = binomial_profile(alpha=0.5)
    assert abs(profile.sqrt_log_derivative(1e8)) < 1e-9


@pytest.mark.parametrize(
    "profile",
    [power_profile(alpha=0.4), binomial_profile(alpha=0.6, scale=2.0)],
)
def test_log_derivative_matches_finite_difference(profile):
    # central difference of ln sqrt(v); halving h must cut the residual by >= 3.5
    x = 1.7

    def fd(h):
        num = 0.5 * (np.log(profile.value(x + h)) - np.log(profile.value(x - h))) / (2 * h)
        return abs(num - profile.sqrt_log_derivative(x))

    r1, r2 = fd(1e-3), fd(5e-4)
    assert r1 / r2 >= 3.5


def test_multiscale_sum_profile():
    from msparticle import ProfileKind, WeightProfile

    profile = WeightProfile(
        kind=ProfileKind.MULTISCALE, terms=((0.5, 1.0), (0.25, 10.0))
    )
    x = 4.0
    expected = 1.0 + abs(x) ** -0.5 + abs(x / 10.0) ** -0.75
    assert profile.value(x) == pytest.approx(expected, rel=1e-15)


# --- smoothed delta -------------------------------------------------------------


def _sift(delta, mw, f, x0, half_width, n=20001):
    xs = np.linspace(x0 - half_width, x0 + half_width, n)
    vals = np.array([mw.spatial_weight([x]) * delta.value([x]) * f(x) for x in xs])
    return np.trapezoid(vals, xs)


def test_unit_weight_mollifier_normalizes():
    mw = unit_measure(2)
    delta = SmoothedDelta(measure=mw, center=(0.0,), sigma=0.3)
    total = _sift(delta, mw, lambda x: 1.0, 0.0, 3.0)
    assert total == pytest.approx(1.0, abs=1e-10)


def test_sifting_recovers_f_within_one_percent():
    mw = MeasureWeight(profiles=(constant_profile(), binomial_profile(alpha=0.5)))
    x0, ell = 2.0, 1.0
    delta = SmoothedDelta(measure=mw, center=(x0,), sigma=ell / 100.0)
    f = lambda x: 1.0 + 0.5 * x + 0.2 * x**2
    got = _sift(delta, mw, f, x0, 10 * delta.sigma)
    assert got == pytest.approx(f(x0), rel=1e-2)


def test_sifting_error_decreases_monotonically():
    mw = MeasureWeight(profiles=(constant_profile(), binomial_profile(alpha=0.5)))
    x0, ell = 2.0, 1.0
    polynomials = [lambda x, k=k: x**k for k in range(5)]
    for f in polynomials:
        errors = []
        for sigma in (ell / 10.0, ell / 30.0, ell / 100.0):
            delta = SmoothedDelta(measure=mw, center=(x0,), sigma=sigma)
            got = _sift(delta, mw, f, x0, 12 * sigma)
            errors.append(abs(got - f(x0)))
        assert errors[0] > errors[1] > errors[2]


def test_delta_symmetric_in_arguments():
    mw = MeasureWeight(profiles=(constant_profile(), binomial_profile(alpha=0.5)))
    a = SmoothedDelta(measure=mw, center=(1.5,), sigma=0.1)
    b = SmoothedDelta(measure=mw, center=(2.5,), sigma=0.1)
    assert a.value([2.5]) == pytest.approx(b.value([1.5]), rel=1e-15)


def test_sigma_must_be_positive():
    with pytest.raises(ValueError):
        SmoothedDelta(measure=unit_measure(2), center=(0.0,), sigma=0.0)
