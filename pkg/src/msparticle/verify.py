"""Named invariant checks: the verification suite behind `verify`.

Every check returns a CheckResult with the measured values and the pinned
tolerances; the acceptance test module and the CLI `verify` subcommand
both drive this registry.  Checks are deterministic (seeded sampling) and
sized for desk-scale runtimes.
"""

from __future__ import annotations

import importlib.resources
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calculus import ScalarWeight, apply_lorentz, boost_matrix
from .charged_particle import (
    ChargedParticleSpec,
    FieldStrength,
    GaugeField,
    integrate_charged,
    maxwell_source_function,
)
from .emtensor import (
    SlabSpec,
    cyclic_identity_check,
    estimate_order,
    max_interior,
    maxwell_continuity_residual,
    particle_continuity_residual,
    particle_slab,
    sample_field_strength,
    total_continuity_residual,
)
from .free_particle import (
    ActionWeights,
    StepControl,
    WorldlineState,
    closed_form_position,
    integrate,
    nonrel_limit_compare,
)
from .line_element import LineElementInput, ds_isotropic_explicit, implicit_residual
from .measure import MeasureWeight, binomial_profile, constant_profile, unit_measure
from .qtheory import (
    CompositeCoordinates,
    expression_coordinate,
    identity_coordinate,
    power_coordinate,
    q_geodesic,
    q_line_element,
)
from .scenario import Scenario, run_scenario

ORACLE_WEIGHTS = {
    "power": "(1+s)^2",
    "exponential": "exp(s)",
    "binomial": "1 + (1+s)^(-0.5)",
}

TRAJECTORY_SCENARIOS = (
    "free_power.ini",
    "free_exponential.ini",
    "free_binomial.ini",
    "free_anisotropic.ini",
    "charged_uniform_e.ini",
    "charged_uniform_b.ini",
    "charged_multiscale.ini",
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "details": self.details}


def _scenario_path(name: str):
    return importlib.resources.files("msparticle") / "scenarios" / name


def _load_scenario(name: str) -> Scenario:
    with importlib.resources.as_file(_scenario_path(name)) as path:
        return Scenario.load(path)


def _oracle_case(expr: str):
    weights = ActionWeights.make_isotropic(ScalarWeight.from_expression(expr), 2)
    state = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.5], [0.5], weights)
    return weights, state


def check_integer_picture_oracle() -> CheckResult:
    """Integrated x(s) against the affine mapped closed form for the three
    reference weights; < 1e-7 relative at step 1e-3 over s in [0, 2]."""
    details = {}
    passed = True
    for label, expr in ORACLE_WEIGHTS.items():
        weights, state = _oracle_case(expr)
        start = time.perf_counter()
        traj = integrate(state, weights, (0.0, 2.0), StepControl(step=1e-3))
        runtime = time.perf_counter() - start
        exact = closed_form_position(state, weights, traj.s)
        scale = float(np.max(np.abs(exact)))
        rel = float(np.max(np.abs(traj.x - exact))) / scale
        details[label] = {"max_relative_error": rel, "runtime_s": runtime}
        passed = passed and rel < 1e-7 and runtime < 1.0
    return CheckResult("integer_picture_oracle", passed, details)


def _run_shipped(names=TRAJECTORY_SCENARIOS):
    for name in names:
        scenario = _load_scenario(name)
        yield name, scenario, run_scenario(scenario)


def check_constraint_preservation() -> CheckResult:
    """Velocity-normalization drift < 1e-8 per unit s on every shipped
    free and charged scenario."""
    details = {}
    passed = True
    for name, _, result in _run_shipped():
        outcome = next(c for c in result.checks if c.name == "constraint_drift_per_unit_s")
        details[name] = outcome.value
        passed = passed and outcome.passed
    return CheckResult("constraint_preservation", passed, details)


def check_mass_shell_dispersion() -> CheckResult:
    """|p.p + m_w^2| (isotropic) and |omega.p.p + m^2| (anisotropic)
    < 1e-8 m^2 along every shipped trajectory."""
    details = {}
    passed = True
    for name, _, result in _run_shipped():
        outcome = next(c for c in result.checks if c.name == "mass_shell_residual")
        details[name] = outcome.value
        passed = passed and outcome.passed
    return CheckResult("mass_shell_dispersion", passed, details)


def check_line_element_backsubstitution() -> CheckResult:
    """1000 random timelike samples satisfy the implicit interval
    definition to 1e-12 through the explicit form; the zero-log-derivative
    limit is approached linearly."""
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        dimension = int(rng.choice([2, 4]))
        x = rng.uniform(-1.0, 1.0, size=dimension)
        dt = rng.uniform(0.5, 1.5)
        dx = np.concatenate([[dt], rng.uniform(-0.3, 0.3, size=dimension - 1) * dt])
        inp = LineElementInput(
            x=x, dx=dx, omega=rng.uniform(0.5, 2.0), capital_omega=rng.uniform(-0.5, 0.5)
        )
        worst = max(worst, abs(implicit_residual(inp, ds_isotropic_explicit(inp))))
    base = LineElementInput(
        x=np.array([0.3, -0.4]), dx=np.array([1.0, 0.2]), omega=1.0, capital_omega=0.0
    )
    ds0 = ds_isotropic_explicit(base)
    gaps = []
    for big in (0.2, 0.1, 0.05):
        ds = ds_isotropic_explicit(
            LineElementInput(x=base.x, dx=base.dx, omega=1.0, capital_omega=big)
        )
        gaps.append(abs(ds - ds0))
    ratios = [gaps[0] / gaps[1], gaps[1] / gaps[2]]
    linear = all(abs(r - 2.0) < 0.3 for r in ratios)
    passed = worst < 1e-12 and linear
    return CheckResult(
        "line_element_backsubstitution",
        passed,
        {"max_implicit_residual": worst, "limit_ratios": ratios},
    )


def check_lorentz_force_standard_limit() -> CheckResult:
    """Constant-E hyperbolic and constant-B circular motion against closed
    forms over one characteristic period, to 1e-8; u-norm drift < 1e-8."""
    details = {}
    # hyperbolic: F_01 = E, generator kappa = -e0 E / m, start from rest
    mw = unit_measure(2)
    E, m, e0 = 0.5, 1.0, 1.0
    field_obj = GaugeField.uniform_electric(E, mw)
    state = WorldlineState(s=0.0, x=np.zeros(2), u=np.array([1.0, 0.0]))
    spec = ChargedParticleSpec(mass=m, charge=e0, initial=state)
    kappa = -e0 * E / m
    span = 2.0 / abs(kappa)  # two units of rapidity
    traj = integrate_charged(spec, field_obj, mw, (0.0, span), StepControl(step=span / 4000))
    u_exact = np.stack([np.cosh(kappa * traj.s), np.sinh(kappa * traj.s)], axis=1)
    x_exact = np.stack(
        [np.sinh(kappa * traj.s) / kappa, (np.cosh(kappa * traj.s) - 1.0) / kappa], axis=1
    )
    err_e = max(
        float(np.max(np.abs(traj.u - u_exact))), float(np.max(np.abs(traj.x - x_exact)))
    )
    drift_e = float(np.max(np.abs(traj.diagnostics["constraint_residual"])))
    details["uniform_e"] = {"closed_form_error": err_e, "u_norm_drift": drift_e}

    # circular: F_12 = B, angular rate k = e0 B / m in s, u0 constant
    mw4 = unit_measure(4)
    B, m4, e4, u_perp = 2.0, 1.5, 0.8, 0.4
    field_b = GaugeField.uniform_magnetic(B, mw4)
    state4 = WorldlineState(
        s=0.0, x=np.zeros(4), u=np.array([math.sqrt(1.0 + u_perp**2), u_perp, 0.0, 0.0])
    )
    spec4 = ChargedParticleSpec(mass=m4, charge=e4, initial=state4)
    k = e4 * B / m4
    period = 2.0 * math.pi / k
    traj4 = integrate_charged(spec4, field_b, mw4, (0.0, period), StepControl(step=period / 4000))
    u1 = u_perp * np.cos(k * traj4.s)
    u2 = -u_perp * np.sin(k * traj4.s)
    x1 = u_perp * np.sin(k * traj4.s) / k
    x2 = u_perp * (np.cos(k * traj4.s) - 1.0) / k
    err_b = max(
        float(np.max(np.abs(traj4.u[:, 1] - u1))),
        float(np.max(np.abs(traj4.u[:, 2] - u2))),
        float(np.max(np.abs(traj4.x[:, 1] - x1))),
        float(np.max(np.abs(traj4.x[:, 2] - x2))),
    )
    drift_b = float(np.max(np.abs(traj4.diagnostics["constraint_residual"])))
    details["uniform_b"] = {
        "closed_form_error": err_b,
        "u_norm_drift": drift_b,
        "gamma_frequency": k / state4.u[0],
    }
    passed = err_e < 1e-8 and err_b < 1e-8 and drift_e < 1e-8 and drift_b < 1e-8
    return CheckResult("lorentz_force_standard_limit", passed, details)


def _slow_trajectory(speed: float):
    weights = ActionWeights.unit(3)
    state = WorldlineState.from_spatial_velocity(0.0, np.zeros(3), [speed, 0.0], weights)
    return integrate(state, weights, (0.0, 1.0), StepControl(step=1e-3))


def check_nonrelativistic_limit() -> CheckResult:
    """Slow trajectory against the weighted nonrelativistic equation:
    < 1e-3 relative at velocity 0.01, scaling as velocity^2."""
    mw = unit_measure(3)
    d_base = nonrel_limit_compare(_slow_trajectory(0.01), mw).relative_deviation
    d_double = nonrel_limit_compare(_slow_trajectory(0.02), mw).relative_deviation
    ratio = d_double / d_base
    passed = d_base < 1e-3 and abs(ratio - 4.0) <= 1.0
    return CheckResult(
        "nonrelativistic_limit",
        passed,
        {"relative_deviation": d_base, "halving_ratio": ratio},
    )


def _mms_study(measure: MeasureWeight, domain_x=(0.5, 1.5)):
    field_obj = GaugeField.from_expressions(
        ("sin(1.3*x1 + 0.4*t)", "cos(0.7*x1 - 0.9*t)"), measure
    )
    strength = FieldStrength(field=field_obj)
    source = maxwell_source_function(strength)
    norms, spacings = [], []
    for n in (33, 65, 129):
        slab = SlabSpec(
            times=np.linspace(0.0, 1.0, n), spatial_axes=(np.linspace(*domain_x, n),)
        )
        F = sample_field_strength(strength, slab)
        J = slab.sample_vector(source)
        res = maxwell_continuity_residual(F, J, measure)
        if not res.consistent:
            raise AssertionError("manufactured source inconsistent with its field")
        norms.append(res.max_norm)
        spacings.append(float(slab.times[1] - slab.times[0]))
    return estimate_order(spacings, norms)


def check_maxwell_emt_convergence() -> CheckResult:
    """Manufactured-solution residual of the Maxwell continuity law
    converges at order 2.0 +- 0.3 for unit and binomial weights."""
    start = time.perf_counter()
    flat = _mms_study(unit_measure(2))
    weighted = _mms_study(
        MeasureWeight(profiles=(constant_profile(), binomial_profile(alpha=0.5))),
        domain_x=(0.75, 1.75),
    )
    runtime = time.perf_counter() - start
    passed = (
        abs(flat.order_estimate - 2.0) <= 0.3
        and abs(weighted.order_estimate - 2.0) <= 0.3
        and runtime < 30.0
    )
    return CheckResult(
        "maxwell_emt_convergence",
        passed,
        {
            "unit_weight_order": flat.order_estimate,
            "binomial_weight_order": weighted.order_estimate,
            "runtime_s": runtime,
        },
    )


def check_total_conservation() -> CheckResult:
    """Sum of the particle and Maxwell continuity residuals decreases
    monotonically under joint (h, sigma) refinement on the constant-E
    charged scenario."""
    mw = unit_measure(2)
    field_obj = GaugeField.uniform_electric(0.5, mw)
    strength = FieldStrength(field=field_obj)
    state = WorldlineState(s=0.0, x=np.zeros(2), u=np.array([1.0, 0.0]))
    spec = ChargedParticleSpec(mass=1.0, charge=1.0, initial=state)
    traj = integrate_charged(spec, field_obj, mw, (0.0, 0.9), StepControl(step=1e-3))
    source = maxwell_source_function(strength)
    norms = []
    sigmas = []
    for k, n in enumerate((33, 65, 129)):
        sigma = 0.12 * 0.8**k
        slab = SlabSpec(
            times=np.linspace(0.1, 0.7, n), spatial_axes=(np.linspace(-0.9, 0.7, n),)
        )
        ps = particle_slab(traj, spec, mw, slab, sigma)
        F = sample_field_strength(strength, slab)
        pres = particle_continuity_residual(ps.pT_upper, ps.J_e, F, mw)
        mres = maxwell_continuity_residual(F, slab.sample_vector(source), mw)
        total = total_continuity_residual(pres, mres)
        norms.append(max_interior(total, total.values))
        sigmas.append(sigma)
    monotone = all(a > b for a, b in zip(norms, norms[1:]))
    return CheckResult(
        "total_conservation", monotone, {"norms": norms, "sigmas": sigmas}
    )


def check_cyclic_identity() -> CheckResult:
    """Sqrt-weight cyclic sum of field-strength derivatives < 1e-10 at 100
    random points with multiscale weights; the full-weight form is nonzero
    and logged."""
    mw = MeasureWeight(
        profiles=(
            constant_profile(),
            binomial_profile(alpha=0.5),
            binomial_profile(alpha=0.75, scale=2.0),
        )
    )
    field_obj = GaugeField.from_expressions(
        ("sin(x1)*cos(x2)", "cos(t)*x2", "exp(0.2*x1)*sin(t)"), mw
    )
    strength = FieldStrength(field=field_obj)
    rng = np.random.default_rng(7)
    points = [
        np.array(
            [rng.uniform(0.2, 2.0), rng.uniform(0.5, 2.5), rng.uniform(0.5, 2.5)]
        )
        for _ in range(100)
    ]
    report = cyclic_identity_check(strength, points)
    passed = report.sqrt_form_max < 1e-10 and report.full_form_max > 1e-8
    return CheckResult(
        "cyclic_identity",
        passed,
        {
            "sqrt_form_max": report.sqrt_form_max,
            "full_form_max": report.full_form_max,
            "n_points": report.n_points,
        },
    )


def check_poincare_invariance() -> CheckResult:
    """boost(integrate) equals integrate(boost) within 1e-9 for unit
    weights."""
    weights = ActionWeights.unit(2)
    state = WorldlineState.from_spatial_velocity(0.0, [0.0, 0.3], [0.4], weights)
    lam = boost_matrix(0.6, axis=1, dimension=2)
    control = StepControl(step=1e-3)
    boosted_then = apply_lorentz(lam, integrate(state, weights, (0.0, 2.0), control))
    boosted_state = WorldlineState(
        s=0.0, x=apply_lorentz(lam, state.x), u=apply_lorentz(lam, state.u)
    )
    then_boosted = integrate(boosted_state, weights, (0.0, 2.0), control)
    gap = float(np.max(np.abs(boosted_then.x - then_boosted.x)))
    return CheckResult("poincare_invariance", gap < 1e-9, {"max_gap": gap})


def check_qtheory_exactness() -> CheckResult:
    """Affine geodesics, 1e-12 inversion round trips and mapped-space
    Lorentz invariance of the composite-coordinate line element."""
    coords = CompositeCoordinates(
        profiles=(identity_coordinate(), power_coordinate(0.5))
    )
    drho = np.array([math.sqrt(1.0 + 0.09), 0.3])
    traj = q_geodesic(coords, [0.0, 1.44], drho, (0.0, 2.0), 41)
    affinity = float(np.max(np.abs(np.diff(traj.rho, n=2, axis=0))))
    inversion = float(np.max(traj.inversion_residual))
    numeric = CompositeCoordinates(
        profiles=(identity_coordinate(), expression_coordinate("x1 + 0.1*sinh(x1)", (-10.0, 10.0)))
    )
    traj_num = q_geodesic(numeric, [0.0, 0.8], drho, (0.0, 2.0), 21)
    inversion = max(inversion, float(np.max(traj_num.inversion_residual)))

    # invariance of ds under mapped-space Lorentz transformations
    rng = np.random.default_rng(3)
    lam = boost_matrix(0.45, axis=1, dimension=2)
    worst_invariance = 0.0
    for _ in range(100):
        x = np.array([rng.uniform(-1.0, 1.0), rng.uniform(0.3, 2.0)])
        dx = np.array([rng.uniform(0.8, 1.2), rng.uniform(-0.1, 0.1)])
        ds = q_line_element(coords, x, dx)
        drho_vec = coords.jacobian_diagonal(x) * dx
        mapped = lam @ drho_vec
        ds_mapped = math.sqrt(-(-(mapped[0] ** 2) + mapped[1] ** 2))
        worst_invariance = max(worst_invariance, abs(ds - ds_mapped))
    passed = affinity < 5e-15 and inversion <= 1e-12 and worst_invariance < 1e-12
    return CheckResult(
        "qtheory_exactness",
        passed,
        {
            "affinity": affinity,
            "inversion_round_trip": inversion,
            "ds_invariance": worst_invariance,
        },
    )


def check_trajectory_convergence_order() -> CheckResult:
    """Global error against the closed form scales as step^4 (halving
    ratio 16 +- 30%) on the oracle scenarios."""
    details = {}
    passed = True
    for label in ("power", "exponential"):
        weights, state = _oracle_case(ORACLE_WEIGHTS[label])
        errors = []
        for h in (2e-2, 1e-2, 5e-3):
            traj = integrate(state, weights, (0.0, 2.0), StepControl(step=h))
            exact = closed_form_position(state, weights, traj.s)
            errors.append(float(np.max(np.abs(traj.x - exact))))
        ratios = [errors[0] / errors[1], errors[1] / errors[2]]
        details[label] = {"errors": errors, "ratios": ratios}
        passed = passed and all(16.0 * 0.7 <= r <= 16.0 * 1.3 for r in ratios)
    return CheckResult("trajectory_convergence_order", passed, details)


CHECKS: dict[str, Callable[[], CheckResult]] = {
    "integer_picture_oracle": check_integer_picture_oracle,
    "constraint_preservation": check_constraint_preservation,
    "mass_shell_dispersion": check_mass_shell_dispersion,
    "line_element_backsubstitution": check_line_element_backsubstitution,
    "lorentz_force_standard_limit": check_lorentz_force_standard_limit,
    "nonrelativistic_limit": check_nonrelativistic_limit,
    "maxwell_emt_convergence": check_maxwell_emt_convergence,
    "total_conservation": check_total_conservation,
    "cyclic_identity": check_cyclic_identity,
    "poincare_invariance": check_poincare_invariance,
    "qtheory_exactness": check_qtheory_exactness,
    "trajectory_convergence_order": check_trajectory_convergence_order,
}


def run_checks(name_filter: str | None = None) -> list[CheckResult]:
    results = []
    for name, func in CHECKS.items():
        if name_filter and name_filter not in name:
            continue
        results.append(func())
    return results
