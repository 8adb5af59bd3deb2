"""Scenario configs: sectioned key/value files driving every run mode.

A scenario file is INI-style with sections [scenario], [measure],
[action_weights], [particle], [field], [qtheory], [numerics], [emt],
[output].  Closed-form inputs (weights, gauge components, coordinate
profiles) are expression strings in the variables t, x1..x3, s.

Validation is strict and names the offending key; the charged mode checks
the field-theory compatibility condition (constant time weight, unit
worldline weights) at load time rather than deep inside the integrator.
"""

from __future__ import annotations

import configparser
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calculus import ScalarWeight
from .charged_particle import (
    ChargedParticleSpec,
    FieldStrength,
    GaugeField,
    integrate_charged,
    maxwell_source_function,
)
from .emtensor import (
    SlabSpec,
    estimate_order,
    mass_continuity_residual,
    max_interior,
    maxwell_continuity_residual,
    particle_continuity_residual,
    particle_slab,
    sample_field_strength,
    total_continuity_residual,
)
from .errors import CompatibilityError, MsParticleError, ValidationError
from .free_particle import ActionWeights, StepControl, Trajectory, WorldlineState, integrate
from .measure import MeasureWeight, ProfileKind, WeightProfile, constant_profile
from .qtheory import (
    CompositeCoordinates,
    CoordinateProfile,
    expression_coordinate,
    identity_coordinate,
    power_coordinate,
    q_geodesic,
)

MODES = ("free_isotropic", "free_anisotropic", "charged", "qtheory", "emt_verify")
OUTPUT_DIR_ENV = "MSPARTICLE_OUTPUT_DIR"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    value: float
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": float(self.value),
            "tolerance": float(self.tolerance),
        }


@dataclass
class RunResult:
    mode: str
    checks: list[CheckOutcome] = field(default_factory=list)
    artifacts: dict[str, str] = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    trajectory: Trajectory | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "mode": self.mode,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "artifacts": self.artifacts,
            "report": self.report,
        }


class _Section:
    """Typed access to one config section with key-naming errors."""

    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.present = parser.has_section(name)
        self._data = dict(parser.items(name)) if self.present else {}

    def require(self) -> "_Section":
        if not self.present:
            raise ValidationError(f"missing required section [{self.name}]", field=self.name)
        return self

    def has(self, key: str) -> bool:
        return key in self._data

    def raw(self, key: str, default: str | None = None) -> str:
        if key not in self._data:
            if default is not None:
                return default
            raise ValidationError(
                f"missing required key {self.name}.{key}", field=f"{self.name}.{key}"
            )
        return self._data[key].strip()

    def real(self, key: str, default: float | None = None) -> float:
        raw = self.raw(key, None if default is None else repr(default))
        try:
            return float(raw)
        except ValueError as exc:
            raise ValidationError(
                f"{self.name}.{key} must be a number, got {raw!r}", field=f"{self.name}.{key}"
            ) from exc

    def integer(self, key: str, default: int | None = None) -> int:
        raw = self.raw(key, None if default is None else str(default))
        try:
            return int(raw)
        except ValueError as exc:
            raise ValidationError(
                f"{self.name}.{key} must be an integer, got {raw!r}", field=f"{self.name}.{key}"
            ) from exc

    def boolean(self, key: str, default: bool) -> bool:
        raw = self.raw(key, "true" if default else "false").lower()
        if raw in ("true", "yes", "1", "on"):
            return True
        if raw in ("false", "no", "0", "off"):
            return False
        raise ValidationError(
            f"{self.name}.{key} must be a boolean, got {raw!r}", field=f"{self.name}.{key}"
        )

    def floats(self, key: str, default: str | None = None) -> list[float]:
        raw = self.raw(key, default)
        try:
            return [float(tok) for tok in raw.split(",") if tok.strip()]
        except ValueError as exc:
            raise ValidationError(
                f"{self.name}.{key} must be comma-separated numbers, got {raw!r}",
                field=f"{self.name}.{key}",
            ) from exc


def _parse_profile(section: _Section, prefix: str) -> WeightProfile:
    kind = section.raw(f"{prefix}.kind", "constant").lower()
    if kind == "constant":
        return constant_profile()
    if kind in ("power", "power-law", "power_law"):
        return WeightProfile(
            kind=ProfileKind.POWER,
            alpha=section.real(f"{prefix}.alpha"),
            scale=section.real(f"{prefix}.length_scale", 1.0),
            epsilon=section.real(f"{prefix}.epsilon", 0.0),
        )
    if kind == "binomial":
        return WeightProfile(
            kind=ProfileKind.BINOMIAL,
            alpha=section.real(f"{prefix}.alpha"),
            scale=section.real(f"{prefix}.length_scale", 1.0),
            epsilon=section.real(f"{prefix}.epsilon", 0.0),
        )
    if kind == "multiscale":
        raw = section.raw(f"{prefix}.terms")
        terms = []
        for tok in raw.split(","):
            tok = tok.strip()
            if not tok:
                continue
            try:
                alpha_str, scale_str = tok.split(":")
                terms.append((float(alpha_str), float(scale_str)))
            except ValueError as exc:
                raise ValidationError(
                    f"{section.name}.{prefix}.terms entries must be alpha:scale, got {tok!r}",
                    field=f"{section.name}.{prefix}.terms",
                ) from exc
        return WeightProfile(
            kind=ProfileKind.MULTISCALE,
            terms=tuple(terms),
            epsilon=section.real(f"{prefix}.epsilon", 0.0),
        )
    raise ValidationError(
        f"unknown profile kind {kind!r} for {section.name}.{prefix}.kind",
        field=f"{section.name}.{prefix}.kind",
    )


def _parse_measure(section: _Section, dimension: int) -> MeasureWeight:
    profiles = tuple(_parse_profile(section, f"v{mu}") for mu in range(dimension))
    return MeasureWeight(profiles=profiles)


def _parse_action_weights(section: _Section, dimension: int, mode: str) -> ActionWeights:
    if not section.present or (not section.has("omega") and not section.has("omega0")):
        return ActionWeights.unit(dimension)
    if section.has("omega"):
        expr = section.raw("omega")
        if expr.strip() in ("1", "1.0"):
            return ActionWeights.unit(dimension)
        return ActionWeights.make_isotropic(ScalarWeight.from_expression(expr), dimension)
    profiles = []
    for mu in range(dimension):
        expr = section.raw(f"omega{mu}", "1")
        profiles.append(
            ScalarWeight.unit() if expr.strip() in ("1", "1.0") else ScalarWeight.from_expression(expr)
        )
    return ActionWeights.make_anisotropic(profiles)


def _weights_are_unit(weights: ActionWeights) -> bool:
    probe = np.linspace(0.0, 1.0, 5)
    try:
        return all(
            abs(p(s) - 1.0) < 1e-14 for p in weights.profiles for s in probe
        )
    except MsParticleError:
        return False


@dataclass
class Scenario:
    """Parsed scenario, ready to run."""

    mode: str
    dimension: int
    seed: int
    measure: MeasureWeight
    numerics: dict
    output: dict
    parser: configparser.ConfigParser
    path: str

    @staticmethod
    def load(path, overrides: dict[str, str] | None = None) -> "Scenario":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        text = Path(path).read_text(encoding="utf-8")
        parser.read_string(text, source=str(path))
        if overrides:
            for dotted, value in overrides.items():
                try:
                    section_name, key = dotted.split(".", 1)
                except ValueError as exc:
                    raise ValidationError(
                        f"override key must be section.key, got {dotted!r}", field=dotted
                    ) from exc
                if not parser.has_section(section_name):
                    parser.add_section(section_name)
                parser.set(section_name, key, str(value))
        scn = _Section(parser, "scenario").require()
        mode = scn.raw("mode").lower()
        if mode not in MODES:
            raise ValidationError(
                f"scenario.mode must be one of {MODES}, got {mode!r}", field="scenario.mode"
            )
        dimension = scn.integer("dimension", 2)
        if dimension < 2:
            raise ValidationError("scenario.dimension must be >= 2", field="scenario.dimension")
        measure = _parse_measure(_Section(parser, "measure"), dimension)
        numerics_sec = _Section(parser, "numerics")
        numerics = {
            "s_start": numerics_sec.real("s_start", 0.0),
            "s_end": numerics_sec.real("s_end", 1.0),
            "step": numerics_sec.real("step", 1e-3),
            "adaptive": numerics_sec.boolean("adaptive", False),
            "tolerance": numerics_sec.real("tolerance", 1e-12),
            "hard_drift_limit": numerics_sec.real("hard_drift_limit", 1e-6),
            "sigma": numerics_sec.real("sigma", 0.1),
            "constraint_tolerance": numerics_sec.real("constraint_tolerance", 1e-8),
            "shell_tolerance": numerics_sec.real("shell_tolerance", 1e-8),
            "eom_tolerance": numerics_sec.real("eom_tolerance", 1e-9),
        }
        output_sec = _Section(parser, "output")
        output = {
            "trajectory_csv": output_sec.raw("trajectory_csv", "") if output_sec.present else "",
            "report_json": output_sec.raw("report_json", "") if output_sec.present else "",
            "residual_csv": output_sec.raw("residual_csv", "") if output_sec.present else "",
        }
        return Scenario(
            mode=mode,
            dimension=dimension,
            seed=scn.integer("seed", 0),
            measure=measure,
            numerics=numerics,
            output=output,
            parser=parser,
            path=str(path),
        )

    # --- per-mode assembly -------------------------------------------------

    def step_control(self) -> StepControl:
        return StepControl(
            step=self.numerics["step"],
            adaptive=self.numerics["adaptive"],
            tolerance=self.numerics["tolerance"],
            hard_drift_limit=self.numerics["hard_drift_limit"],
        )

    def action_weights(self) -> ActionWeights:
        return _parse_action_weights(
            _Section(self.parser, "action_weights"), self.dimension, self.mode
        )

    def particle_section(self) -> _Section:
        return _Section(self.parser, "particle").require()

    def initial_state(self, weights: ActionWeights) -> WorldlineState:
        particle = self.particle_section()
        x0 = particle.floats("x0", ",".join(["0"] * self.dimension))
        if len(x0) != self.dimension:
            raise ValidationError(
                f"particle.x0 needs {self.dimension} components", field="particle.x0"
            )
        u_spatial = particle.floats("u_spatial", ",".join(["0"] * (self.dimension - 1)))
        if len(u_spatial) != self.dimension - 1:
            raise ValidationError(
                f"particle.u_spatial needs {self.dimension - 1} components",
                field="particle.u_spatial",
            )
        return WorldlineState.from_spatial_velocity(
            self.numerics["s_start"], np.array(x0), np.array(u_spatial), weights
        )

    def gauge_field(self) -> GaugeField:
        sec = _Section(self.parser, "field").require()
        preset = sec.raw("preset", "custom").lower()
        if preset == "uniform_e":
            return GaugeField.uniform_electric(sec.real("strength"), self.measure)
        if preset == "uniform_b":
            return GaugeField.uniform_magnetic(sec.real("strength"), self.measure)
        if preset == "custom":
            sources = [sec.raw(f"a{mu}", "0") for mu in range(self.dimension)]
            return GaugeField.from_expressions(sources, self.measure)
        raise ValidationError(
            f"field.preset must be uniform_E, uniform_B or custom, got {preset!r}",
            field="field.preset",
        )

    def validate_charged_compatibility(self, weights: ActionWeights) -> None:
        """The coupling to mapped field theory requires v_0 = 1 and unit
        worldline weights (spacetime multiscale only along spatial
        directions)."""
        if not self.measure.is_spatial_only:
            raise ValidationError(
                "charged mode requires a constant time weight v0 (geometry multiscale "
                "only along spatial directions); set measure.v0.kind = constant",
                field="measure.v0.kind",
            )
        if not _weights_are_unit(weights):
            raise ValidationError(
                "charged mode requires unit worldline weights w = 1 (compatibility of "
                "particle mechanics with the mapped field theory)",
                field="action_weights.omega",
            )

    def coordinates(self) -> CompositeCoordinates:
        sec = _Section(self.parser, "qtheory").require()
        profiles = []
        for mu in range(self.dimension):
            profiles.append(_parse_coordinate(sec, f"rho{mu}"))
        return CompositeCoordinates(profiles=tuple(profiles))


def _parse_coordinate(sec: _Section, key: str) -> CoordinateProfile:
    raw = sec.raw(key, "identity")
    if raw == "identity":
        return identity_coordinate()
    if raw.startswith("power:"):
        try:
            return power_coordinate(float(raw.split(":", 1)[1]))
        except ValueError as exc:
            raise ValidationError(
                f"{sec.name}.{key} power profile needs a numeric exponent, got {raw!r}",
                field=f"{sec.name}.{key}",
            ) from exc
    if raw.startswith("expr:"):
        parts = raw.split(":", 1)[1].split("|")
        if len(parts) < 2:
            raise ValidationError(
                f"{sec.name}.{key} expression profile needs expr:<source>|<lo>,<hi>",
                field=f"{sec.name}.{key}",
            )
        source = parts[0].strip()
        lo_hi = parts[1].split(",")
        lo = float(lo_hi[0]) if lo_hi[0].strip() not in ("-inf", "") else -math.inf
        hi = float(lo_hi[1]) if lo_hi[1].strip() not in ("inf", "") else math.inf
        exponent = float(parts[2]) if len(parts) > 2 else 1.0
        return expression_coordinate(source, (lo, hi), exponent)
    raise ValidationError(
        f"{sec.name}.{key} must be identity, power:<b> or expr:..., got {raw!r}",
        field=f"{sec.name}.{key}",
    )


# --- running ---------------------------------------------------------------------


def _resolve_output(path_str: str, scenario_path: str) -> Path:
    override = os.environ.get(OUTPUT_DIR_ENV)
    path = Path(path_str)
    if override:
        path = Path(override) / path.name
    elif not path.is_absolute():
        path = Path(scenario_path).parent / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def run_scenario(scenario: Scenario) -> RunResult:
    """Dispatch on mode, write artifacts, evaluate the enabled checks."""
    if scenario.mode in ("free_isotropic", "free_anisotropic"):
        result = _run_free(scenario)
    elif scenario.mode == "charged":
        result = _run_charged(scenario)
    elif scenario.mode == "qtheory":
        result = _run_qtheory(scenario)
    else:
        result = _run_emt(scenario)
    if scenario.output["report_json"]:
        path = _resolve_output(scenario.output["report_json"], scenario.path)
        path.write_text(json.dumps(result.to_json_dict(), indent=2, sort_keys=True) + "\n")
        result.artifacts["report_json"] = str(path)
    return result


def _write_trajectory(scenario: Scenario, trajectory: Trajectory, result: RunResult) -> None:
    if scenario.output["trajectory_csv"]:
        path = _resolve_output(scenario.output["trajectory_csv"], scenario.path)
        trajectory.to_csv(path)
        result.artifacts["trajectory_csv"] = str(path)


def _span(scenario: Scenario) -> tuple[float, float]:
    span = (scenario.numerics["s_start"], scenario.numerics["s_end"])
    if span[1] <= span[0]:
        raise ValidationError("numerics.s_end must exceed numerics.s_start", field="numerics.s_end")
    return span


def _trajectory_checks(scenario: Scenario, traj: Trajectory, mass: float) -> list[CheckOutcome]:
    span = traj.s[-1] - traj.s[0]
    drift = float(np.max(np.abs(traj.diagnostics["constraint_residual"]))) / max(span, 1.0)
    shell = float(np.max(traj.diagnostics["shell_residual"]))
    checks = [
        CheckOutcome(
            "constraint_drift_per_unit_s",
            drift <= scenario.numerics["constraint_tolerance"],
            drift,
            scenario.numerics["constraint_tolerance"],
        ),
        CheckOutcome(
            "mass_shell_residual",
            shell <= scenario.numerics["shell_tolerance"] * mass**2,
            shell,
            scenario.numerics["shell_tolerance"] * mass**2,
        ),
    ]
    if "eom_residual" in traj.diagnostics:
        interior = traj.diagnostics["eom_residual"][2:-2]
        eom = float(np.max(interior)) if len(interior) else 0.0
        checks.append(
            CheckOutcome(
                "eom_residual_interior",
                eom <= scenario.numerics["eom_tolerance"],
                eom,
                scenario.numerics["eom_tolerance"],
            )
        )
    return checks


def _run_free(scenario: Scenario) -> RunResult:
    weights = scenario.action_weights()
    if scenario.mode == "free_isotropic" and not weights.isotropic:
        raise ValidationError(
            "free_isotropic mode needs a single omega expression", field="action_weights.omega"
        )
    mass = scenario.particle_section().real("mass", 1.0)
    state = scenario.initial_state(weights)
    traj = integrate(state, weights, _span(scenario), scenario.step_control(), mass=mass)
    result = RunResult(mode=scenario.mode, trajectory=traj)
    result.checks = _trajectory_checks(scenario, traj, mass)
    oracle = float(np.max(traj.diagnostics["oracle_deviation"]))
    scale = float(np.max(np.abs(traj.x)))
    result.report["max_oracle_deviation"] = oracle
    result.report["trajectory_scale"] = scale
    _write_trajectory(scenario, traj, result)
    return result


def _run_charged(scenario: Scenario) -> RunResult:
    weights = scenario.action_weights()
    scenario.validate_charged_compatibility(weights)
    particle = scenario.particle_section()
    mass = particle.real("mass", 1.0)
    charge = particle.real("charge", 1.0)
    state = scenario.initial_state(ActionWeights.unit(scenario.dimension))
    spec = ChargedParticleSpec(mass=mass, charge=charge, initial=state)
    field_obj = scenario.gauge_field()
    traj = integrate_charged(
        spec, field_obj, scenario.measure, _span(scenario), scenario.step_control()
    )
    result = RunResult(mode=scenario.mode, trajectory=traj)
    result.checks = _trajectory_checks(scenario, traj, mass)
    _write_trajectory(scenario, traj, result)
    return result


def _run_qtheory(scenario: Scenario) -> RunResult:
    coords = scenario.coordinates()
    sec = _Section(scenario.parser, "qtheory").require()
    x0 = sec.floats("x0")
    if len(x0) != scenario.dimension:
        raise ValidationError(
            f"qtheory.x0 needs {scenario.dimension} components", field="qtheory.x0"
        )
    drho_spatial = sec.floats("drho_spatial", ",".join(["0"] * (scenario.dimension - 1)))
    drho0 = math.sqrt(1.0 + float(np.dot(drho_spatial, drho_spatial)))
    drho = np.concatenate([[drho0], drho_spatial])
    n_samples = sec.integer("samples", 101)
    qtraj = q_geodesic(coords, np.array(x0), drho, _span(scenario), n_samples)
    traj = qtraj.to_trajectory()
    result = RunResult(mode=scenario.mode, trajectory=traj)
    affinity = float(np.max(traj.diagnostics["affinity_residual"]))
    inversion = float(np.max(traj.diagnostics["inversion_residual"]))
    result.checks = [
        CheckOutcome("geodesic_affinity", affinity <= 1e-12, affinity, 1e-12),
        CheckOutcome("inversion_round_trip", inversion <= 1e-12, inversion, 1e-12),
    ]
    _write_trajectory(scenario, traj, result)
    return result


def _run_emt(scenario: Scenario) -> RunResult:
    sec = _Section(scenario.parser, "emt").require()
    check = sec.raw("check").lower()
    if check == "maxwell_mms":
        return _run_maxwell_mms(scenario, sec)
    if check == "mass_continuity":
        return _run_mass_continuity(scenario, sec)
    if check == "total_conservation":
        return _run_total_conservation(scenario, sec)
    raise ValidationError(
        f"emt.check must be maxwell_mms, mass_continuity or total_conservation, got {check!r}",
        field="emt.check",
    )


def _slab_for(scenario: Scenario, sec: _Section, n: int) -> SlabSpec:
    t_lo, t_hi = sec.floats("domain_t", "0.0, 1.0")
    spatial = []
    for i in range(1, scenario.dimension):
        lo, hi = sec.floats(f"domain_x{i}", "0.5, 1.5")
        spatial.append(np.linspace(lo, hi, n))
    return SlabSpec(times=np.linspace(t_lo, t_hi, n), spatial_axes=tuple(spatial))


def _run_maxwell_mms(scenario: Scenario, sec: _Section) -> RunResult:
    sources = [sec.raw(f"a{mu}", "0") for mu in range(scenario.dimension)]
    field_obj = GaugeField.from_expressions(sources, scenario.measure)
    strength = FieldStrength(field=field_obj)
    source = maxwell_source_function(strength)
    levels = [int(v) for v in sec.floats("levels", "33, 65, 129")]
    norms, spacings = [], []
    residual_field = None
    for n in levels:
        slab = _slab_for(scenario, sec, n)
        F = sample_field_strength(strength, slab)
        J = slab.sample_vector(source)
        res = maxwell_continuity_residual(F, J, scenario.measure)
        norms.append(res.max_norm)
        spacings.append(float(slab.times[1] - slab.times[0]))
        residual_field = res.residual
    study = estimate_order(spacings, norms)
    order_lo = sec.real("order_min", 1.7)
    order_hi = sec.real("order_max", 2.3)
    result = RunResult(mode=scenario.mode)
    result.report = study.to_json_dict()
    result.checks = [
        CheckOutcome(
            "maxwell_mms_order",
            order_lo <= study.order_estimate <= order_hi,
            study.order_estimate,
            order_hi,
        )
    ]
    if scenario.output["residual_csv"] and residual_field is not None:
        path = _resolve_output(scenario.output["residual_csv"], scenario.path)
        residual_field.to_csv(path)
        result.artifacts["residual_csv"] = str(path)
    return result


def _charged_trajectory_for_emt(scenario: Scenario, sec: _Section):
    particle = scenario.particle_section()
    mass = particle.real("mass", 1.0)
    charge = particle.real("charge", 1.0)
    state = scenario.initial_state(ActionWeights.unit(scenario.dimension))
    spec = ChargedParticleSpec(mass=mass, charge=charge, initial=state)
    field_obj = scenario.gauge_field()
    traj = integrate_charged(
        spec, field_obj, scenario.measure, _span(scenario), scenario.step_control()
    )
    return spec, field_obj, traj


def _run_mass_continuity(scenario: Scenario, sec: _Section) -> RunResult:
    spec, _, traj = _charged_trajectory_for_emt(scenario, sec)
    levels = [int(v) for v in sec.floats("levels", "33, 65")]
    sigma = scenario.numerics["sigma"]
    norms, spacings, drifts = [], [], []
    for n in levels:
        slab = _slab_for(scenario, sec, n)
        ps = particle_slab(traj, spec, scenario.measure, slab, sigma)
        res = mass_continuity_residual(ps.J_m, scenario.measure)
        norms.append(res.max_norm)
        spacings.append(float(slab.times[1] - slab.times[0]))
        drifts.append(res.relative_mass_drift)
    study = estimate_order(spacings, norms)
    result = RunResult(mode=scenario.mode)
    result.report = study.to_json_dict()
    result.report["relative_mass_drift"] = drifts[-1]
    result.checks = [
        CheckOutcome("mass_continuity_order", study.order_estimate >= 1.5, study.order_estimate, 1.5),
        CheckOutcome("total_mass_drift", drifts[-1] <= 1e-3, drifts[-1], 1e-3),
    ]
    return result


def _run_total_conservation(scenario: Scenario, sec: _Section) -> RunResult:
    spec, field_obj, traj = _charged_trajectory_for_emt(scenario, sec)
    strength = FieldStrength(field=field_obj)
    levels = [int(v) for v in sec.floats("levels", "33, 65, 129")]
    sigma0 = scenario.numerics["sigma"]
    sigma_factor = sec.real("sigma_factor", 0.8)
    norms = []
    for k, n in enumerate(levels):
        slab = _slab_for(scenario, sec, n)
        sigma = sigma0 * sigma_factor**k
        ps = particle_slab(traj, spec, scenario.measure, slab, sigma)
        F = sample_field_strength(strength, slab)
        pres = particle_continuity_residual(ps.pT_upper, ps.J_e, F, scenario.measure)
        source = maxwell_source_function(strength)
        J_field = slab.sample_vector(source)
        mres = maxwell_continuity_residual(F, J_field, scenario.measure)
        total = total_continuity_residual(pres, mres)
        norms.append(max_interior(total, total.values))
    monotone = all(a > b for a, b in zip(norms, norms[1:]))
    result = RunResult(mode=scenario.mode)
    result.report = {"norms": norms, "levels": levels, "sigma0": sigma0, "sigma_factor": sigma_factor}
    result.checks = [
        CheckOutcome("total_conservation_monotone", monotone, norms[-1], norms[0])
    ]
    return result
