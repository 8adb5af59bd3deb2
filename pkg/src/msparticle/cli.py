"""Command-line entry point: scenario runner, verifier, parameter sweeps.

    msparticle run <scenario.ini> [--override section.key=value ...]
    msparticle verify [--filter NAME] [--output report.json]
    msparticle sweep <scenario.ini> --param section.key --values v1,v2,...

Exit codes: 0 success, 2 parse error, 3 validation error (the offending
key is named), 4 runtime numerical failure (with a diagnostic dump).
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import ConstraintDriftError, MsParticleError, ValidationError
from .scenario import SCHEMA_VERSION, Scenario, run_scenario

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4


def _parse_overrides(pairs) -> dict[str, str]:
    overrides = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ValidationError(
                f"override must look like section.key=value, got {pair!r}", field=pair
            )
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _load(path: str, overrides: dict[str, str] | None = None) -> Scenario:
    return Scenario.load(path, overrides=overrides)


def _cmd_run(args) -> int:
    scenario = _load(args.scenario, _parse_overrides(args.override))
    result = run_scenario(scenario)
    print(json.dumps(result.to_json_dict(), indent=2, sort_keys=True))
    return EXIT_OK if result.passed else EXIT_RUNTIME


def _cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(args.filter)
    if not results:
        raise ValidationError(f"no verification check matches {args.filter!r}", field="--filter")
    for result in results:
        print(f"{'PASS' if result.passed else 'FAIL'}  {result.name}")
    summary = {
        "schema_version": SCHEMA_VERSION,
        "passed": all(r.passed for r in results),
        "checks": [r.to_dict() for r in results],
    }
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    else:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK if summary["passed"] else EXIT_RUNTIME


def _sweep_worker(path: str, param: str, value: str) -> dict:
    scenario = Scenario.load(path, overrides={param: value})
    result = run_scenario(scenario)
    payload = result.to_json_dict()
    return {
        "value": value,
        "passed": payload["passed"],
        "checks": payload["checks"],
        "report": payload["report"],
    }


def _cmd_sweep(args) -> int:
    values = [tok.strip() for tok in args.values.split(",") if tok.strip()]
    if not values:
        raise ValidationError("sweep needs a non-empty --values list", field="--values")
    scenario = _load(args.scenario, {args.param: values[0]})  # validates param addressing
    del scenario
    if args.jobs == 1 or len(values) == 1:
        rows = [_sweep_worker(args.scenario, args.param, v) for v in values]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(
                pool.map(_sweep_worker, [args.scenario] * len(values), [args.param] * len(values), values)
            )
    # convergence-style ratio table when a scalar deviation is reported
    deviations = [row["report"].get("max_oracle_deviation") for row in rows]
    ratios = None
    if all(isinstance(d, float) and d > 0.0 for d in deviations):
        ratios = [deviations[i] / deviations[i + 1] for i in range(len(deviations) - 1)]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "parameter": args.param,
        "rows": rows,
        "error_ratios": ratios,
        "passed": all(row["passed"] for row in rows),
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if summary["passed"] else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msparticle",
        description="Relativistic particle dynamics in multiscale spacetimes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario file")
    run_p.add_argument("scenario")
    run_p.add_argument(
        "--override", action="append", metavar="SECTION.KEY=VALUE", help="config override"
    )
    run_p.set_defaults(func=_cmd_run)

    verify_p = sub.add_parser("verify", help="run the invariant verification suite")
    verify_p.add_argument("--filter", default=None, help="substring filter on check names")
    verify_p.add_argument("--output", default=None, help="write the JSON summary here")
    verify_p.set_defaults(func=_cmd_verify)

    sweep_p = sub.add_parser("sweep", help="run a scenario across parameter values")
    sweep_p.add_argument("scenario")
    sweep_p.add_argument("--param", required=True, metavar="SECTION.KEY")
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--jobs", type=int, default=None, help="parallel workers")
    sweep_p.add_argument("--output", default=None, help="write the JSON summary here")
    sweep_p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"parse error: cannot read scenario file: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except configparser.Error as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        name = f" ({exc.field})" if exc.field else ""
        print(f"validation error{name}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConstraintDriftError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        print(f"diagnostic dump: s={exc.s} state={exc.state}", file=sys.stderr)
        return EXIT_RUNTIME
    except MsParticleError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
