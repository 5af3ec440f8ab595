"""Command-line front end for the experiment harness.

Exit codes: 0 success, 2 configuration error, 3 a configured guarantee
check failed, 4 runtime failure. Every run writes report.json, the plot
series for its kind, and manifest.json with the sha256 of each artifact.
"""

from __future__ import annotations

import argparse
import os
import sys

from .. import jsonfmt
from ..errors import ConfigError, DegenerateInputError, InfeasibleMiscoverageError
from .plots import _EMITTERS, emit_plot_data, write_manifest
from .runners import RUNNERS
from .spec import PRESETS, ensure_output_dir, resolve_spec

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARANTEE = 3
EXIT_RUNTIME = 4

_COMMANDS = {
    "collect": "collect",
    "calibrate": "calibrate",
    "coverage-mc": "coverage_mc",
    "warning-sweep": "warning_sweep",
    "policy-mod": "policy_mod_compare",
    "serve": "serve",
}

_CONFIG_FAULTS = (ConfigError, DegenerateInputError, InfeasibleMiscoverageError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="susguard",
        description="Calibrated unsafe-region experiments: data collection, calibration, "
        "coverage and warning-rate studies, policy comparison, labeling service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in _COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", help="TOML config file (overrides the preset table-by-table)")
        p.add_argument("--preset", choices=PRESETS, help="packaged preset name")
        p.add_argument("--seed", type=int, help="root seed override")
        p.add_argument("--out", help="output directory (required)")
        p.add_argument(
            "--epsilon",
            action="append",
            type=float,
            help="miscoverage level; repeat the flag to override the whole grid",
        )
    return parser


def _serve(args) -> int:
    # imported lazily so experiment commands do not need the service stack
    import uvicorn

    from ..service import create_app

    bind = os.environ.get("SUSGUARD_BIND", "127.0.0.1:8787")
    host, _, port = bind.rpartition(":")
    app = create_app()
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return _serve(args)

    try:
        spec = resolve_spec(
            preset=args.preset,
            config_path=args.config,
            seed=args.seed,
            output_dir=args.out,
            epsilon=args.epsilon,
            expected_kind=_COMMANDS[args.command],
        )
        ensure_output_dir(spec)
    except _CONFIG_FAULTS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        report = RUNNERS[spec.kind](spec)
    except _CONFIG_FAULTS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # solver failures, data collection budget, IO
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    try:
        with open(os.path.join(spec.output_dir, "report.json"), "w") as fh:
            fh.write(jsonfmt.dumps(report, sort_keys=True, indent=2) + "\n")
        if spec.kind in _EMITTERS:
            emit_plot_data(report, spec.kind, spec.output_dir)
        write_manifest(spec.output_dir, spec.kind, spec.seed)
    except Exception as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    failed = [c for c in report["checks"] if not c["passed"]]
    for check in report["checks"]:
        mark = "pass" if check["passed"] else "FAIL"
        print(f"[{mark}] {check['name']}: observed {check['observed']} vs bound {check['bound']}")
    if failed:
        print(f"{len(failed)} guarantee check(s) failed", file=sys.stderr)
        return EXIT_GUARANTEE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
