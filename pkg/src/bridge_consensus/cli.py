"""Command-line front end.

Exit codes: 0 success / converged, 1 bad input or I/O failure, 2 ran but did
not converge. The summary block on stdout is one ``key=value`` per line.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import sim
from .bridge import naive_init_baseline
from .errors import BridgeConsensusError, ValidationError
from .sim import fmt_float

DEMOS = ("fig1", "fig3", "naive-baseline")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bridge-consensus", description="Run and check bridge-consensus scenarios.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("file")
    run.add_argument("--trace", metavar="PATH", help="write the per-round trace CSV here")
    run.add_argument("--tol", type=float, help="override the scenario's tolerance")
    run.add_argument("--max-rounds", type=int, help="override the scenario's round limit")

    val = sub.add_parser("validate", help="check a scenario file and list findings")
    val.add_argument("file")

    demo = sub.add_parser("demo", help="run a bundled example")
    demo.add_argument("name", choices=DEMOS)
    demo.add_argument("--trace", metavar="PATH", help="write the per-round trace CSV here")
    return parser


def _vec(v) -> str:
    return ",".join(fmt_float(float(c)) for c in v)


def _print_findings(findings, stream) -> None:
    for f in findings:
        print(f, file=stream)


def _execute(scenario: sim.Scenario, label: str, trace_path: str | None) -> int:
    result, trace = sim.run_scenario(scenario)
    if trace_path:
        sim.write_trace(trace, trace_path)
    print(f"scenario={label}")
    print(f"converged={'true' if result.converged else 'false'}")
    print(f"rounds={result.rounds}")
    print(f"target={_vec(result.target)}")
    print(f"max_error={fmt_float(result.max_error)}")
    for i, e in enumerate(result.final_estimates, start=1):
        print(f"estimate_{i}={_vec(e.mu) if e.defined else 'undefined'}")
    return 0 if result.converged else 2


def _cmd_run(args) -> int:
    scenario = sim.load_scenario(args.file, check=False)
    overrides = {}
    if args.tol is not None:
        overrides["tol"] = args.tol
    if args.max_rounds is not None:
        overrides["max_rounds"] = args.max_rounds
    if overrides:
        scenario = dataclasses.replace(scenario, **overrides)
    findings = sim.validate(scenario)
    _print_findings([f for f in findings if f.level == "warning"], sys.stderr)
    if sim.errors_of(findings):
        raise ValidationError(findings)
    return _execute(scenario, args.file, args.trace)


def _cmd_validate(args) -> int:
    findings = sim.validate(sim.load_scenario(args.file, check=False))
    _print_findings(findings, sys.stdout)
    n_err = len(sim.errors_of(findings))
    print(f"errors={n_err}")
    print(f"warnings={len(findings) - n_err}")
    return 1 if n_err else 0


def _cmd_demo(args) -> int:
    if args.name == "naive-baseline":
        if args.trace:
            print("error: naive-baseline produces no trace", file=sys.stderr)
            return 1
        s = sim.bundled_scenario("fig1")
        states = naive_init_baseline(
            [None if v is None else v[0] for v in s.values], s.participation, s.schedule.topology_at(0)
        )
        for i, x in enumerate(states, start=1):
            print(f"state_{i}={fmt_float(x)}")
        print(f"mean={fmt_float(sum(states) / len(states))}")
        return 0
    return _execute(sim.bundled_scenario(args.name), args.name, args.trace)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "validate": _cmd_validate, "demo": _cmd_demo}[args.command]
    try:
        return handler(args)
    except ValidationError as exc:
        _print_findings(exc.findings, sys.stderr)
        return 1
    except BridgeConsensusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
