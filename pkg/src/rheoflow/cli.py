"""Command line entry points ``rheo`` and ``rheo-admit``.

Exit codes: 0 success, 1 a tolerance or check failed (or the solver
failed), 2 usage or parse error.

::

    rheo run <scenario> [--seed N] [--out-dir DIR]
    rheo sweep <scenario> --param eps --values 1e-1,1e-2,1e-3 [--out-dir DIR] [--threads N]
    rheo admit <relation> [--seed N] [--samples N] [--report out.json]
    rheo oracle <scenario> --out profile.csv [--points N]
    rheo list

A scenario or relation argument is a file path or the name of a bundled file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .admissibility import check_all, report_dict
from .config import bundled_scenarios, load_scenario
from .harness import OracleMismatch, run_scenario, sweep, write_oracle
from .io import dumps, write_json
from .kvfile import ConfigError
from .relations import bundled_relation_dir, load_relation
from .sampling import Sampler
from .solver import SolverError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _scenario_path(arg: str) -> Path:
    p = Path(arg)
    if p.is_file():
        return p
    bundled = bundled_scenarios()
    name = p.stem if p.suffix == ".scn" else arg
    if name in bundled:
        return bundled[name]
    raise FileNotFoundError(f"no scenario file or bundled scenario named {arg!r}")


def _relation_path(arg: str) -> Path:
    p = Path(arg)
    if p.is_file():
        return p
    for cand in (bundled_relation_dir() / arg, bundled_relation_dir() / f"{arg}.rel"):
        if cand.is_file():
            return cand
    raise FileNotFoundError(f"no relation file or bundled relation named {arg!r}")


def _values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _at(seq, i):
    return seq[i] if 0 <= i < len(seq) else None


def _fmt(v) -> str:
    return f"{v:.6g}" if isinstance(v, float) else str(v)


# subcommands ----------------------------------------------------------------------
def cmd_run(args) -> int:
    res = run_scenario(_scenario_path(args.scenario), out_dir=args.out_dir, seed=args.seed)
    m = res.metrics
    print(f"scenario {res.scenario.name}: steps={m['steps']} t={_fmt(m['t_final'])} runtime={res.runtime:.1f}s")
    for name, c in res.checks.items():
        mark = "ok  " if c["passed"] else "FAIL"
        print(f"  {mark} {name}: {_fmt(c['value'])} (bound {_fmt(c['bound'])})")
    if args.out_dir:
        print(f"artifacts in {args.out_dir}")
    return res.exit_code


def cmd_sweep(args) -> int:
    path = _scenario_path(args.scenario)
    res = sweep(path, args.param, args.values, threads=args.threads)
    if res.failed:
        print(f"sweep failed: {res.message}", file=sys.stderr)
    else:
        print(f"{'value':>12} {'error':>12} {'difference':>12} {'order':>8}")
        # without an oracle the errors are the successive differences
        shift = 0 if len(res.errors) == len(res.values) else -1
        for k, v in enumerate(res.values):
            err = _at(res.errors, k + shift)
            diff = _at(res.differences, k - 1)
            order = _at(res.orders, k - 1 + shift)
            print(f"{v:12.4g} {_fmt(err):>12} {_fmt(diff):>12} {_fmt(order):>8}")
        print(f"identical outputs: {res.identical}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = load_scenario(path).name
        write_json(out / f"{name}_sweep_{args.param}.json", res.to_dict())
    return EXIT_FAIL if res.failed else EXIT_OK


def cmd_admit(args) -> int:
    rel = load_relation(_relation_path(args.relation))
    sampler = Sampler(seed=args.seed, count=args.samples)
    reports = check_all(rel, sampler)
    data = report_dict(rel, reports, sampler)
    for r in reports:
        consts = ", ".join(f"{k}={_fmt(v)}" for k, v in r.estimated_constants.items()
                           if isinstance(v, (int, float)))
        print(f"  {r.condition:7s} {r.status:12s} {consts}")
    print("all conditions passed" if data["passed"] else "some conditions failed")
    if args.report:
        Path(args.report).write_text(dumps(data))
    return EXIT_OK if data["passed"] else EXIT_FAIL


def cmd_oracle(args) -> int:
    sc = load_scenario(_scenario_path(args.scenario))
    write_oracle(sc, args.out, n=args.points)
    print(f"oracle profile written to {args.out}")
    return EXIT_OK


def cmd_list(args) -> int:
    for name, path in bundled_scenarios().items():
        print(f"scenario  {name:36s} {path}")
    for path in sorted(bundled_relation_dir().glob("*.rel")):
        print(f"relation  {path.stem:36s} {path}")
    return EXIT_OK


# parsers --------------------------------------------------------------------------
def _admit_args(p):
    p.add_argument("relation", help="relation file or bundled relation name")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=64, help="points per radius shell")
    p.add_argument("--report", help="write the JSON report here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rheo", description="Implicit-rheology flow solver and admissibility checker.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a scenario and check its tolerances")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="vary one discretization parameter")
    p.add_argument("scenario")
    p.add_argument("--param", required=True, choices=("eps", "delta", "h", "dt"))
    p.add_argument("--values", required=True, type=_values)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("admit", help="check a relation for admissibility")
    _admit_args(p)
    p.set_defaults(func=cmd_admit)

    p = sub.add_parser("oracle", help="write the semi-analytic profile of a scenario")
    p.add_argument("scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=201)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("list", help="list bundled scenarios and relations")
    p.set_defaults(func=cmd_list)
    return parser


def _dispatch(func, args) -> int:
    try:
        return func(args)
    except (ConfigError, OracleMismatch, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _dispatch(args.func, args)


def admit_main(argv=None) -> int:
    parser = _Parser(prog="rheo-admit", description="Admissibility report for a relation file.")
    _admit_args(parser)
    return _dispatch(cmd_admit, parser.parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
