"""Command-line entry point.

    fsl1d solve --method spline3 --nx 80 --nt 1000
    fsl1d convergence --experiment fig1 --methods spline3,hermite5 --out fig1.csv
    fsl1d verify

Exit codes: 0 success, 1 usage error, 2 solver or verification failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .core import METHOD_NAMES, ConfigurationError
from .experiments import ExperimentSpec, UsageError, run_experiment, write_csv
from .problems import BurgersBenchmark
from .verify import run_verify

log = logging.getLogger("fsl1d")

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2

_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.lower().replace("-", "_")] = value
    return out


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _name_list(text: str) -> tuple:
    return tuple(v.strip().lower() for v in str(text).split(",") if v.strip())


_KEYS = {
    "experiment", "methods", "method", "nx", "nt", "a", "nu", "t_final",
    "out", "output_path", "threads", "strict_dt", "timing",
}


def build_spec(args: argparse.Namespace, experiment: Optional[str] = None) -> ExperimentSpec:
    """Merge config-file values with command-line flags (flags win)."""
    conf = read_config(args.config) if getattr(args, "config", None) else {}
    unknown = set(conf) - _KEYS
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")

    def pick(flag, key, convert=str):
        value = getattr(args, flag, None)
        if value is not None:
            return value
        return convert(conf[key]) if key in conf else None

    def to_bool(text):
        try:
            return _BOOL[str(text).strip().lower()]
        except KeyError:
            raise UsageError(f"expected a boolean, got {text!r}") from None

    def to_float(text):
        try:
            return float(text)
        except ValueError:
            raise UsageError(f"expected a number, got {text!r}") from None

    experiment = experiment or pick("experiment", "experiment")
    if experiment is None:
        raise UsageError("no experiment given")
    methods = pick("methods", "methods", _name_list) or (
        _name_list(conf["method"]) if "method" in conf else None
    )
    try:
        bench = BurgersBenchmark(
            A=pick("A", "a", to_float) or 0.9,
            nu=pick("nu", "nu", to_float) or 1e-3,
            t_final=pick("t_final", "t_final", to_float) or 1.0,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    strict = True
    if "strict_dt" in conf:
        strict = to_bool(conf["strict_dt"])
    if getattr(args, "no_strict_dt", False):
        strict = False
    timing = to_bool(conf.get("timing", "false")) or bool(getattr(args, "timing", False))
    threads = pick("threads", "threads", int)
    return ExperimentSpec(
        experiment=experiment,
        methods=methods or METHOD_NAMES,
        nx=pick("nx", "nx", _int_list),
        nt=pick("nt", "nt", _int_list),
        benchmark=bench,
        output_path=pick("out", "out") or conf.get("output_path"),
        threads=1 if threads is None else threads,
        strict_dt=strict,
        timing=timing,
    )


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags override its entries")
    p.add_argument("--nx", type=_int_list, help="comma-separated cell counts")
    p.add_argument("--nt", type=_int_list, help="comma-separated step counts")
    p.add_argument("--A", type=float, dest="A", help="benchmark amplitude (default 0.9)")
    p.add_argument("--nu", type=float, help="viscosity (default 1e-3)")
    p.add_argument("--t-final", type=float, dest="t_final", help="final time (default 1)")
    p.add_argument("--out", help="CSV destination (default: standard output)")
    p.add_argument("--threads", type=int, help="worker processes, 0 = one per CPU (default 1)")
    p.add_argument("--no-strict-dt", action="store_true",
                   help="warn instead of failing when dt exceeds the step bound")
    p.add_argument("--timing", action="store_true",
                   help="fill the wall_ms column (makes output run-dependent)")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fsl1d", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("solve", help="one run on the Burgers benchmark")
    p.add_argument("--method", dest="methods", type=_name_list,
                   help=f"interpolation, one of {', '.join(METHOD_NAMES)}")
    _add_common(p)

    p = sub.add_parser("convergence", help="convergence sweeps fig1 / fig2 / fig3")
    p.add_argument("--experiment", choices=("fig1", "fig2", "fig3"))
    p.add_argument("--methods", type=_name_list, help="comma-separated subset of methods")
    _add_common(p)

    p = sub.add_parser("verify", help="run the interpolation and scheme self-checks")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _emit(rows, spec: ExperimentSpec) -> int:
    text = write_csv(rows, spec.output_path)
    if spec.output_path:
        log.info("wrote %d rows to %s", len(rows), spec.output_path)
    else:
        sys.stdout.write(text)
    failed = [r for r in rows if r["error"]]
    for r in failed:
        print(f"{r['method']} nx={r['nx']} nt={r['nt']}: {r['error']}", file=sys.stderr)
    return EXIT_FAILURE if failed else EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on bad input and on --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    if args.command == "verify":
        report = run_verify(trials=args.trials, seed=args.seed)
        print(report.summary())
        return EXIT_OK if report.passed else EXIT_FAILURE
    try:
        if args.command == "solve":
            spec = build_spec(args, "single")
            if len(spec.methods) != 1:
                raise UsageError("solve takes a single --method")
        else:
            spec = build_spec(args)
        spec.cells()
    except (UsageError, ConfigurationError, OSError) as exc:
        print(f"fsl1d: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return _emit(run_experiment(spec), spec)


if __name__ == "__main__":
    sys.exit(main())
