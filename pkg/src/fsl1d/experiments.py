"""Convergence experiments on the Burgers benchmark and their CSV output."""

from __future__ import annotations

import csv
import io
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .analysis import error_report
from .characteristics import StepSizeWarning, run
from .core import METHOD_NAMES, ConfigurationError, Method, SchemeConfig, uniform_grid
from .interpolation import build_from_state
from .problems import BurgersBenchmark, burgers_flux

CSV_HEADER = (
    "method", "s", "nx", "nt", "h", "dt", "rel_l2_error",
    "observed_order", "newton_iters_avg", "wall_ms", "error",
)

EXPERIMENTS = ("fig1", "fig2", "fig3", "single")

_DEFAULT_SWEEP = (20, 40, 80, 160, 320)


class UsageError(ConfigurationError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep of solver runs.

    ``nx``/``nt`` override the experiment's default resolutions.  For
    ``fig3`` the step count follows from ``dt = (10 h)^s``, with ``s = 1``
    for linear interpolation.
    """

    experiment: str
    methods: tuple = METHOD_NAMES
    nx: Optional[tuple] = None
    nt: Optional[tuple] = None
    benchmark: BurgersBenchmark = field(default_factory=BurgersBenchmark)
    output_path: Optional[str] = None
    threads: int = 1
    strict_dt: bool = True
    timing: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise UsageError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not self.methods:
            raise UsageError("at least one method is required")
        for name in self.methods:
            try:
                Method.parse(name)
            except ConfigurationError as exc:
                raise UsageError(str(exc)) from None
        if self.threads < 0:
            raise UsageError("threads must be >= 0")
        for name in ("nx", "nt"):
            values = getattr(self, name)
            if values is not None:
                values = tuple(int(v) for v in values)
                if not values or any(v < 1 for v in values):
                    raise UsageError(f"{name} values must be positive integers")
                object.__setattr__(self, name, values)
        object.__setattr__(self, "methods", tuple(m.strip().lower() for m in self.methods))

    def cells(self) -> list[tuple[str, int, int]]:
        """``(method, nx, nt)`` for every run, method-major."""
        exp = self.experiment
        nx, nt = self.nx, self.nt
        if exp == "fig1":
            nx = nx or _DEFAULT_SWEEP
            nt = nt or (1000,)
            if len(nt) != 1:
                raise UsageError("fig1 fixes a single nt")
            pairs = {m: [(n, nt[0]) for n in nx] for m in self.methods}
        elif exp == "fig2":
            nx = nx or (1000,)
            nt = nt or _DEFAULT_SWEEP
            if len(nx) != 1:
                raise UsageError("fig2 fixes a single nx")
            pairs = {m: [(nx[0], n) for n in nt] for m in self.methods}
        elif exp == "fig3":
            if nt is not None:
                raise UsageError("fig3 derives nt from dt = (10 h)^s; do not pass nt")
            nx = nx or _DEFAULT_SWEEP
            pairs = {m: [(n, _coupled_steps(n, Method.parse(m).s, self.benchmark.t_final)) for n in nx]
                     for m in self.methods}
        else:
            if not nx or not nt or len(nx) != 1 or len(nt) != 1:
                raise UsageError("single needs exactly one nx and one nt")
            pairs = {m: [(nx[0], nt[0])] for m in self.methods}
        for m, rows in pairs.items():
            for n, _ in rows:
                if n < 4:
                    raise UsageError("nx must be >= 4")
            if exp in ("fig1", "fig3") and any(a >= b for (a, _), (b, _) in zip(rows, rows[1:])):
                raise UsageError("nx sweep must be strictly increasing")
            if exp == "fig2" and any(a >= b for (_, a), (_, b) in zip(rows, rows[1:])):
                raise UsageError("nt sweep must be strictly increasing")
        return [(m, n, k) for m in self.methods for n, k in pairs[m]]


def _coupled_steps(nx: int, s: int, t_final: float) -> int:
    steps = t_final * (nx / 10.0) ** s
    n = round(steps)
    if n < 1 or abs(steps - n) > 1e-9 * steps:
        raise UsageError(f"dt = (10/{nx})^{s} does not divide t_final = {t_final}")
    return n


def run_cell(method: str, nx: int, nt: int, benchmark: BurgersBenchmark, strict_dt: bool = True) -> dict:
    """One solver run; failures are returned in the ``error`` field."""
    m = Method.parse(method)
    dt = benchmark.t_final / nt
    row = {
        "method": m.name, "s": m.s, "nx": nx, "nt": nt, "h": 1.0 / nx, "dt": dt,
        "rel_l2_error": None, "observed_order": None, "newton_iters_avg": None,
        "wall_ms": None, "error": "",
    }
    start = time.perf_counter()
    try:
        config = SchemeConfig(
            nu=benchmark.nu, dt=dt, t_final=benchmark.t_final,
            interpolation=m, strict_dt_check=strict_dt,
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StepSizeWarning)
            state, report = run(
                benchmark.initial, uniform_grid(nx), burgers_flux(), config,
                benchmark.initial_derivatives(m.n_derivs),
            )
        err = error_report(
            build_from_state(state), benchmark.at(benchmark.t_final), m.s, dt,
            report.newton_iters_avg,
        )
        row["rel_l2_error"] = err.rel_l2
        row["newton_iters_avg"] = report.newton_iters_avg
    except Exception as exc:  # recorded in the CSV, the sweep goes on
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_ms"] = 1e3 * (time.perf_counter() - start)
    return row


def _running_orders(rows: list[dict], experiment: str) -> None:
    if experiment == "single":
        return
    key = "dt" if experiment == "fig2" else "h"
    for prev, cur in zip(rows, rows[1:]):
        if prev["method"] != cur["method"]:
            continue
        a, b = prev["rel_l2_error"], cur["rel_l2_error"]
        if a and b and a > 0 and b > 0:
            cur["observed_order"] = math.log(a / b) / math.log(prev[key] / cur[key])


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    """Run every cell of ``spec`` and return rows in method-major order."""
    cells = spec.cells()
    args = [(m, nx, nt, spec.benchmark, spec.strict_dt) for m, nx, nt in cells]
    workers = spec.threads or os.cpu_count() or 1
    workers = min(workers, len(args))
    if workers <= 1:
        rows = [_run_cell_args(a) for a in args]
    else:
        # longest runs first keeps the pool busy; map order restores the row order
        order = sorted(range(len(args)), key=lambda i: -args[i][1] * args[i][2])
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = dict(zip(order, pool.map(_run_cell_args, [args[i] for i in order])))
        rows = [done[i] for i in range(len(args))]
    _running_orders(rows, spec.experiment)
    if not spec.timing:
        for row in rows:
            row["wall_ms"] = None
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.11e}"
    return str(value)


def format_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(row[k]) for k in CSV_HEADER])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    """Parse CSV produced by :func:`format_csv` back into typed rows."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {}
        for k in CSV_HEADER:
            v = rec[k]
            if k in ("method", "error"):
                row[k] = v
            elif k in ("s", "nx", "nt"):
                row[k] = int(v)
            else:
                row[k] = float(v) if v else None
        rows.append(row)
    return rows


def write_csv(rows: Sequence[dict], path: Optional[str]) -> str:
    text = format_csv(rows)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text

