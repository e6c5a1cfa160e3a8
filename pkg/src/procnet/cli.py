"""Command-line front end.

Every command reads a config file (except ``reproduce``), writes CSV data to
``--out`` (stdout by default), and reports a one-line JSON run summary on
stderr.  Exit codes: 0 success, 2 config or usage error, 3 solver failure,
4 simulation infeasible.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
import traceback
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .analytic import steady_state_error_variance, tau_upper_bound
from .errors import HorizonTooShort, InvalidConfig, NonPositiveTau, SolverError
from .figures import FIGURES, figure_tables, sensor_table_rows
from .model import DelayLaw, DelayModel, PreprocessingKind, config_digest, load_config, validate
from .optimize import joint_optimize, optimal_tau
from .simulate import SimPlan, monte_carlo_variance

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_SIM = 0, 2, 3, 4
PRECISION_ENV = "PROCNET_PRECISION"


@dataclass
class RunReport:
    command: str
    config_digest: str | None = None
    outputs: list[tuple[str, int]] = field(default_factory=list)
    wall_time: float = 0.0


def _precision() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return 17
    try:
        value = int(raw)
    except ValueError:
        raise InvalidConfig(f"{PRECISION_ENV} must be an integer, got {raw!r}") from None
    if not 1 <= value <= 17:
        raise InvalidConfig(f"{PRECISION_ENV} must lie in 1..17, got {value}")
    return value


def _fmt(value, digits: int) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{digits}g}"
    return str(value)


class CsvSink:
    """Row-at-a-time CSV writer; rows hit the file immediately so partial output survives failures."""

    def __init__(self, handle, header, digits):
        self._handle = handle
        self._writer = csv.writer(handle, lineterminator="\n")
        self._digits = digits
        self.rows = 0
        self._writer.writerow(header)

    def write(self, row):
        self._writer.writerow([_fmt(v, self._digits) for v in row])
        self._handle.flush()
        self.rows += 1


@contextmanager
def _open_sink(path, header, report: RunReport):
    digits = _precision()
    if path in (None, "-"):
        sink = CsvSink(sys.stdout, header, digits)
        try:
            yield sink
        finally:
            report.outputs.append(("-", sink.rows))
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        sink = CsvSink(fh, header, digits)
        try:
            yield sink
        finally:
            report.outputs.append((str(path), sink.rows))


def _floats(values) -> list[float]:
    out = []
    for item in values:
        for part in str(item).split(","):
            part = part.strip()
            if part:
                try:
                    out.append(float(part))
                except ValueError:
                    raise InvalidConfig(f"not a number: {part!r}") from None
    if not out:
        raise InvalidConfig("empty value list")
    return out


def _load(path, report: RunReport):
    config = validate(load_config(path))
    report.config_digest = config_digest(config)
    return config


def _sensor_arg(value, config) -> int:
    S = config.sensors if value is None else int(value)
    if not 1 <= S <= config.sensors:
        raise InvalidConfig(f"--sensors must lie in 1..{config.sensors}, got {S}")
    return S


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_eval(args, report):
    config = _load(args.config, report)
    S = _sensor_arg(args.sensors, config)
    taus = _floats(args.tau)
    with _open_sink(args.out, ["tau", "tau_tot", "f", "q", "total"], report) as sink:
        for tau in taus:
            v = steady_state_error_variance(config, tau, S)
            sink.write((tau, v.delays.tau_tot, v.estimation_part, v.noise_part, v.total))


def _sensor_list(choice: str, config) -> list[int]:
    if choice in ("all", "joint"):
        return list(range(1, config.sensors + 1))
    try:
        counts = [int(part) for part in choice.split(",")]
    except ValueError:
        raise InvalidConfig(f"--sensors: expected integers, 'all' or 'joint', got {choice!r}") from None
    return [_sensor_arg(S, config) for S in counts]


def cmd_optimize(args, report):
    config = _load(args.config, report)
    choice = args.sensors if args.sensors is not None else str(config.sensors)
    counts = _sensor_list(choice, config)
    header = ["S", "tau_opt", "P", "method", "bracket_lo", "bracket_hi"]
    with _open_sink(args.out, header, report) as sink:
        if choice == "joint":
            result = joint_optimize(config)
            for S, opt in result.table:
                sink.write((S, opt.tau_opt, opt.value, opt.method.value, *opt.bracket))
            opt = result.optimum
            sink.write((result.s_opt, opt.tau_opt, opt.value, f"joint:{opt.method.value}", *opt.bracket))
        else:
            for S in counts:
                opt = optimal_tau(config, S)
                sink.write((S, opt.tau_opt, opt.value, opt.method.value, *opt.bracket))


def _parse_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidConfig(f"--range must be lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidConfig(f"--range must be lo:hi:n, got {text!r}") from None
    if n < 2:
        raise InvalidConfig(f"--range needs n >= 2, got {n}")
    if not (lo > 0 and hi > lo):
        raise InvalidConfig(f"--range needs 0 < lo < hi, got {lo!r}:{hi!r}")
    return lo, hi, n


def _swept(config, param: str, value: float):
    system, pre = config.system, config.preprocessing
    if param == "s":
        return config.replace(system=type(system)(system.a, value * pre.b, system.mu0, system.p0))
    if param == "a2":
        a = math.copysign(math.sqrt(value), system.a if system.a != 0 else 1.0)
        return config.replace(system=type(system)(a, system.sigma2_w, system.mu0, system.p0))
    if param == "gamma":
        if pre.kind is PreprocessingKind.INVERSE_LINEAR:
            raise InvalidConfig("--param gamma needs kind = inverse_power or exponential")
        return config.replace(preprocessing=type(pre)(pre.kind, pre.b, value))
    if param == "c":
        return config.replace(delays=DelayModel(DelayLaw.compressing(value), config.delays.fusion))
    raise InvalidConfig(f"unknown sweep parameter {param!r}")


def cmd_sweep(args, report):
    config = _load(args.config, report)
    S = _sensor_arg(args.sensors if args.sensors is not None else 1, config)
    lo, hi, n = _parse_range(args.range)
    values = np.geomspace(lo, hi, n) if args.log else np.linspace(lo, hi, n)
    with _open_sink(args.out, ["param", "tau_opt", "tau_upper_bound", "P_opt"], report) as sink:
        for value in values:
            cfg = validate(_swept(config, args.param, float(value)))
            opt = optimal_tau(cfg, S)
            bound = tau_upper_bound(cfg.system.a, cfg.system.sigma2_w * S / cfg.preprocessing.b)
            sink.write((float(value), opt.tau_opt, bound, opt.value))


def cmd_network(args, report):
    config = _load(args.config, report)
    taus = _floats(args.tau)
    with _open_sink(args.out, ["tau", "S", "P", "is_s_opt"], report) as sink:
        for tau in taus:
            for S, P, flag in sensor_table_rows(config, tau):
                sink.write((tau, S, P, flag))


def cmd_simulate(args, report):
    config = _load(args.config, report)
    S = _sensor_arg(args.sensors, config)
    taus = _floats(args.tau)
    try:
        plan = SimPlan(args.step, args.horizon, args.burn_in, args.trials, args.seed)
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from None
    header = ["tau", "S", "empirical", "stderr", "analytic", "z_score"]
    with _open_sink(args.out, header, report) as sink:
        for tau in taus:
            r = monte_carlo_variance(config, tau, S, plan, workers=args.workers)
            sink.write((tau, S, r.empirical_variance, r.stderr, r.analytic_variance, r.z_score))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def cmd_reproduce(args, report):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    figures = sorted(FIGURES) if args.figure == "all" else [int(args.figure)]
    for figure in figures:
        tables, summary = figure_tables(figure)
        for name, (header, rows) in tables.items():
            with _open_sink(out_dir / name, header, report) as sink:
                for row in rows:
                    sink.write(row)
        manifest = {
            "figure": figure,
            "title": FIGURES[figure]["title"],
            "note": FIGURES[figure]["note"],
            "parameters": FIGURES[figure]["params"],
            "files": sorted(tables),
            "summary": summary,
        }
        path = out_dir / f"figure{figure}_manifest.json"
        path.write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
        report.outputs.append((str(path), 1))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="procnet",
        description="Steady-state estimation error of sensor processing networks with latency.",
    )
    parser.add_argument("--report", help="also write the JSON run report to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate P(tau) and its f/q split")
    p.add_argument("config")
    p.add_argument("--tau", nargs="+", required=True, help="one or more delays (comma lists allowed)")
    p.add_argument("--sensors", type=int, help="fused sensor count (default: all)")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("optimize", help="optimal preprocessing delay per sensor count")
    p.add_argument("config")
    p.add_argument("--sensors", help="count, comma list, 'all', or 'joint' (default: N)")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="optimal delay and its bound versus one parameter")
    p.add_argument("config")
    p.add_argument("--param", choices=["s", "a2", "gamma", "c"], required=True)
    p.add_argument("--range", required=True, metavar="LO:HI:N")
    p.add_argument("--log", action="store_true", help="geometric spacing")
    p.add_argument("--sensors", type=int, help="fused sensor count (default: 1)")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("network", help="P(S) tables at fixed delays")
    p.add_argument("config")
    p.add_argument("--tau", nargs="+", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of the steady-state variance")
    p.add_argument("config")
    p.add_argument("--tau", nargs="+", required=True)
    p.add_argument("--sensors", type=int)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--burn-in", type=float, default=0.2, help="fraction of the horizon discarded")
    p.add_argument("--trials", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", help="emit the data behind a reference figure")
    p.add_argument("--figure", choices=[*map(str, sorted(FIGURES)), "all"], required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    report = RunReport(args.command)
    start = time.perf_counter()
    code = EXIT_OK
    try:
        args.func(args, report)
    except HorizonTooShort as exc:
        print(f"procnet {args.command}: simulation infeasible: {exc}", file=sys.stderr)
        code = EXIT_SIM
    except SolverError as exc:
        print(f"procnet {args.command}: solver failure: {exc}", file=sys.stderr)
        code = EXIT_SOLVER
    except (InvalidConfig, NonPositiveTau, ValueError) as exc:
        print(f"procnet {args.command}: error: {exc}", file=sys.stderr)
        for v in getattr(exc, "violations", None) or []:
            print(f"  - {v}", file=sys.stderr)
        code = EXIT_USAGE
    except Exception:  # noqa: BLE001 - the exit-code contract has no slot for crashes
        traceback.print_exc()
        code = EXIT_SOLVER
    report.wall_time = time.perf_counter() - start
    line = json.dumps({**asdict(report), "exit_code": code})
    print(line, file=sys.stderr)
    if args.report:
        Path(args.report).write_text(line + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
