"""Command-line front end.

Subcommands: ``compute`` (single point or sweep), ``tables`` (reference
sweep reproduction with a diff), ``hierarchy`` (ordered per-class report),
``random-study`` (seeded random-channel hierarchy statistics), ``figures``
(direct-QFI curves of canonical circuits), and ``validate`` (quick
invariant suite).  Exit codes: 0 success, 2 config error, 3 solver
failure, 4 reference mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    ChannelFamily,
    depolarizing_family,
    parse_channel_spec,
    random_family,
    rotation_damping_family,
    thermalizing_family,
)
from .classes import (
    ORDERED_CLASSES,
    StrategyClass,
    n_choi_circuit,
    n_parallel_circuit,
    quantum_switch,
    sequential_circuit,
)
from .metrology import (
    EQUALITY_TOL,
    HierarchyReport,
    crosscheck,
    hierarchy_report,
    optimize_qfi,
    output_state_family,
    qfi_direct,
    reconstruct_optimal,
)
from .sdp.ir import SolverError


class ConfigError(ValueError):
    pass


EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_MISMATCH = 4

# Reference values for the composed rotation & damping channel sweep
# (u, then one column per class group).
REFERENCE_TABLE_N2 = {
    "channel": {"family": "rotation_damping", "theta": 1.0},
    "groups": [
        ("QC-Par", [StrategyClass.PARALLEL]),
        ("QC-FO/QC-CC", [StrategyClass.FIXED_ORDER]),
        ("QC-CC-purif/QC-Sup/QC-QC/Gen",
         [StrategyClass.SUPERPOSITION, StrategyClass.CLASSICAL_CONTROL,
          StrategyClass.QUANTUM_CONTROL, StrategyClass.GENERAL]),
    ],
    "rows": {
        0.0: (4.0, 4.0, 4.0),
        0.1: (3.5900, 3.6477, 3.6929),
        0.2: (3.1605, 3.2904, 3.3709),
        0.3: (2.7128, 2.9273, 3.0324),
        0.4: (2.2500, 2.5574, 2.6760),
        0.5: (1.7946, 2.1793, 2.2995),
        0.6: (1.4314, 1.7911, 1.9005),
        0.7: (1.1177, 1.3900, 1.4764),
        0.8: (0.8117, 0.9714, 1.0240),
        0.9: (0.4734, 0.5260, 0.5410),
        1.0: (0.0, 0.0, 0.0),
    },
}

REFERENCE_TABLE_N3 = {
    "channel": {"family": "rotation_damping", "theta": 1.0},
    "groups": [
        ("QC-Par", [StrategyClass.PARALLEL]),
        ("QC-FO", [StrategyClass.FIXED_ORDER]),
        ("QC-CC-purif/QC-Sup",
         [StrategyClass.CLASSICAL_CONTROL, StrategyClass.SUPERPOSITION]),
        ("QC-QC", [StrategyClass.QUANTUM_CONTROL]),
        ("Gen", [StrategyClass.GENERAL]),
    ],
    "rows": {
        0.0: (9.0, 9.0, 9.0, 9.0, 9.0),
        0.1: (7.6366, 7.9238, 8.1848, 8.1986, 8.2001),
        0.2: (6.2628, 6.8951, 7.3643, 7.3741, 7.3751),
        0.3: (4.9111, 5.9140, 6.5231, 6.5242, 6.5242),
        0.4: (3.8614, 4.9797, 5.6417, 5.6461, 5.6468),
        0.5: (3.1082, 4.0905, 4.7247, 4.7373, 4.7431),
        0.6: (2.4344, 3.2427, 3.7859, 3.8048, 3.8150),
        0.7: (1.8217, 2.4300, 2.8317, 2.8564, 2.8698),
        0.8: (1.2786, 1.6412, 1.8710, 1.8957, 1.9086),
        0.9: (0.7255, 0.8553, 0.9177, 0.9260, 0.9299),
        1.0: (0.0, 0.0, 0.0, 0.0, 0.0),
    },
}


@dataclass
class RunConfig:
    channel: dict
    n_copies: int = 2
    classes: list[StrategyClass] = field(
        default_factory=lambda: list(ORDERED_CLASSES))
    sweep_param: str | None = None
    sweep_grid: list[float] = field(default_factory=list)
    out: str | None = None
    fmt: str = "csv"
    seed: int = 0
    tol: float = 1e-8
    jobs: int = 1
    reconstruct: bool = False


@dataclass
class ResultRecord:
    sweep_value: float | None
    strategy_class: str
    qfi: float | None
    primal: float | None
    dual: float | None
    gap: float | None
    runtime: float | None
    status: str


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.6g}"


def _load_config(args) -> RunConfig:
    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config parse error at line {exc.lineno}: {exc.msg}") from exc
    cfg = RunConfig(channel=raw.get("channel", {"family": "depolarizing",
                                                "theta": 0.5}))
    cfg.n_copies = int(raw.get("N", cfg.n_copies))
    if "classes" in raw:
        cfg.classes = [StrategyClass.coerce(c) for c in raw["classes"]]
    sweep = raw.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict) or "param" not in sweep \
                or "grid" not in sweep:
            raise ConfigError('sweep must be {"param": ..., "grid": [...]}')
        grid = [float(v) for v in sweep["grid"]]
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise ConfigError("sweep grid must be monotone")
        cfg.sweep_param = str(sweep["param"])
        cfg.sweep_grid = grid
    for key in ("out", "seed", "tol"):
        if key in raw:
            setattr(cfg, key, raw[key])
    if "format" in raw:
        cfg.fmt = raw["format"]

    # command-line flags override the file
    if getattr(args, "N", None) is not None:
        cfg.n_copies = args.N
    if getattr(args, "classes", None):
        try:
            cfg.classes = [StrategyClass.coerce(c.strip())
                           for c in args.classes.split(",")]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "format", None):
        cfg.fmt = args.format
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "tol", None) is not None:
        cfg.tol = args.tol
    if getattr(args, "jobs", None) is not None:
        cfg.jobs = args.jobs
    if getattr(args, "reconstruct", False):
        cfg.reconstruct = True
    if cfg.fmt not in ("csv", "json"):
        raise ConfigError(f"unknown output format {cfg.fmt!r}")
    try:
        parse_channel_spec(cfg.channel)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad channel spec: {exc}") from exc
    return cfg


def _default_jobs() -> int:
    return os.cpu_count() or 1


def _solve_point(task: tuple) -> dict:
    """Worker for sweep jobs; importable so a process pool can pickle it."""
    channel, n_copies, cls_value, tol, do_reconstruct = task
    family = parse_channel_spec(channel)
    cls = StrategyClass.coerce(cls_value)
    try:
        res = optimize_qfi(family, n_copies, cls, tol=tol)
    except SolverError as exc:
        return {"class": cls.value, "status": f"failed: {exc}"}
    record = {
        "class": cls.value,
        "qfi": res.qfi,
        "primal": res.primal_value,
        "dual": res.dual_value,
        "gap": res.gap,
        "runtime": res.runtime,
        "status": res.status,
    }
    if do_reconstruct:
        _, pure = reconstruct_optimal(family, n_copies, cls, res.h_opt,
                                      tol=tol)
        report = crosscheck(res, pure, family)
        record["qfi_direct"] = report.j_direct
        record["crosscheck"] = "pass" if report.passed else "fail"
    return record


def _run_tasks(tasks: list[tuple], jobs: int) -> list[dict]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_solve_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_solve_point, tasks))


def _emit(rows: list[dict], headers: list[str], cfg_out: str | None,
          fmt: str, stream):
    if fmt == "json":
        text = json.dumps(rows, indent=2, default=float) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(headers)
        for row in rows:
            writer.writerow([
                _fmt(row.get(h)) if isinstance(row.get(h), float)
                else row.get(h, "") for h in headers])
        text = buf.getvalue()
    if cfg_out:
        with open(cfg_out, "w") as fh:
            fh.write(text)
    stream.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_compute(args) -> int:
    cfg = _load_config(args)
    sweep_values = cfg.sweep_grid if cfg.sweep_param else [None]
    rows = []
    failed = False
    for value in sweep_values:
        channel = dict(cfg.channel)
        if value is not None:
            channel[cfg.sweep_param] = value
        tasks = [(channel, cfg.n_copies, cls.value, cfg.tol, cfg.reconstruct)
                 for cls in cfg.classes]
        for record in _run_tasks(tasks, cfg.jobs):
            record = dict(record)
            if value is not None:
                record = {cfg.sweep_param: value, **record}
            rows.append(record)
            if record["status"].startswith("failed"):
                failed = True
    headers = ([cfg.sweep_param] if cfg.sweep_param else []) + [
        "class", "qfi", "primal", "dual", "gap", "runtime", "status"]
    if cfg.reconstruct:
        headers += ["qfi_direct", "crosscheck"]
    _emit(rows, headers, cfg.out, cfg.fmt, sys.stdout)
    return EXIT_SOLVER if failed else 0


def cmd_tables(args) -> int:
    table = REFERENCE_TABLE_N2 if args.which == "ad-n2" else REFERENCE_TABLE_N3
    n_copies = 2 if args.which == "ad-n2" else 3
    tol = args.tol if args.tol is not None else 1e-8
    jobs = args.jobs if args.jobs is not None else 1
    rows = []
    worst = 0.0
    for u, ref_values in table["rows"].items():
        channel = dict(table["channel"])
        channel["u"] = u
        classes = [cls for _, members in table["groups"] for cls in members]
        tasks = [(channel, n_copies, cls.value, tol, False)
                 for cls in classes]
        by_class = {r["class"]: r for r in _run_tasks(tasks, jobs)}
        row = {"u": u}
        for (header, members), ref in zip(table["groups"], ref_values):
            errs = []
            for cls in members:
                rec = by_class[cls.value]
                if "qfi" not in rec:
                    return EXIT_SOLVER
                errs.append(abs(rec["qfi"] - ref))
            value = by_class[members[0].value]["qfi"]
            err = max(errs)
            worst = max(worst, err)
            row[header] = value
            row[f"abs_err({header})"] = err
        rows.append(row)
        print(f"u={u:.1f} done (max abs err so far {worst:.2e})",
              file=sys.stderr)
    headers = ["u"]
    for header, _ in table["groups"]:
        headers += [header, f"abs_err({header})"]
    _emit(rows, headers, args.out, args.format or "csv", sys.stdout)
    return EXIT_MISMATCH if worst > 1e-3 else 0


def cmd_hierarchy(args) -> int:
    cfg = _load_config(args)
    if cfg.n_copies not in (2, 3):
        raise ConfigError("hierarchy reports support N in {2, 3}")
    family = parse_channel_spec(cfg.channel)
    report = hierarchy_report(family, cfg.n_copies, cfg.classes, tol=cfg.tol)
    print(f"channel: {cfg.channel}  N={cfg.n_copies}")
    if report.all_equal():
        print("all classes equal to within "
              f"{report.tolerance:g}: J = {report.results[0].qfi:.6g}")
    print(report.pattern())
    for res in report.results:
        print(f"  {res.strategy_class.value:<7} J={res.qfi:.6g} "
              f"gap={res.gap:.1e} [{res.status}]")
    if cfg.out:
        rows = [{"class": r.strategy_class.value, "qfi": r.qfi,
                 "gap": r.gap, "runtime": r.runtime, "status": r.status}
                for r in report.results]
        with open(cfg.out, "w") as fh:
            if cfg.fmt == "json":
                json.dump(rows, fh, indent=2, default=float)
            else:
                writer = csv.DictWriter(
                    fh, fieldnames=["class", "qfi", "gap", "runtime",
                                    "status"])
                writer.writeheader()
                for row in rows:
                    writer.writerow({k: _fmt(v) if isinstance(v, float)
                                    else v for k, v in row.items()})
    return 0


def cmd_random_study(args) -> int:
    n_copies = args.N if args.N is not None else 2
    if n_copies not in (2, 3):
        raise ConfigError("random study supports N in {2, 3}")
    count = args.count if args.count is not None else (
        50 if n_copies == 2 else 20)
    base_seed = args.seed if args.seed is not None else 0
    tol = args.tol if args.tol is not None else 1e-8
    bins: dict[str, int] = {}
    rows = []
    failures = 0
    for k in range(count):
        seed = base_seed + k
        family = random_family(theta=0.5, seed=seed)
        try:
            report = hierarchy_report(family, n_copies, tol=tol)
        except SolverError as exc:
            failures += 1
            print(f"seed {seed}: solver failure ({exc})", file=sys.stderr)
            continue
        pattern = report.pattern()
        bins[pattern] = bins.get(pattern, 0) + 1
        row = {"seed": seed, "pattern": pattern}
        for res in report.results:
            row[res.strategy_class.value] = res.qfi
        rows.append(row)
        print(f"seed {seed}: {pattern}", file=sys.stderr)
    print(f"random study: N={n_copies}, {count} channels, "
          f"{failures} failures")
    for pattern, num in sorted(bins.items(), key=lambda kv: -kv[1]):
        print(f"  {num:4d}  {pattern}")
    if args.out:
        headers = ["seed"] + [c.value for c in ORDERED_CLASSES] + ["pattern"]
        _emit(rows, headers, args.out, args.format or "csv",
              io.StringIO())
    return 0


_FIGURE_BUILDERS = {
    "depol-n2": {
        "family": lambda theta: depolarizing_family(theta=theta),
        "curves": [
            ("QS", lambda: quantum_switch()),
            ("Seq", lambda: sequential_circuit(2)),
            ("2-Choi", lambda: n_choi_circuit(2)),
        ],
    },
    "thermal-n2": {
        "family": lambda theta: thermalizing_family(theta=theta, epsilon=1.0),
        "curves": [
            ("QS", lambda: quantum_switch()),
            ("Seq", lambda: sequential_circuit(2)),
            ("parallel", lambda: n_parallel_circuit(2)),
        ],
    },
}

THETA_GRID = [round(0.1 * k, 1) for k in range(1, 10)]


def cmd_figures(args) -> int:
    spec = _FIGURE_BUILDERS[args.which]
    rows = []
    for theta in THETA_GRID:
        family = spec["family"](theta)
        row = {"theta": theta}
        for name, build in spec["curves"]:
            rho, drho = output_state_family(build(), family, 2)
            row[name] = qfi_direct(rho, drho)
        rows.append(row)
    headers = ["theta"] + [name for name, _ in spec["curves"]]
    _emit(rows, headers, args.out, args.format or "csv", sys.stdout)
    return 0


def cmd_validate(args) -> int:
    from .validate import run_validation

    checks = run_validation()
    width = max(len(name) for name, _, _ in checks)
    ok = True
    for name, passed, detail in checks:
        flag = "pass" if passed else "FAIL"
        ok = ok and passed
        print(f"{name:<{width}}  {flag}  {detail}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qfi",
        description="Optimal quantum Fisher information over strategy "
                    "classes for N uses of a parameterized channel.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output file path")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--classes", help="comma-separated class names")
        p.add_argument("--N", type=int, help="number of channel uses")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int, default=None,
                       help=f"worker processes (default {_default_jobs()})")
        p.add_argument("--reconstruct", action="store_true",
                       help="also reconstruct and cross-check each optimum")
        p.add_argument("--tol", type=float, help="solver tolerance")

    p = sub.add_parser("compute", help="single computation or sweep")
    common(p)
    p.set_defaults(fn=cmd_compute)

    p = sub.add_parser("tables", help="reproduce a reference sweep")
    p.add_argument("which", choices=["ad-n2", "ad-n3"])
    common(p, config=False)
    p.set_defaults(fn=cmd_tables)

    p = sub.add_parser("hierarchy", help="ordered per-class report")
    common(p)
    p.set_defaults(fn=cmd_hierarchy)

    p = sub.add_parser("random-study", help="random channel statistics")
    p.add_argument("--count", type=int, help="number of channels")
    common(p, config=False)
    p.set_defaults(fn=cmd_random_study)

    p = sub.add_parser("figures", help="direct-QFI curves")
    p.add_argument("which", choices=list(_FIGURE_BUILDERS))
    common(p, config=False)
    p.set_defaults(fn=cmd_figures)

    p = sub.add_parser("validate", help="run the invariant suite")
    common(p, config=False)
    p.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
