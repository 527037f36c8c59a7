"""Command-line front end.

Subcommands
-----------
scf              converge a single thermal Kohn-Sham point
respond          dressed response poles and weights at one point
cumulants        dissipated-work cumulants at one point (tau or tau grid)
phase-diagram    sudden-quench dissipation over a (U, v0) grid
cumulant-map     cumulants over a (v0, tau) grid at fixed U
benchmark-dimer  LR response pipeline vs exact diagonalization on the dimer

Every subcommand accepts ``--config PATH`` (JSON) and/or ``--preset NAME``;
explicit config values override the preset. Output goes to ``--out PATH``
(default stdout) as CSV (default) or JSON. Sweeps run over a worker pool
(``--jobs``) and can resume an interrupted CSV via ``--resume``.

Exit codes: 0 success, 2 config error, 3 convergence/stability error,
4 capacity error.
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import pipeline
from .config import (
    PRESETS,
    RunConfig,
    config_from_dict,
    load_config,
    load_preset,
)
from .errors import InputError, QWorkStatsError
from .lattice import DriveProtocol
from .workstats import crossover_time


# ---------------------------------------------------------------------------
# Formatting and output plumbing


def _fmt(value):
    """Stable scalar formatting so identical configs give identical bytes."""
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _write_rows(rows, fieldnames, out_path, fmt, append=False):
    if fmt == "json":
        text = json.dumps(rows, indent=2, sort_keys=True, default=float) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fieldnames)
        if not append:
            writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in fieldnames})
        text = buf.getvalue()
    if out_path is None:
        sys.stdout.write(text)
    else:
        mode = "a" if append else "w"
        with open(out_path, mode, encoding="utf-8", newline="") as fh:
            fh.write(text)


def _completed_rows(out_path):
    """Number of data rows already present in a CSV journal."""
    if out_path is None or not os.path.exists(out_path):
        return 0
    with open(out_path, "r", encoding="utf-8", newline="") as fh:
        count = sum(1 for _ in csv.reader(fh))
    return max(0, count - 1)


def _run_cells(worker, tasks, jobs):
    """Evaluate independent cells, preserving task order in the output."""
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks, chunksize=1))


def _failure_row(base, exc):
    row = dict(base)
    row["status"] = type(exc).__name__
    return row


# ---------------------------------------------------------------------------
# Config assembly


def _merge_dicts(base, override):
    merged = dict(base)
    for key, value in override.items():
        if key in merged and isinstance(merged[key], dict) and isinstance(value, dict):
            merged[key] = _merge_dicts(merged[key], value)
        else:
            merged[key] = value
    return merged


def _resolve_config(args):
    if args.preset is None and args.config is None:
        return RunConfig()
    if args.preset is not None and args.config is not None:
        base = PRESETS.get(args.preset)
        if base is None:
            raise InputError(
                f"unknown preset {args.preset!r}; available: {sorted(PRESETS)}"
            )
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                override = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"config file is not valid JSON: {exc}") from exc
        return config_from_dict(_merge_dicts(base, override))
    if args.preset is not None:
        return load_preset(args.preset)
    return load_config(args.config)


def _solved_point(cfg, v0=None, U=None):
    spec = cfg.lattice_spec(U=U)
    ensemble = cfg.ensemble_spec()
    v0 = cfg.drive.v0 if v0 is None else v0
    return pipeline.solve_point(spec, ensemble, v0, scf_options=cfg.scf_options())


# ---------------------------------------------------------------------------
# Subcommands


def cmd_scf(cfg, args):
    point = _solved_point(cfg)
    state = point.state
    row = {
        "L": cfg.lattice.L,
        "J": cfg.lattice.J,
        "U": cfg.lattice.U,
        "ensemble": cfg.ensemble.kind,
        "beta": cfg.ensemble.beta,
        "v0": point.v0,
        "mu": state.mu,
        "iterations": state.iterations,
        "residual": state.residual,
    }
    for i, n in enumerate(state.densities):
        row[f"n_{i + 1}"] = float(n)
    _write_rows([row], list(row), args.out, args.format)
    return 0


def cmd_respond(cfg, args):
    point = _solved_point(cfg)
    spectrum = point.spectrum
    rows = []
    for k, (omega, weight) in enumerate(zip(spectrum.omegas, spectrum.weights)):
        rows.append({"k": k, "omega": float(omega), "weight": float(weight)})
    rows.append({"k": "adiabatic", "omega": 0.0, "weight": spectrum.psi_ad})
    _write_rows(rows, ["k", "omega", "weight"], args.out, args.format)
    print(
        "psi_ad=%s total_weight=%s sudden_beta_w=%s"
        % (
            _fmt(spectrum.psi_ad),
            _fmt(spectrum.total_weight()),
            _fmt(pipeline.sudden_work(point)),
        ),
        file=sys.stderr,
    )
    return 0


def _cumulant_row(point, tau, dv, orders):
    report = pipeline.cumulants_at(point, tau, dv, orders=orders)
    row = {"tau": tau}
    for n in orders:
        value = report.values[n]
        row[f"k{n}"] = value.total
        row[f"k{n}_adiabatic"] = value.adiabatic
        row[f"k{n}_nonadiabatic"] = value.nonadiabatic
    row["beta_fano"] = report.fano()
    return row


def cmd_cumulants(cfg, args):
    point = _solved_point(cfg)
    taus = cfg.sweep.tau_grid or (cfg.drive.tau,)
    orders = cfg.orders
    rows = [_cumulant_row(point, tau, cfg.drive.dv, orders) for tau in taus]
    fieldnames = list(rows[0])
    _write_rows(rows, fieldnames, args.out, args.format)
    return 0


def _phase_cell(task):
    cfg, u, v0 = task
    base = {"U": u, "v0": v0, "beta_w_diss": None, "status": "ok"}
    try:
        point = _solved_point(cfg, v0=v0, U=u)
        base["beta_w_diss"] = pipeline.sudden_work(point)
    except QWorkStatsError as exc:
        return _failure_row(base, exc)
    return base


def cmd_phase_diagram(cfg, args):
    if not cfg.sweep.u_grid or not cfg.sweep.v0_grid:
        raise InputError("phase-diagram needs nonempty sweep.u_grid and sweep.v0_grid")
    tasks = [(cfg, u, v0) for u in cfg.sweep.u_grid for v0 in cfg.sweep.v0_grid]
    fieldnames = ["U", "v0", "beta_w_diss", "status"]
    return _run_sweep(_phase_cell, tasks, fieldnames, args)


def _cumulant_map_cell(task):
    cfg, v0, tau, tau_star = task
    base = {"v0": v0, "tau": tau, "status": "ok"}
    try:
        point = _solved_point(cfg, v0=v0)
        base.update(_cumulant_row(point, tau, cfg.drive.dv, cfg.orders))
        base["tau_star"] = tau_star
    except QWorkStatsError as exc:
        return _failure_row(base, exc)
    return base


def _crossover_for_v0(task):
    cfg, v0 = task
    try:
        point = _solved_point(cfg, v0=v0)
        tau_star, _ = pipeline.k3_crossover(point, cfg.sweep.tau_grid, cfg.drive.dv)
        return tau_star
    except QWorkStatsError:
        return None


def cmd_cumulant_map(cfg, args):
    if not cfg.sweep.v0_grid or not cfg.sweep.tau_grid:
        raise InputError("cumulant-map needs nonempty sweep.v0_grid and sweep.tau_grid")
    taus = cfg.sweep.tau_grid
    if len(taus) >= 8:
        stars = _run_cells(
            _crossover_for_v0, [(cfg, v0) for v0 in cfg.sweep.v0_grid], args.jobs
        )
    else:
        stars = [None] * len(cfg.sweep.v0_grid)
    tasks = [
        (cfg, v0, tau, star)
        for v0, star in zip(cfg.sweep.v0_grid, stars)
        for tau in taus
    ]
    fieldnames = ["v0", "tau"]
    for n in cfg.orders:
        fieldnames += [f"k{n}", f"k{n}_adiabatic", f"k{n}_nonadiabatic"]
    fieldnames += ["beta_fano", "tau_star", "status"]
    return _run_sweep(_cumulant_map_cell, tasks, fieldnames, args)


def _benchmark_cell(task):
    kind, beta, u, v0, taus, dv = task
    rows, _ = pipeline.benchmark_dimer(
        (u,), (v0,), taus, ensemble_kind=kind, beta=beta, dv=dv
    )
    for row in rows:
        row["ensemble"] = kind
    return rows


def cmd_benchmark_dimer(cfg, args):
    u_grid = cfg.sweep.u_grid or (0.5, 1.0, 2.0, 4.0)
    if args.u_zero_only:
        u_grid = (0.0,)
    v0_grid = cfg.sweep.v0_grid or (0.5, 1.0, 2.0)
    tau_grid = cfg.sweep.tau_grid or (0.1, 1.0, 5.0, 20.0)
    kinds = ("canonical", "grand-canonical")
    tasks = [
        (kind, cfg.ensemble.beta, u, v0, tuple(tau_grid), cfg.drive.dv)
        for kind in kinds
        for u in u_grid
        for v0 in v0_grid
    ]
    chunks = _run_cells(_benchmark_cell, tasks, args.jobs)
    rows = [row for chunk in chunks for row in chunk]
    fieldnames = [
        "ensemble", "U", "v0", "tau",
        "k1_dft", "k1_ed", "k2_dft", "k2_ed", "k3_dft", "k3_ed",
        "rel_err1", "rel_err2", "rel_err3",
    ]
    _write_rows(rows, fieldnames, args.out, args.format)
    for kind in kinds:
        sub = [r for r in rows if r["ensemble"] == kind]
        means = {
            n: float(np.mean([r[f"rel_err{n}"] for r in sub])) for n in (1, 2, 3)
        }
        print(
            "%s grid-mean relative errors: k1=%.4e k2=%.4e k3=%.4e"
            % (kind, means[1], means[2], means[3]),
            file=sys.stderr,
        )
    return 0


def _run_sweep(worker, tasks, fieldnames, args):
    skip = 0
    append = False
    if args.resume:
        if args.format != "csv" or args.out is None:
            raise InputError("--resume requires --format csv and --out PATH")
        skip = _completed_rows(args.out)
        append = skip > 0
    pending = tasks[skip:]
    if not pending:
        return 0
    rows = _run_cells(worker, pending, args.jobs)
    _write_rows(rows, fieldnames, args.out, args.format, append=append)
    return 0


# ---------------------------------------------------------------------------
# Entry point


_COMMANDS = {
    "scf": cmd_scf,
    "respond": cmd_respond,
    "cumulants": cmd_cumulants,
    "phase-diagram": cmd_phase_diagram,
    "cumulant-map": cmd_cumulant_map,
    "benchmark-dimer": cmd_benchmark_dimer,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qworkstats",
        description="Dissipated-work statistics of driven Hubbard chains "
        "via linear-response thermal DFT.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", help="named preset (see config.PRESETS)")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument(
            "--jobs", type=int, default=os.cpu_count() or 1,
            help="worker processes for sweeps",
        )
        p.add_argument(
            "--resume", action="store_true",
            help="continue an interrupted CSV sweep using --out as journal",
        )
        if name == "benchmark-dimer":
            p.add_argument(
                "--u-zero-only", action="store_true",
                help="restrict the benchmark grid to U=0",
            )
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        return _COMMANDS[args.command](cfg, args)
    except QWorkStatsError as exc:
        error = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
