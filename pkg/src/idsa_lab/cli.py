"""
Batch front end: one experiment per invocation, deterministic CSV out.

    idsa-lab run <config-file> [--set key=value ...]

Exit codes: 0 success, 2 configuration error, 3 solver failure (an error
record is still written to the output directory), 4 I/O error.  Numbers
are serialized with 17 significant digits so files round-trip doubles
exactly; identical configs produce byte-identical CSV bodies.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, describe_keys, parse_config
from .diagnostics import convergence_sweep, err0_curve, fit_power_law, oracle_moments_for
from .grids import ProblemSpec, make_uniform_grid
from .idsa import (
    NegativityError,
    Regime,
    SolverConfig,
    UnboundedError,
    run_instability_experiment,
    run_spurious_trapped_experiment,
    run_to_time,
)
from .quadrature import QuadratureError
from .reformed import (
    NormalizationSingularityError,
    ReformedScheme,
    closure_set,
    reconstruct_flux_factors,
    reconstruct_HK,
)
from .sphere import exact_moments

_SOLVER_FAILURES = (
    NegativityError,
    UnboundedError,
    NormalizationSingularityError,
    QuadratureError,
)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_csv(path: Path, meta: dict, header: list[str], rows) -> None:
    lines = [f"# {k} = {_fmt(v)}" for k, v in meta.items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _scenario_meta(cfg: RunConfig) -> dict:
    return {
        "experiment": cfg.experiment,
        "B": cfg.B,
        "R": cfg.R,
        "kappa": cfg.kappa,
        "kappa_outside": cfg.kappa_outside,
        "kappa_s": cfg.kappa_s,
        "r_max": cfg.r_max,
        "n_cells": cfg.n_cells,
    }


def _spec(cfg: RunConfig) -> ProblemSpec:
    return ProblemSpec(
        B=cfg.B, R=cfg.R, kappa=cfg.kappa,
        kappa_outside=cfg.kappa_outside, kappa_s=cfg.kappa_s,
    )


def _solver_config(cfg: RunConfig) -> SolverConfig:
    return SolverConfig(
        dt=cfg.dt,
        t_end=cfg.t_end,
        stationarity_tol=cfg.stationarity_tol,
        sigma_lagging=cfg.sigma_lagging,
        kappa_floor=cfg.kappa_floor,
    )


def _run_oracle(cfg: RunConfig, out: Path) -> list[str]:
    if cfg.kappa_outside != 0.0 or cfg.kappa_s != 0.0:
        raise ConfigError("the oracle needs the bare sphere: kappa_outside = kappa_s = 0")
    grid = make_uniform_grid(cfg.r_max, cfg.n_cells)
    moments = exact_moments(grid, _spec(cfg), tol=cfg.oracle_tol)
    ff = moments.flux_factors()
    rows = zip(
        grid.r_centers, moments.J.values, moments.H.values, moments.K.values,
        ff.h.values, ff.k.values,
    )
    _write_csv(out / "oracle.csv", _scenario_meta(cfg), ["r", "J", "H", "K", "h", "k"], rows)
    return ["oracle.csv"]


def _run_solve_idsa(cfg: RunConfig, out: Path) -> list[str]:
    grid = make_uniform_grid(cfg.r_max, cfg.n_cells)
    spec = _spec(cfg)
    traj = run_to_time(spec, grid, _solver_config(cfg), tuple(cfg.snapshot_times))
    snaps = traj.snapshots or []
    if not any(s.state.t == traj.final.t for s in snaps):
        from .idsa import Snapshot, diffusion_source

        _, tags = diffusion_source(traj.final.Jt, traj.final.Js, spec, grid,
                                   kappa_floor=cfg.kappa_floor)
        snaps = snaps + [Snapshot(traj.final, tags)]
    rows = []
    for snap in snaps:
        st = snap.state
        tot = st.Jt.values + st.Js.values
        ht = np.where(tot > 0, st.Jt.values / np.where(tot > 0, tot, 1.0), 0.0)
        hs = np.where(tot > 0, st.Js.values / np.where(tot > 0, tot, 1.0), 0.0)
        names = [Regime(t).name.lower() for t in snap.tags]
        for i, r in enumerate(grid.r_centers):
            rows.append((st.t, r, st.Jt.values[i], st.Js.values[i], ht[i], hs[i], names[i]))
    _write_csv(
        out / "snapshots.csv", _scenario_meta(cfg),
        ["t", "r", "Jt", "Js", "h_t", "h_s", "regime"], rows,
    )
    return ["snapshots.csv"]


def _run_solve_reformed(cfg: RunConfig, out: Path, variant: str) -> list[str]:
    grid = make_uniform_grid(cfg.r_max, cfg.n_cells)
    scheme = ReformedScheme(variant, _spec(cfg), grid, _solver_config(cfg))
    states = []
    if cfg.snapshot_times:
        from .idsa import zero_state

        state = zero_state(grid)
        remaining = sorted(cfg.snapshot_times)
        n_steps = int(round(max(remaining) / cfg.dt))
        targets = {int(round(t / cfg.dt)) for t in remaining}
        for k in range(1, n_steps + 1):
            state = scheme.step(state)
            if k in targets:
                states.append(state)
    final, _ = scheme.run_to_stationarity()
    states.append(final)
    closures = closure_set(grid, cfg.R)
    rows = []
    for st in states:
        H, K = reconstruct_HK(st, closures)
        h, k = reconstruct_flux_factors(st, closures)
        for i, r in enumerate(grid.r_centers):
            rows.append(
                (st.t, r, st.Jt.values[i], st.Js.values[i],
                 H.values[i], K.values[i], h.values[i], k.values[i])
            )
    _write_csv(
        out / "snapshots.csv", _scenario_meta(cfg),
        ["t", "r", "Jt", "Js", "H", "K", "h", "k"], rows,
    )
    return ["snapshots.csv"]


def _run_spurious(cfg: RunConfig, out: Path) -> list[str]:
    grid = make_uniform_grid(cfg.r_max, cfg.n_cells)
    records = run_spurious_trapped_experiment(
        cfg.eps_list, _spec(cfg), grid, _solver_config(cfg), horizon=cfg.horizon
    )
    rows = [(r.eps, r.time if r.time is not None else np.nan, r.censored) for r in records]
    _write_csv(out / "spurious.csv", _scenario_meta(cfg), ["eps", "time", "censored"], rows)

    usable = sorted((r for r in records if not r.censored), key=lambda r: -r.eps)
    kept = usable[cfg.exclude_largest :]
    files = ["spurious.csv"]
    if len(kept) >= 2:
        fit = fit_power_law([r.eps for r in kept], [r.time for r in kept])
        _atomic_write(
            out / "fit.txt",
            "takeover time vs eps (log-log least squares)\n"
            f"exponent = {_fmt(fit.exponent)}\n"
            f"intercept = {_fmt(fit.intercept)}\n"
            f"points = {fit.points_used} (excluded {cfg.exclude_largest} largest eps; "
            f"{sum(r.censored for r in records)} censored)\n",
        )
        files.append("fit.txt")
    return files


def _run_instability(cfg: RunConfig, out: Path) -> list[str]:
    grid = make_uniform_grid(cfg.r_max, cfg.n_cells)
    result = run_instability_experiment(
        _spec(cfg), grid, _solver_config(cfg),
        snapshot_times=tuple(cfg.snapshot_times), vb_threshold=cfg.vb_threshold,
        bound_margin=cfg.bound_margin,
    )
    rows = [
        (s.t, s.virtual_boundary, s.nonmonotone, s.sup_total) for s in result.snapshots
    ]
    meta = _scenario_meta(cfg)
    meta["first_nonmonotone_time"] = (
        result.first_nonmonotone_time if result.first_nonmonotone_time is not None else np.nan
    )
    meta["vb_threshold"] = result.vb_threshold
    _write_csv(
        out / "instability.csv", meta,
        ["t", "virtual_boundary", "nonmonotone_flag", "sup_norm"], rows,
    )
    return ["instability.csv"]


def _run_convergence(cfg: RunConfig, out: Path) -> list[str]:
    grid = make_uniform_grid(cfg.r_max, cfg.n_cells)
    oracle = oracle_moments_for(cfg.kappa_list, grid, cfg.R, cfg.B, tol=cfg.oracle_tol)
    records = convergence_sweep(
        cfg.kappa_list, cfg.R, cfg.B, grid, cfg.variant,
        oracle_tol=cfg.oracle_tol, cfg=_solver_config(cfg), oracle=oracle,
    )
    rows = [
        (r.kappa, r.errJ, r.errH, r.errK, r.failure or "") for r in records
    ]
    _write_csv(
        out / "convergence.csv", _scenario_meta(cfg),
        ["kappa", "errJ", "errH", "errK", "failure"], rows,
    )
    ok = [r for r in records if r.failure is None]
    files = ["convergence.csv"]
    if len(ok) >= 2:
        lines = [f"relative L2 error vs kappa, variant = {cfg.variant}"]
        for name in ("errJ", "errH", "errK"):
            fit = fit_power_law([r.kappa for r in ok], [getattr(r, name) for r in ok])
            lines.append(
                f"{name}: exponent = {_fmt(fit.exponent)}, intercept = {_fmt(fit.intercept)},"
                f" points = {fit.points_used}"
            )
        _atomic_write(out / "fit.txt", "\n".join(lines) + "\n")
        files.append("fit.txt")
    return files


def _run_err0(cfg: RunConfig, out: Path) -> list[str]:
    rows = err0_curve(cfg.kappaR_list)
    _write_csv(out / "err0.csv", {"experiment": "err0"}, ["kappaR", "err0"], rows)
    return ["err0.csv"]


_RUNNERS = {
    "oracle": _run_oracle,
    "solve-idsa": _run_solve_idsa,
    "solve-old": lambda cfg, out: _run_solve_reformed(cfg, out, "old"),
    "solve-new": lambda cfg, out: _run_solve_reformed(cfg, out, "new"),
    "spurious": _run_spurious,
    "instability": _run_instability,
    "convergence": _run_convergence,
    "err0": _run_err0,
}


def run(cfg: RunConfig) -> int:
    """Execute one experiment; returns the process exit code."""
    try:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4

    manifest = {
        "tool": "idsa-lab",
        "version": __version__,
        "parameters": cfg.resolved(),
        "outputs": [],
    }
    try:
        files = _RUNNERS[cfg.experiment](cfg, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # Bad scenario/grid combinations surface as ValueError from the
        # domain types; they are configuration problems, not solver crashes.
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except _SOLVER_FAILURES as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        _atomic_write(out / "error.json", json.dumps(record, indent=2, sort_keys=True) + "\n")
        manifest["outputs"] = ["error.json"]
        _atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4

    manifest["outputs"] = files
    try:
        _atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="idsa-lab",
        description="Two-component radiative transfer experiments on the homogeneous sphere.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run_parser = sub.add_parser(
        "run",
        help="run one experiment from a config file",
        epilog=describe_keys(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    run_parser.add_argument("config", help="path to a key = value config file")
    run_parser.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"I/O error: cannot read config: {exc}", file=sys.stderr)
        return 4
    overrides = {}
    for item in args.set:
        if "=" not in item:
            print(f"configuration error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return 2
        key, value = item.split("=", 1)
        overrides[key] = value
    try:
        cfg = parse_config(text, overrides)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
