"""Command-line entry point.

Subcommands: steady, hopf, simulate, iterate, sweep, validate.  File-based
runs read a flat INI config; outputs are deterministic CSV/JSON (identical
config -> identical bytes).  Output directory: --out flag, else the
DELAYFLUX_OUT environment variable, else the working directory.

Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import io as _stdio
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, greens, spectral
from .errors import NumericalError, ParameterError
from .fdsolver import Grid, Trajectory, default_grid, simulate
from .io import (fmt, read_initial_csv, write_iteration_csv, write_json,
                 write_snapshots_csv, write_sweep_csv, write_trajectory_csv)
from .model import InitialData, ModelParams, boundary_flux, steady_state


class RunConfig:
    """Flat INI-backed configuration; parse -> serialize -> parse is lossless."""

    def __init__(self, sections: dict[str, dict[str, str]]):
        self.sections = sections

    @classmethod
    def load(cls, path) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        read = cp.read(path, encoding="utf-8")
        if not read:
            raise ParameterError(f"config file not found: {path}")
        return cls({s: dict(cp.items(s)) for s in cp.sections()})

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.read_string(text)
        return cls({s: dict(cp.items(s)) for s in cp.sections()})

    def dumps(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for sec, kv in self.sections.items():
            cp[sec] = dict(kv)
        buf = _stdio.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def get(self, section: str, key: str, cast=str, default=None):
        sec = self.sections.get(section, {})
        if key not in sec:
            if default is None and cast is not str:
                raise ParameterError(f"config missing [{section}] {key}")
            return default
        raw = sec[key]
        try:
            if cast is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return cast(raw)
        except ValueError:
            raise ParameterError(f"config [{section}] {key} = {raw!r} is not a {cast.__name__}")

    def get_floats(self, section: str, key: str, default=None):
        sec = self.sections.get(section, {})
        if key not in sec:
            return default
        return [float(v) for v in sec[key].replace(",", " ").split()]


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("DELAYFLUX_OUT") or "."
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _params_from(cfg: RunConfig) -> ModelParams:
    return ModelParams(alpha=cfg.get("model", "alpha", float),
                       m=cfg.get("model", "m", float),
                       tau=cfg.get("model", "tau", float, 0.0))


def _grid_from(cfg: RunConfig, tau: float) -> Grid:
    base = default_grid(tau, cfg.get("grid", "t_end", float, 10.0))
    return Grid(L=cfg.get("grid", "l", float, base.L),
                nx=cfg.get("grid", "nx", int, base.nx),
                dt=cfg.get("grid", "dt", float, base.dt),
                t_end=base.t_end)


def _initial_from(cfg: RunConfig, params: ModelParams, cfg_path) -> InitialData:
    kind = cfg.get("initial", "kind", str, "steady")
    if kind == "steady":
        return InitialData.steady(params)
    if kind == "perturbed":
        return InitialData.steady(params, bump=cfg.get("initial", "bump", float, 0.1))
    if kind == "files":
        base = Path(cfg_path).parent
        f_file = cfg.get("initial", "f_file", str)
        if f_file is None:
            raise ParameterError("initial kind 'files' needs f_file")
        h_file = cfg.get("initial", "h_file", str)
        f_path = base / f_file
        h_path = base / h_file if h_file else None
        if not f_path.exists():
            raise ParameterError(f"initial profile file not found: {f_path}")
        if params.tau > 0 and (h_path is None or not h_path.exists()):
            raise ParameterError(f"history file not found: {h_path}")
        return read_initial_csv(f_path, h_path, params.tau)
    raise ParameterError(f"initial kind must be steady|perturbed|files, got {kind!r}")


def cmd_steady(args) -> int:
    st = steady_state(ModelParams(alpha=args.alpha, m=args.m))
    rec = {"c": st.c, "Q": st.Q, "flux_at_c": boundary_flux(st.c, args.alpha, args.m)}
    print(json.dumps({k: float(fmt(v)) for k, v in rec.items()}, sort_keys=True))
    if args.out:
        write_json(_out_dir(args) / "steady.json", rec)
    return 0


def cmd_hopf(args) -> int:
    st = steady_state(ModelParams(alpha=args.alpha, m=args.m))
    tau = args.tau if args.tau is not None else 0.0
    verdict = spectral.classify(args.alpha, args.m, tau)
    rec: dict = {"Q": st.Q, "regime": verdict.regime}
    if st.Q > 1.0 + spectral.MARGINAL_TOL:
        rec.update(spectral.hopf_analysis(st.Q).as_dict())
        rec["regime"] = verdict.regime
    print(json.dumps({k: (float(fmt(v)) if isinstance(v, float) else v)
                      for k, v in rec.items()}, sort_keys=True))
    if args.out:
        write_json(_out_dir(args) / "hopf.json", rec)
    return 0


def cmd_simulate(args) -> int:
    cfg = RunConfig.load(args.config)
    params = _params_from(cfg)
    grid = _grid_from(cfg, params.tau)
    data = _initial_from(cfg, params, args.config)
    snap = cfg.get_floats("simulate", "snapshot_times")
    traj = simulate(params, data, grid, snapshot_times=snap)
    st = steady_state(params)
    rep = diagnostics.analyze(
        traj, st.c,
        transient_frac=cfg.get("simulate", "transient_frac", float, 0.5),
        eps_s=cfg.get("simulate", "eps_s", float, 0.05),
        conv_tol=cfg.get("simulate", "conv_tol", float, 1e-6))
    out = _out_dir(args)
    write_trajectory_csv(out / "trajectory.csv", traj)
    if snap:
        write_snapshots_csv(out / "snapshots.csv", traj)
    write_json(out / "report.json", {
        "verdict": rep.verdict,
        "amp_ratio": None if math.isnan(rep.amp_ratio) else rep.amp_ratio,
        "period_est": None if math.isnan(rep.period_est) else rep.period_est,
        "terminal_dev": rep.terminal_dev,
        "n_peaks": len(rep.peaks),
        "c": st.c, "Q": st.Q,
    })
    print(f"verdict={rep.verdict} terminal_dev={fmt(rep.terminal_dev)} -> {out}")
    return 0


def cmd_iterate(args) -> int:
    cfg = RunConfig.load(args.config)
    params = _params_from(cfg)
    if params.tau != 0:
        raise ParameterError("iterate requires tau = 0 in [model]")
    data = _initial_from(cfg, params, args.config)
    lattice = greens.GreensLattice(
        L=cfg.get("iterate", "l", float, 15.0),
        dx=cfg.get("iterate", "dx", float, 0.25),
        t_end=cfg.get("iterate", "t_end", float, 3.0),
        dt=cfg.get("iterate", "dt", float, 0.05),
        dt_boundary=cfg.get("iterate", "dt_boundary", float, 0.005))
    state = greens.monotone_iterate(params, data, lattice,
                                    tol=cfg.get("iterate", "tol", float, 1e-3),
                                    k_max=cfg.get("iterate", "k_max", int, 30))
    out = _out_dir(args)
    write_iteration_csv(out / "iteration_report.csv", state)
    snaps = [(float(t), state.upper_field[:, j]) for j, t in enumerate(state.ts)]
    write_snapshots_csv(out / "iterate_field.csv",
                        Trajectory(times=state.ts, q0_series=state.upper_field[0, :],
                                   x=state.xs, snapshots=snaps))
    write_json(out / "iterate_meta.json", {
        "iterations": state.k, "converged": state.converged,
        "sup_gap": state.sup_gap, "gamma_lipschitz": state.gamma, **state.meta,
    })
    print(f"converged={state.converged} k={state.k} sup_gap={fmt(state.sup_gap)} -> {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = RunConfig.load(args.config)
    confirm = args.confirm or cfg.get("sweep", "confirm", bool, False)
    jobs = args.jobs or cfg.get("sweep", "jobs", int, 1)
    pts_raw = cfg.sections.get("sweep", {}).get("points")
    if pts_raw:
        pts = []
        for row in pts_raw.split(";"):
            row = row.strip()
            if not row:
                continue
            vals = [float(v) for v in row.replace(",", " ").split()]
            if len(vals) != 3:
                raise ParameterError(f"sweep point needs three values, got {row!r}")
            pts.append(tuple(vals))
        records = diagnostics.sweep_points(pts, confirm=confirm, jobs=jobs)
    else:
        alphas = cfg.get_floats("sweep", "alpha")
        ms = cfg.get_floats("sweep", "m")
        taus = cfg.get_floats("sweep", "tau")
        if not (alphas and ms and taus):
            raise ParameterError("sweep needs either 'points' or alpha/m/tau grids")
        records = diagnostics.stability_sweep(alphas, ms, taus, confirm=confirm, jobs=jobs)
    out = _out_dir(args)
    write_sweep_csv(out / "sweep.csv", records)
    n_mis = sum(r.mismatch for r in records)
    print(f"{len(records)} points, {n_mis} mismatches -> {out / 'sweep.csv'}")
    return 0


def cmd_validate(args) -> int:
    """Kernel identities and cross-solver checks; prints one line per check."""
    checks: list[tuple[str, bool, str]] = []
    ones = lambda s: np.ones_like(np.asarray(s, dtype=float))

    worst = 0.0
    for x in (0.0, 0.5, 1.0, 5.0):
        for t in (0.1, 1.0, 5.0):
            worst = max(worst, abs(greens.homogeneous_term(ones, x, t) - math.exp(-t)))
    checks.append(("kernel-normalization", worst <= 1e-10, f"max residual {worst:.2e}"))

    t_ref = 2.0
    berr = abs(greens.boundary_term(ones, 0.0, t_ref) - math.erf(math.sqrt(t_ref)))
    checks.append(("boundary-erf-identity", berr <= 1e-10, f"residual {berr:.2e}"))

    c1, vals = greens.fit_boundary_envelope()
    tg = np.linspace(0.1, 10.0, 67)
    envelope_ok = all(
        abs(greens.boundary_term(ones, 0.0, float(t), decay="exp-t"))
        <= 2.0 * c1 * t * math.exp(-t) * (1.0 + 1e-9) for t in tg)
    checks.append(("boundary-envelope", envelope_ok and math.isfinite(c1), f"C1 = {c1:.5f}"))

    # constant-flux linear problem: integral representation vs finite differences;
    # this pins the boundary sign and the decay convention
    params = ModelParams(alpha=0.4, m=4.0, tau=1.0)
    data = InitialData.steady(params)
    grid = Grid(L=15.0, nx=600, dt=5e-4, t_end=1.0)
    traj = simulate(params, data, grid, frozen_flux=-params.alpha)
    flux = lambda s: np.full_like(np.asarray(s, dtype=float), -params.alpha)
    t_sample = np.linspace(0.05, 1.0, 20)
    g_vals = np.array([greens.solve_linear_window(data.f, flux, 0.0, float(t))
                       for t in t_sample])
    fd_vals = np.interp(t_sample, traj.times, traj.q0_series)
    xerr = float(np.max(np.abs(g_vals - fd_vals)))
    checks.append(("fd-vs-greens-constant-flux", xerr <= 1e-2, f"sup gap {xerr:.2e}"))

    # first delay window of the nonlinear problem: rung solve vs finite differences
    grid2 = Grid(L=15.0, nx=600, dt=1e-3, t_end=1.0)
    data2 = InitialData.steady(params, bump=0.2)
    fd2 = simulate(params, data2, grid2)
    lad = greens.ladder_solve(params, data2, rungs=1, dt_out=0.01)
    l_vals = np.interp(t_sample, lad.times, lad.q0_series)
    f_vals = np.interp(t_sample, fd2.times, fd2.q0_series)
    rerr = float(np.max(np.abs(l_vals - f_vals)))
    checks.append(("fd-vs-greens-first-rung", rerr <= 1e-2, f"sup gap {rerr:.2e}"))

    all_ok = True
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        all_ok &= ok
    if args.out:
        write_json(_out_dir(args) / "validate_report.json",
                   {name: {"pass": ok, "detail": detail} for name, ok, detail in checks})
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="delayflux",
                                description="Half-line reaction-diffusion with delayed "
                                            "boundary feedback: equilibria, delay "
                                            "thresholds, simulation, and validation.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, config=False):
        sp.add_argument("--out", default=None,
                        help="output directory (fallback: $DELAYFLUX_OUT, then '.')")
        if config:
            sp.add_argument("--config", required=True, help="INI config file")

    sp = sub.add_parser("steady", help="equilibrium root and gain")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--m", type=float, required=True)
    add_common(sp)
    sp.set_defaults(func=cmd_steady)

    sp = sub.add_parser("hopf", help="delay threshold analysis")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--m", type=float, required=True)
    sp.add_argument("--tau", type=float, default=None,
                    help="delay at which to report the regime (default 0)")
    add_common(sp)
    sp.set_defaults(func=cmd_hopf)

    sp = sub.add_parser("simulate", help="time-domain run from a config file")
    add_common(sp, config=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("iterate", help="monotone bracketing iteration (tau = 0)")
    add_common(sp, config=True)
    sp.set_defaults(func=cmd_iterate)

    sp = sub.add_parser("sweep", help="stability map over a parameter grid")
    add_common(sp, config=True)
    sp.add_argument("--jobs", type=int, default=None, help="parallel workers")
    sp.add_argument("--confirm", action="store_true",
                    help="confirm each analytic verdict with a short simulation")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("validate", help="kernel identities and cross-solver checks")
    add_common(sp)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
