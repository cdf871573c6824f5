"""Deterministic CSV/JSON serialization and the initial-data file format.

Every float is emitted with 17 significant digits so files round-trip
exactly; data files carry no timestamps.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .model import InitialData

__all__ = [
    "fmt",
    "write_json",
    "write_trajectory_csv",
    "write_snapshots_csv",
    "write_iteration_csv",
    "write_sweep_csv",
    "read_initial_csv",
]


def fmt(x) -> str:
    """One float, 17 significant digits."""
    return format(float(x), ".17g")


class _F17(float):
    # json.dumps renders floats through repr(); this pins 17 significant digits
    def __repr__(self):
        return format(float(self), ".17g")


def _wrap_floats(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return _F17(obj)
    if isinstance(obj, (np.floating,)):
        return _F17(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _wrap_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_wrap_floats(v) for v in obj]
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_wrap_floats(obj), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def write_trajectory_csv(path, traj) -> None:
    """Columns t,q0."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "q0"])
        for t, q in zip(traj.times, traj.q0_series):
            w.writerow([fmt(t), fmt(q)])


def write_snapshots_csv(path, traj) -> None:
    """Long format t,x,q over the recorded snapshots."""
    if traj.x is None:
        raise ParameterError("trajectory carries no grid; nothing to write")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "q"])
        for t, fieldvals in traj.snapshots:
            for x, q in zip(traj.x, fieldvals):
                w.writerow([fmt(t), fmt(x), fmt(q)])


def write_iteration_csv(path, state) -> None:
    """Columns k,sup_gap,min_ordering_slack."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "sup_gap", "min_ordering_slack"])
        for k, gap, slack in state.history:
            w.writerow([k, fmt(gap), fmt(slack)])


def write_sweep_csv(path, records) -> None:
    """Columns alpha,m,tau,Q,tau0,analytic_verdict,sim_verdict,amp_ratio,period_est,mismatch."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "m", "tau", "Q", "tau0", "analytic_verdict",
                    "sim_verdict", "amp_ratio", "period_est", "mismatch"])
        for r in records:
            w.writerow([
                fmt(r.alpha), fmt(r.m), fmt(r.tau), fmt(r.Q),
                "" if r.tau0 is None else fmt(r.tau0),
                r.analytic_verdict,
                r.sim_verdict,
                "" if math.isnan(r.amp_ratio) else fmt(r.amp_ratio),
                "" if math.isnan(r.period_est) else fmt(r.period_est),
                "true" if r.mismatch else "false",
            ])


def _read_two_columns(path, names) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != list(names):
        raise ParameterError(f"{path}: expected header row '{names[0]},{names[1]}'")
    try:
        body = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except (ValueError, TypeError) as exc:
        raise ParameterError(f"{path}: malformed numeric row ({exc})") from None
    if body.size == 0:
        raise ParameterError(f"{path}: no data rows")
    return body[:, 0], body[:, 1]


def read_initial_csv(f_path, h_path, tau: float) -> InitialData:
    """Initial data from two CSV files: columns x,f (x strictly increasing from 0)
    and, when tau > 0, columns t,h with t covering [-tau, 0]."""
    x, fx = _read_two_columns(f_path, ("x", "f"))
    if tau > 0:
        if h_path is None:
            raise ParameterError("tau > 0 requires a history file")
        t, ht = _read_two_columns(h_path, ("t", "h"))
    else:
        t, ht = None, None
    return InitialData.from_samples(x, fx, t, ht, tau)
