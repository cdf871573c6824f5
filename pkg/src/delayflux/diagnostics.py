"""Trajectory classification, oscillation measurements, and stability maps.

A trajectory is judged by the local maxima of its deviation from the
equilibrium boundary value: the geometric mean of successive peak-amplitude
ratios separates decay from a settled limit cycle, and the mean peak spacing
estimates the emergent period (whose target near threshold is
2*pi/sqrt(Q^4 - 1)).
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import spectral
from .errors import ParameterError
from .fdsolver import Grid, Trajectory, simulate
from .model import InitialData, ModelParams, feedback_gain, steady_state_c

__all__ = [
    "VERDICT_DECAYING",
    "VERDICT_SUSTAINED",
    "VERDICT_CONVERGED",
    "VERDICT_INDETERMINATE",
    "OscillationReport",
    "SweepRecord",
    "analyze",
    "period_check",
    "stability_sweep",
    "sweep_points",
]

VERDICT_DECAYING = "Decaying"
VERDICT_SUSTAINED = "Sustained"
VERDICT_CONVERGED = "Converged"
VERDICT_INDETERMINATE = "Indeterminate"

# peaks of |q0 - c| below this are treated as numerical flatline, not oscillation
PEAK_FLOOR = 1e-8
# how many trailing peaks enter the sustained-band test
SUSTAIN_PEAKS = 10


@dataclass(frozen=True)
class OscillationReport:
    """Peaks of q(0,t) - c after the transient cutoff, with derived measures."""

    peaks: tuple                 # ((t, value), ...) value = deviation at the peak
    amp_ratio: float             # geometric mean of successive peak ratios (last <=10 peaks)
    period_est: float            # mean peak spacing
    verdict: str
    terminal_dev: float          # |q0(T) - c|


def _refine_peak(t, v, i):
    # 3-point parabola through (i-1, i, i+1)
    denom = v[i - 1] - 2.0 * v[i] + v[i + 1]
    if denom == 0.0:
        return t[i], v[i]
    delta = 0.5 * (v[i - 1] - v[i + 1]) / denom
    delta = min(0.5, max(-0.5, delta))
    dt = t[i + 1] - t[i]
    return t[i] + delta * dt, v[i] - 0.25 * (v[i - 1] - v[i + 1]) * delta


def analyze(traj: Trajectory, c: float, transient_frac: float = 0.5,
            eps_s: float = 0.05, conv_tol: float = 1e-6,
            peak_floor: float = PEAK_FLOOR) -> OscillationReport:
    """Classify a boundary series as Decaying / Sustained / Converged / Indeterminate.

    Peaks are 3-point local maxima of q0 - c after dropping the first
    transient_frac of the horizon, refined by parabolic interpolation and
    ignored below peak_floor.  Sustained demands at least 10 peaks with the
    trailing amplitude ratio inside [1-eps_s, 1+eps_s]; fewer than three
    peaks fall back to Converged (terminal deviation under conv_tol) or
    Indeterminate.
    """
    t = np.asarray(traj.times, dtype=float)
    v = np.asarray(traj.q0_series, dtype=float) - c
    terminal = float(abs(v[-1]))
    cut = transient_frac * t[-1]
    i0 = int(np.searchsorted(t, cut))
    ts, vs = t[i0:], v[i0:]

    peaks = []
    for i in range(1, len(vs) - 1):
        if vs[i - 1] < vs[i] >= vs[i + 1] and vs[i] >= peak_floor:
            peaks.append(_refine_peak(ts, vs, i))
    peaks = tuple(peaks)

    if len(peaks) >= 2:
        tail = peaks[-min(SUSTAIN_PEAKS, len(peaks)):]
        amps = np.array([p[1] for p in tail])
        amp_ratio = float((amps[-1] / amps[0]) ** (1.0 / (len(amps) - 1)))
        period_est = float(np.mean(np.diff([p[0] for p in peaks])))
    else:
        amp_ratio = math.nan
        period_est = math.nan

    if len(peaks) < 3:
        verdict = VERDICT_CONVERGED if terminal <= conv_tol else VERDICT_INDETERMINATE
    elif len(peaks) >= SUSTAIN_PEAKS and abs(amp_ratio - 1.0) <= eps_s:
        verdict = VERDICT_SUSTAINED
    elif amp_ratio < 1.0 - eps_s:
        verdict = VERDICT_DECAYING
    elif terminal <= conv_tol:
        verdict = VERDICT_CONVERGED
    else:
        verdict = VERDICT_INDETERMINATE

    return OscillationReport(peaks=peaks, amp_ratio=amp_ratio,
                             period_est=period_est, verdict=verdict,
                             terminal_dev=terminal)


def period_check(report: OscillationReport, Q: float) -> float:
    """Relative error of the measured period against 2*pi/sqrt(Q^4 - 1)."""
    expected = 2.0 * math.pi / spectral.hopf_omega(Q)
    return abs(report.period_est - expected) / expected


@dataclass(frozen=True)
class SweepRecord:
    alpha: float
    m: float
    tau: float
    c: float
    Q: float
    tau0: float | None
    analytic_verdict: str
    sim_verdict: str = ""
    amp_ratio: float = math.nan
    period_est: float = math.nan
    mismatch: bool = False
    error: str = ""


_AGREE = {
    spectral.REGIME_STABLE_ALL: (VERDICT_CONVERGED, VERDICT_DECAYING),
    spectral.REGIME_STABLE_BELOW: (VERDICT_CONVERGED, VERDICT_DECAYING),
    spectral.REGIME_OSCILLATORY: (VERDICT_SUSTAINED,),
}


def _confirm_grid(tau: float) -> Grid:
    # coarse-but-adequate simulation for verdict confirmation
    t_end = min(max(30.0 * tau, 20.0), 200.0) if tau > 0 else 20.0
    dt = min(2e-3, tau / 50.0) if tau > 0 else 2e-3
    return Grid(L=12.0, nx=300, dt=dt, t_end=t_end)


def _sweep_point(args) -> SweepRecord:
    alpha, m, tau, confirm, bump = args
    c = steady_state_c(alpha, m)
    Q = feedback_gain(alpha, m, c)
    verdict = spectral.classify(alpha, m, tau)
    rec = SweepRecord(alpha=alpha, m=m, tau=tau, c=c, Q=Q,
                      tau0=verdict.tau0, analytic_verdict=verdict.regime)
    if not confirm:
        return rec
    try:
        params = ModelParams(alpha=alpha, m=m, tau=tau)
        data = InitialData.steady(params, bump=bump * c)
        traj = simulate(params, data, _confirm_grid(tau))
        rep = analyze(traj, c, transient_frac=0.5, conv_tol=1e-2)
        ok = rep.verdict in _AGREE.get(verdict.regime, (rep.verdict,))
        return SweepRecord(alpha=alpha, m=m, tau=tau, c=c, Q=Q, tau0=verdict.tau0,
                           analytic_verdict=verdict.regime, sim_verdict=rep.verdict,
                           amp_ratio=rep.amp_ratio, period_est=rep.period_est,
                           mismatch=not ok)
    except Exception as exc:   # a failed point is recorded, never fatal
        return SweepRecord(alpha=alpha, m=m, tau=tau, c=c, Q=Q, tau0=verdict.tau0,
                           analytic_verdict=verdict.regime, mismatch=True,
                           error=f"{type(exc).__name__}: {exc}")


def sweep_points(points, confirm: bool = False, jobs: int = 1,
                 bump: float = 0.1) -> list[SweepRecord]:
    """Evaluate explicit (alpha, m, tau) triples; records keep input order."""
    tasks = [(float(a), float(m), float(t), confirm, bump) for a, m, t in points]
    if jobs <= 1:
        return [_sweep_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, tasks))


def stability_sweep(alpha_grid, m_grid, tau_grid, confirm: bool = False,
                    jobs: int = 1, bump: float = 0.1) -> list[SweepRecord]:
    """Cross-product sweep; per point the gain, the threshold delay (when it
    exists), the analytic verdict and optionally a simulated verdict with a
    mismatch flag."""
    pts = [(a, m, t) for a in alpha_grid for m in m_grid for t in tau_grid]
    if not pts:
        raise ParameterError("empty sweep grid")
    return sweep_points(pts, confirm=confirm, jobs=jobs, bump=bump)
