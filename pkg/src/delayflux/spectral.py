"""Linearized spectrum, delay threshold, and stability classification.

Perturbations v of the equilibrium profile satisfy v_t = v_xx - v with the
delayed boundary coupling v_x(0, t) = Q v(0, t - tau).  Separated modes
exp(lambda*t) * exp(-rho*x) with lambda = rho^2 - 1 lead to a transcendental
characteristic equation; splitting by the half-plane of rho gives the pair

    F_p(rho, tau) = rho + Q exp(-(rho^2 - 1) tau)   (eigenvalues need Re rho > 0)
    F_n(rho, tau) = rho - Q exp(-(rho^2 - 1) tau)   (mirror family, Re rho < 0)

with rho = a + i*b.  A purely imaginary eigenvalue pair requires
a^2 - b^2 = 1 and a^2 + b^2 = Q^2 simultaneously, which is possible only for
Q > 1; the crossing frequency is omega = sqrt(Q^4 - 1) and the smallest
critical delay tau0 solves  tan(tau * omega) = -sqrt(Q^2-1)/sqrt(Q^2+1)
inside (pi/(2*omega), pi/omega).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import feedback_gain, steady_state_c

__all__ = [
    "BRANCH_POS",
    "BRANCH_NEG",
    "REGIME_STABLE_ALL",
    "REGIME_STABLE_BELOW",
    "REGIME_OSCILLATORY",
    "REGIME_MARGINAL",
    "CharRoot",
    "HopfAnalysis",
    "StabilityVerdict",
    "char_residual",
    "hopf_omega",
    "hopf_bracket",
    "hopf_tau0",
    "hopf_tau0_bisect",
    "crossing_pair",
    "crossing_speed",
    "hopf_analysis",
    "track_rightmost_root",
    "classify",
]

BRANCH_POS = "F_p"
BRANCH_NEG = "F_n"

REGIME_STABLE_ALL = "StableAllDelays"
REGIME_STABLE_BELOW = "StableBelowThreshold"
REGIME_OSCILLATORY = "OscillatoryAboveThreshold"
REGIME_MARGINAL = "Marginal"

# |Q - 1| band inside which no classification is attempted
MARGINAL_TOL = 1e-9

# exponents beyond this are treated as Newton divergence, not overflow
_EXP_CAP = 200.0


@dataclass(frozen=True)
class CharRoot:
    """One tracked characteristic root rho = a + i*b at delay tau.

    branch records which characteristic function the root solves.  The
    eigenvalue components are derived fields, so lambda_re = a^2 - b^2 - 1
    and lambda_im = 2ab hold exactly by construction.
    """

    a: float
    b: float
    tau: float
    branch: str = BRANCH_POS
    converged: bool = True

    @property
    def lambda_re(self) -> float:
        return self.a * self.a - self.b * self.b - 1.0

    @property
    def lambda_im(self) -> float:
        return 2.0 * self.a * self.b


def char_residual(a: float, b: float, tau: float, Q: float, branch: str = BRANCH_POS):
    """Real and imaginary parts of the characteristic function at rho = a + i*b.

    For F_p:  re = a + Q e^{-(a^2-b^2-1) tau} cos(2ab tau),
              im = b - Q e^{-(a^2-b^2-1) tau} sin(2ab tau);
    F_n flips the sign of the exponential term.
    """
    if branch == BRANCH_POS:
        sgn = 1.0
    elif branch == BRANCH_NEG:
        sgn = -1.0
    else:
        raise ParameterError(f"unknown branch {branch!r}")
    expo = -(a * a - b * b - 1.0) * tau
    E = Q * math.exp(min(expo, _EXP_CAP))
    return (a + sgn * E * math.cos(2.0 * a * b * tau),
            b - sgn * E * math.sin(2.0 * a * b * tau))


def _char_f(rho: complex, tau: float, Q: float, sgn: float) -> tuple[complex, complex]:
    """Characteristic function and its rho-derivative (complex form)."""
    z = -(rho * rho - 1.0) * tau
    if z.real > _EXP_CAP:
        raise OverflowError
    E = Q * cmath.exp(z)
    return rho + sgn * E, 1.0 - sgn * 2.0 * Q * tau * rho * cmath.exp(z)


def _newton(rho: complex, tau: float, Q: float, sgn: float,
            maxit: int = 50, tol: float = 1e-13) -> tuple[complex, bool]:
    """Complex Newton on the characteristic function; the 2x2 real Jacobian
    of (re, im) in (a, b) is exactly the Cauchy-Riemann form of F', so the
    complex step is the analytic-Jacobian Newton step."""
    for _ in range(maxit):
        try:
            f, d = _char_f(rho, tau, Q, sgn)
        except OverflowError:
            return rho, False
        if d == 0:
            return rho, False
        step = f / d
        rho = rho - step
        if abs(step) <= tol * max(1.0, abs(rho)):
            f, _ = _char_f(rho, tau, Q, sgn)
            return rho, abs(f) < 1e-9
    return rho, False


def hopf_omega(Q: float) -> float:
    """Crossing frequency sqrt(Q^4 - 1); imaginary part of the critical eigenvalue."""
    if Q <= 1.0:
        raise ParameterError(f"no delay threshold exists for Q <= 1 (got Q={Q})")
    return math.sqrt(Q ** 4 - 1.0)


def hopf_bracket(Q: float) -> tuple[float, float]:
    """Interval (pi/(2*omega), pi/omega) that brackets the critical delay; hi = 2*lo exactly."""
    lo = math.pi / (2.0 * hopf_omega(Q))
    return lo, 2.0 * lo


def hopf_tau0(Q: float) -> float:
    """Smallest critical delay: root of tan(tau*omega) = -sqrt(Q^2-1)/sqrt(Q^2+1).

    Uses the closed form tau0 = (pi - arctan(sqrt((Q^2-1)/(Q^2+1)))) / omega,
    polished by two Newton steps on the tangent form so the residual sits at
    rounding level even for large Q (where the tangent is steep in tau).
    """
    om = hopf_omega(Q)
    r = math.sqrt((Q * Q - 1.0) / (Q * Q + 1.0))
    tau0 = (math.pi - math.atan(r)) / om
    for _ in range(2):
        th = tau0 * om
        res = math.tan(th) + r
        tau0 -= res / (om * (1.0 + math.tan(th) ** 2))
    return tau0


def hopf_tau0_bisect(Q: float, tol: float = 1e-12) -> float:
    """Critical delay by bracketed bisection; independent cross-check of hopf_tau0."""
    om = hopf_omega(Q)
    r = math.sqrt((Q * Q - 1.0) / (Q * Q + 1.0))
    lo, hi = hopf_bracket(Q)
    # tan(tau*om) runs from -inf to 0 on the bracket; the residual is increasing
    flo = -math.inf
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fmid = math.tan(mid * om) + r
        if fmid < 0.0:
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def crossing_pair(Q: float) -> tuple[float, float]:
    """Intersection (a0, b0) of the circle a^2+b^2 = Q^2 with the hyperbola a^2-b^2 = 1."""
    if Q < 1.0:
        raise ParameterError(f"crossing pair requires Q >= 1 (got Q={Q})")
    return math.sqrt((Q * Q + 1.0) / 2.0), math.sqrt((Q * Q - 1.0) / 2.0)


def crossing_speed(Q: float, tau0: float | None = None) -> float:
    """d Re(lambda) / d tau of the critical pair at the threshold delay.

    Implicit differentiation of the characteristic function at the crossing
    gives  4 Q a0 b0 (a0 sin(theta) - b0 cos(theta)) / (D1^2 + D2^2)  with
    theta = 2 a0 b0 tau0,
    D1 = 1 - 2 Q tau0 (a0 cos(theta) + b0 sin(theta)),
    D2 = 2 Q tau0 (b0 cos(theta) - a0 sin(theta)).
    Positive for every Q > 1: the pair always crosses rightward.
    """
    if tau0 is None:
        tau0 = hopf_tau0(Q)
    a0, b0 = crossing_pair(Q)
    th = 2.0 * a0 * b0 * tau0
    D1 = 1.0 - 2.0 * Q * tau0 * (a0 * math.cos(th) + b0 * math.sin(th))
    D2 = 2.0 * Q * tau0 * (b0 * math.cos(th) - a0 * math.sin(th))
    return 4.0 * Q * a0 * b0 * (a0 * math.sin(th) - b0 * math.cos(th)) / (D1 * D1 + D2 * D2)


@dataclass(frozen=True)
class HopfAnalysis:
    """Threshold summary for a supercritical gain Q > 1."""

    Q: float
    omega: float
    bracket_lo: float
    bracket_hi: float
    tau0: float
    a0: float
    b0: float
    crossing_speed: float

    def as_dict(self) -> dict:
        return {
            "Q": self.Q,
            "omega": self.omega,
            "bracket_lo": self.bracket_lo,
            "bracket_hi": self.bracket_hi,
            "tau0": self.tau0,
            "a0": self.a0,
            "b0": self.b0,
            "crossing_speed": self.crossing_speed,
        }


def hopf_analysis(Q: float) -> HopfAnalysis:
    """Assemble the full threshold record for a gain Q > 1."""
    lo, hi = hopf_bracket(Q)
    tau0 = hopf_tau0(Q)
    a0, b0 = crossing_pair(Q)
    return HopfAnalysis(Q=Q, omega=hopf_omega(Q), bracket_lo=lo, bracket_hi=hi,
                        tau0=tau0, a0=a0, b0=b0, crossing_speed=crossing_speed(Q, tau0))


def _walk(rho: complex, t_from: float, t_to: float, Q: float, sgn: float,
          min_step: float = 1e-6) -> tuple[complex, bool]:
    """Continue a root from t_from to t_to, halving the step on divergence."""
    t = t_from
    while t != t_to:
        step = t_to - t
        nxt = t + step
        cand, ok = _newton(rho, nxt, Q, sgn)
        while not ok and abs(step) > min_step:
            step *= 0.5
            nxt = t + step
            cand, ok = _newton(rho, nxt, Q, sgn)
        if not ok:
            return rho, False
        rho, t = cand, nxt
    return rho, True


def track_rightmost_root(Q: float, tau_grid) -> list[CharRoot]:
    """Continuation of the dominant characteristic root over a delay grid.

    For Q <= 1 the branch is seeded at tau = 0 from rho = -Q (the mirror
    family has +Q) and stays real with lambda_re < 0 for every delay.  For
    Q > 1 that real family keeps lambda_re = rho^2 - 1 > 0 at all delays and
    never meets the imaginary axis, so the delay-induced complex branch is
    tracked instead: it is seeded at the analytic crossing pair (a0, b0) at
    tau0 and continued both ways, and its real part changes sign exactly at
    the threshold.  Points where Newton fails even after step refinement are
    flagged (converged=False) and the continuation restarts from the
    analytic pair.
    """
    grid = np.asarray(tau_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ParameterError("tau_grid must be a nonempty 1-d array")
    if np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ParameterError("tau_grid must be strictly increasing and nonnegative")

    out: list[CharRoot] = []
    if Q <= 1.0 + MARGINAL_TOL:
        rho = complex(-Q, 0.0)
        prev_t = 0.0
        for t in grid:
            rho_t, ok = _walk(rho, prev_t, float(t), Q, +1.0)
            out.append(CharRoot(a=rho_t.real, b=rho_t.imag, tau=float(t), converged=ok))
            if ok:
                rho, prev_t = rho_t, float(t)
        return out

    tau0 = hopf_tau0(Q)
    a0, b0 = crossing_pair(Q)
    seed = complex(a0, b0)
    i0 = int(np.searchsorted(grid, tau0))

    down: list[CharRoot] = []
    rho, prev_t = seed, tau0
    for t in grid[:i0][::-1]:
        rho_t, ok = _walk(rho, prev_t, float(t), Q, +1.0)
        down.append(CharRoot(a=rho_t.real, b=rho_t.imag, tau=float(t), converged=ok))
        if ok:
            rho, prev_t = rho_t, float(t)
        else:
            rho, prev_t = seed, tau0   # restart from the analytic pair
    out.extend(reversed(down))

    rho, prev_t = seed, tau0
    for t in grid[i0:]:
        rho_t, ok = _walk(rho, prev_t, float(t), Q, +1.0)
        out.append(CharRoot(a=rho_t.real, b=rho_t.imag, tau=float(t), converged=ok))
        if ok:
            rho, prev_t = rho_t, float(t)
        else:
            rho, prev_t = seed, tau0
    return out


@dataclass(frozen=True)
class StabilityVerdict:
    """Analytic regime of the equilibrium at given (alpha, m, tau)."""

    regime: str
    tau0: float | None = None


def classify(alpha: float, m: float, tau: float, tol: float = MARGINAL_TOL) -> StabilityVerdict:
    """Classify stability from the gain and the threshold delay.

    Q < 1-tol: stable for every delay.  Q > 1+tol: stable below the critical
    delay, oscillatory above it.  Within the tolerance band of Q = 1, or with
    tau exactly at threshold, the verdict is Marginal.
    """
    c = steady_state_c(alpha, m)
    Q = feedback_gain(alpha, m, c)
    if Q < 1.0 - tol:
        return StabilityVerdict(REGIME_STABLE_ALL)
    if Q <= 1.0 + tol:
        return StabilityVerdict(REGIME_MARGINAL)
    tau0 = hopf_tau0(Q)
    if tau < tau0:
        return StabilityVerdict(REGIME_STABLE_BELOW, tau0)
    if tau > tau0:
        return StabilityVerdict(REGIME_OSCILLATORY, tau0)
    return StabilityVerdict(REGIME_MARGINAL, tau0)
