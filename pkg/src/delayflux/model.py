"""Model parameters, steady states, and the delayed boundary feedback flux.

The dimensionless system lives on the half-line x >= 0:

    q_t = q_xx - q
    q(inf, t) = 0
    q_x(0, t) = -alpha / (1 + q(0, t - tau)^m)
    q(x, 0) = f(x),   q(0, t) = h(t) for t in [-tau, 0]

with alpha > 0 the maximum boundary flux, m > 0 the switch steepness and
tau >= 0 the feedback delay.  The unique equilibrium profile is
q_s(x) = c * exp(-x) where c is the positive root of c + c^(m+1) = alpha,
and the linearization couples boundary perturbations to their delayed
values through the gain Q = m * alpha * c^(m-1) / (1 + c^m)^2.

All functions here are pure; the dataclasses are frozen and safe to share
across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParameterError

__all__ = [
    "PhysicalParams",
    "ModelParams",
    "SteadyState",
    "InitialData",
    "nondimensionalize",
    "steady_state_c",
    "feedback_gain",
    "steady_state",
    "boundary_flux",
    "asymptotic_gain",
    "lower_solution",
    "COMPATIBILITY_TOL",
]

# Absolute tolerance for the h(0) = f(0) compatibility condition.  Violations
# are hard errors: every solver in the package assumes compatible data.
COMPATIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional inputs: diffusivity, clearance, flux scale, threshold, steepness, delay.

    Units are documentation only; nothing in the package carries them at runtime.
    """

    D: float      # diffusivity, length^2/time
    k: float      # clearance rate, 1/time
    A: float      # maximum flux, concentration*length/time
    P0: float     # switch threshold concentration
    m: float      # switch steepness (dimensionless)
    T0: float     # feedback delay, time

    def __post_init__(self):
        for name in ("D", "k", "A", "P0", "m"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if self.T0 < 0:
            raise ParameterError(f"T0 must be nonnegative, got {self.T0}")


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless triple (alpha, m, tau) identifying the system."""

    alpha: float
    m: float
    tau: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not self.m > 0:
            raise ParameterError(f"m must be positive, got {self.m}")
        if self.tau < 0:
            raise ParameterError(f"tau must be nonnegative, got {self.tau}")


def nondimensionalize(p: PhysicalParams) -> ModelParams:
    """Map dimensional parameters to (alpha, m, tau).

    alpha = A / (P0 * sqrt(D * k)); tau = k * T0; m carries over.  Lengths are
    measured in sqrt(D/k), times in 1/k, concentrations in P0.
    """
    return ModelParams(alpha=p.A / (p.P0 * math.sqrt(p.D * p.k)), m=p.m, tau=p.k * p.T0)


def steady_state_c(alpha: float, m: float) -> float:
    """Positive root of c + c^(m+1) = alpha.

    The map c -> c + c^(m+1) is strictly increasing on [0, alpha] with range
    [0, alpha + alpha^(m+1)], so the root exists, is unique, and lies in
    (0, alpha).  Bracketed bisection down to width 1e-8 followed by five
    Newton steps pins it to machine accuracy.
    """
    if not alpha > 0 or not m > 0:
        raise ParameterError(f"need alpha > 0 and m > 0, got alpha={alpha}, m={m}")
    lo, hi = 0.0, alpha
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        if mid + mid ** (m + 1.0) < alpha:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    for _ in range(5):
        r = c + c ** (m + 1.0) - alpha
        c -= r / (1.0 + (m + 1.0) * c ** m)
    return c


def feedback_gain(alpha: float, m: float, c: float) -> float:
    """Linearized boundary gain Q = m*alpha*c^(m-1) / (1 + c^m)^2 at the steady root c."""
    return m * alpha * c ** (m - 1.0) / (1.0 + c ** m) ** 2


@dataclass(frozen=True)
class SteadyState:
    """Equilibrium root c, its gain Q, and the profile c*exp(-x)."""

    c: float
    Q: float

    def profile(self, x):
        return self.c * np.exp(-np.asarray(x, dtype=float))


def steady_state(params: ModelParams) -> SteadyState:
    """Solve for the equilibrium of the given parameters."""
    c = steady_state_c(params.alpha, params.m)
    return SteadyState(c=c, Q=feedback_gain(params.alpha, params.m, c))


def boundary_flux(q0, alpha: float, m: float):
    """Feedback flux g(q0) = -alpha / (1 + q0^m); always in [-alpha, 0).

    At the steady root, c*(1 + c^m) = alpha forces g(c) = -c, which is the
    slope of the equilibrium profile at the membrane.  Accepts scalars or
    arrays of nonnegative boundary values.
    """
    q0 = np.asarray(q0, dtype=float)
    if np.any(q0 < 0):
        raise ParameterError("boundary value must be nonnegative")
    out = -alpha / (1.0 + q0 ** m)
    return float(out) if out.ndim == 0 else out


def asymptotic_gain(alpha: float, m: float) -> float:
    """Large-steepness estimate of the gain Q.

    For alpha > 1 the root approaches 1 from above and Q ~ m*(alpha-1)/alpha,
    growing without bound; for alpha < 1 the root approaches alpha and
    Q ~ m*alpha^m/(1+alpha^m)^2, vanishing as m grows.  Meaningful for m >> 1;
    defined for all m > 0.
    """
    if not alpha > 0 or not m > 0:
        raise ParameterError(f"need alpha > 0 and m > 0, got alpha={alpha}, m={m}")
    if alpha > 1.0:
        return m * (alpha - 1.0) / alpha
    am = alpha ** m
    return m * am / (1.0 + am) ** 2


# Admissible lower-profile parameters require gamma >= 2, beta > 1 and
# zeta >= sqrt(beta*gamma*(gamma-1) + 1); equality is allowed.
_ZETA_SLACK = 1e-12


def lower_solution(x, alpha: float, m: float, zeta: float, beta: float, gamma: float):
    """Sub-equilibrium profile c * exp(-zeta*x - beta*x^gamma).

    This is the canonical positive minorant used to seed the monotone
    iteration: it sits below every admissible initial datum, equals c at the
    membrane, and decays super-exponentially.
    """
    if gamma < 2.0:
        raise ParameterError(f"gamma must be >= 2, got {gamma}")
    if beta <= 1.0:
        raise ParameterError(f"beta must be > 1, got {beta}")
    zeta_min = math.sqrt(beta * gamma * (gamma - 1.0) + 1.0)
    if zeta < zeta_min - _ZETA_SLACK:
        raise ParameterError(f"zeta must be >= sqrt(beta*gamma*(gamma-1)+1) = {zeta_min}, got {zeta}")
    c = steady_state_c(alpha, m)
    x = np.asarray(x, dtype=float)
    out = c * np.exp(-zeta * x - beta * x ** gamma)
    return float(out) if out.ndim == 0 else out


class InitialData:
    """Initial profile f on [0, inf) and boundary history h on [-tau, 0].

    Both are exposed as vectorized callables regardless of how they were
    constructed (closed form or sampled CSV columns with linear
    interpolation).  Construction validates nonnegativity, a finite supremum
    for f, and the compatibility condition h(0) = f(0) to 1e-12.
    """

    def __init__(self, f: Callable, h: Callable, tau: float, sup_f: float | None = None,
                 probe_span: float = 80.0):
        self.tau = float(tau)
        self.f = f
        self.h = h
        xs = np.linspace(0.0, probe_span, 4001)
        fx = np.asarray(f(xs), dtype=float)
        if fx.shape != xs.shape:
            raise ParameterError("f must map an array of x values to an equal-length array")
        if not np.all(np.isfinite(fx)):
            raise ParameterError("f must be finite on [0, inf)")
        if np.any(fx < 0):
            raise ParameterError("f must be nonnegative")
        if tau > 0:
            ts = np.linspace(-tau, 0.0, 1001)
            ht = np.asarray(h(ts), dtype=float)
            if not np.all(np.isfinite(ht)) or np.any(ht < 0):
                raise ParameterError("h must be finite and nonnegative on [-tau, 0]")
        h0 = float(np.asarray(h(np.array([0.0])))[0])
        f0 = float(fx[0])
        if abs(h0 - f0) > COMPATIBILITY_TOL:
            raise ParameterError(
                f"incompatible data: |h(0) - f(0)| = {abs(h0 - f0):.3e} exceeds {COMPATIBILITY_TOL}")
        # sup over the probe grid; pass sup_f explicitly for data peaking beyond it
        self.sup_f = float(fx.max()) if sup_f is None else float(sup_f)

    @classmethod
    def from_samples(cls, x: np.ndarray, fx: np.ndarray, t: np.ndarray | None,
                     ht: np.ndarray | None, tau: float) -> "InitialData":
        """Build from sampled columns; f extends with its last value, h must cover [-tau, 0]."""
        x = np.asarray(x, dtype=float)
        fx = np.asarray(fx, dtype=float)
        if x.ndim != 1 or x.shape != fx.shape or x.size < 2:
            raise ParameterError("f samples need matching 1-d x and f columns with >= 2 rows")
        if x[0] != 0.0 or np.any(np.diff(x) <= 0):
            raise ParameterError("x column must be strictly increasing and start at 0")
        f = lambda xi: np.interp(np.asarray(xi, dtype=float), x, fx)
        if tau > 0:
            if t is None or ht is None:
                raise ParameterError("tau > 0 requires boundary history samples")
            t = np.asarray(t, dtype=float)
            ht = np.asarray(ht, dtype=float)
            if t.ndim != 1 or t.shape != ht.shape or t.size < 2:
                raise ParameterError("h samples need matching 1-d t and h columns with >= 2 rows")
            if np.any(np.diff(t) <= 0):
                raise ParameterError("t column must be strictly increasing")
            if t[0] > -tau + 1e-9 or abs(t[-1]) > 1e-9:
                raise ParameterError(
                    f"history must cover [-tau, 0] = [{-tau}, 0], got [{t[0]}, {t[-1]}]")
            h = lambda ti: np.interp(np.asarray(ti, dtype=float), t, ht)
        else:
            h = lambda ti: np.full_like(np.asarray(ti, dtype=float), fx[0])
        return cls(f, h, tau)

    @classmethod
    def steady(cls, params: ModelParams, bump: float = 0.0) -> "InitialData":
        """Equilibrium data c*e^{-x}, optionally perturbed by bump*x*e^{-x}; constant history."""
        c = steady_state_c(params.alpha, params.m)
        f = lambda x: np.exp(-np.asarray(x, dtype=float)) * (c + bump * np.asarray(x, dtype=float))
        h = lambda t: np.full_like(np.asarray(t, dtype=float), c)
        return cls(f, h, params.tau)

    @classmethod
    def scaled_steady(cls, params: ModelParams, scale: float) -> "InitialData":
        """Data scale*c*e^{-x} with matching constant history scale*c."""
        c = steady_state_c(params.alpha, params.m)
        f = lambda x: scale * c * np.exp(-np.asarray(x, dtype=float))
        h = lambda t: np.full_like(np.asarray(t, dtype=float), scale * c)
        return cls(f, h, params.tau)
