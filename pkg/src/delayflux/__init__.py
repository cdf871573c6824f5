"""Reaction-diffusion on the half-line with a delayed nonlinear boundary flux.

Submodules:
    model        parameters, steady states, feedback flux, initial data
    spectral     characteristic roots, delay threshold, stability classification
    fdsolver     finite-difference time-domain solver
    greens       integral representation, monotone iteration, rung solver
    diagnostics  oscillation classification and stability maps
    cli          command-line interface
"""
from .errors import DelayFluxError, NumericalError, ParameterError
from .model import (InitialData, ModelParams, PhysicalParams, SteadyState,
                    asymptotic_gain, boundary_flux, feedback_gain, lower_solution,
                    nondimensionalize, steady_state, steady_state_c)
from .spectral import (CharRoot, HopfAnalysis, StabilityVerdict, char_residual,
                       classify, crossing_pair, crossing_speed, hopf_analysis,
                       hopf_bracket, hopf_omega, hopf_tau0, track_rightmost_root)
from .fdsolver import Grid, Trajectory, convergence_study, default_grid, simulate
from .greens import (GreensLattice, IterationState, boundary_term, homogeneous_term,
                     kernel_eval, ladder_solve, monotone_iterate, solve_linear_window)
from .diagnostics import (OscillationReport, SweepRecord, analyze, period_check,
                          stability_sweep, sweep_points)

__version__ = "0.1.0"

__all__ = [
    "DelayFluxError", "NumericalError", "ParameterError",
    "InitialData", "ModelParams", "PhysicalParams", "SteadyState",
    "asymptotic_gain", "boundary_flux", "feedback_gain", "lower_solution",
    "nondimensionalize", "steady_state", "steady_state_c",
    "CharRoot", "HopfAnalysis", "StabilityVerdict", "char_residual", "classify",
    "crossing_pair", "crossing_speed", "hopf_analysis", "hopf_bracket",
    "hopf_omega", "hopf_tau0", "track_rightmost_root",
    "Grid", "Trajectory", "convergence_study", "default_grid", "simulate",
    "GreensLattice", "IterationState", "boundary_term", "homogeneous_term",
    "kernel_eval", "ladder_solve", "monotone_iterate", "solve_linear_window",
    "OscillationReport", "SweepRecord", "analyze", "period_check",
    "stability_sweep", "sweep_points",
]
