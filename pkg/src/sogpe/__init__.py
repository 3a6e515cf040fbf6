"""Finite element ground states of spin-orbit coupled two-component condensates.

Two iterations share one discretization: the damped A-method (a preconditioned
energy descent) and the shifted J-inverse iteration, which converges locally at
a rate set by the chosen spectral shift.
"""

from .a_method import AStepConfig, StoppingRule, a_step_damped, a_step_plain, run_a_method
from .assembly import PhysicsParams, assemble_A, assemble_hessian, assemble_J_parts, discretization
from .errors import (ConfigurationError, IterationAbort, LinearSolveError, NotNormalized,
                     ShiftOnSpectrum, SingularMatrix, SogpeError, SpaceMismatch)
from .j_method import ShiftPolicy, j_step, j_step_phase_locked, run_j_method, shifted_solve
from .kernels import BACKEND as KERNEL_BACKEND
from .mesh import FeSpace, RectDomain, build_space, interpolate_p1_to_p2
from .spectral import SpectralReport, j_gap, projected_hessian_eigs, spectral_report
from .state import (Eigenpair, IterationRecord, SpinorField, energy, initial_state, mass,
                    normalize, quotient_distance, rayleigh_lambda, residual_norm)

__version__ = "0.1.0"

__all__ = [
    "AStepConfig", "StoppingRule", "a_step_damped", "a_step_plain", "run_a_method",
    "PhysicsParams", "assemble_A", "assemble_hessian", "assemble_J_parts", "discretization",
    "ConfigurationError", "IterationAbort", "LinearSolveError", "NotNormalized",
    "ShiftOnSpectrum", "SingularMatrix", "SogpeError", "SpaceMismatch",
    "ShiftPolicy", "j_step", "j_step_phase_locked", "run_j_method", "shifted_solve",
    "KERNEL_BACKEND", "FeSpace", "RectDomain", "build_space", "interpolate_p1_to_p2",
    "SpectralReport", "j_gap", "projected_hessian_eigs", "spectral_report",
    "Eigenpair", "IterationRecord", "SpinorField", "energy", "initial_state", "mass",
    "normalize", "quotient_distance", "rayleigh_lambda", "residual_norm",
]
