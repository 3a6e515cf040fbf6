"""Damped A-inverse iteration (energy-adaptive Riemannian gradient descent)."""

import logging
import time
from dataclasses import dataclass

import numpy as np

from .assembly import discretization
from .errors import ConfigurationError, SogpeError
from .linsolve import LaggedSolver, factorize
from .state import IterationRecord, SpinorField, check_normalized, dual_residual, normalize

log = logging.getLogger(__name__)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AStepConfig:
    """Step size selection.

    ``tau_strategy`` is ``"line-search"`` (golden section on
    ``tau_bounds`` with ``line_search_evals`` energy evaluations) or
    ``"fixed"`` (always ``tau``).
    """

    tau_strategy: str = "line-search"
    tau: float = 1.0
    tau_bounds: tuple = (0.01, 1.99)
    line_search_evals: int = 20

    def __post_init__(self):
        lo, hi = self.tau_bounds
        if not 0 < lo <= hi < 2:
            raise ConfigurationError(f"tau_bounds must satisfy 0 < lo <= hi < 2, got {self.tau_bounds}")
        if self.tau_strategy not in ("line-search", "fixed"):
            raise ConfigurationError(f"unknown tau_strategy {self.tau_strategy!r}")
        if self.tau_strategy == "fixed" and not 0 < self.tau < 2:
            raise ConfigurationError(f"fixed tau must lie in (0, 2), got {self.tau}")
        if self.line_search_evals < 3:
            raise ConfigurationError("line_search_evals must be at least 3")


@dataclass(frozen=True)
class StoppingRule:
    """Stop when ``|E(u^n) - E(u^{n+1})| < energy_diff_tol``, after
    ``max_iters`` steps, or when ``|E - reference_energy| < reference_tol``."""

    energy_diff_tol: float = 1e-12
    max_iters: int = 10_000
    reference_energy: float = None
    reference_tol: float = 1e-12

    def __post_init__(self):
        if self.max_iters < 0:
            raise ConfigurationError("max_iters must be nonnegative")

    def reached(self, e_prev, e_new):
        if abs(e_prev - e_new) < self.energy_diff_tol:
            return True
        return self.reference_energy is not None and abs(e_new - self.reference_energy) < self.reference_tol


@dataclass
class AStepResult:
    state: SpinorField
    tau: float
    gamma: float
    energy: float


def _direction(u, params, solver=None, A=None):
    d = discretization(u.space, params)
    c = u.coeffs
    Mu = d.M_padded @ c
    if A is None:
        A = d.assemble_A(c)
    z = solver.solve(A, Mu) if solver is not None else factorize(A, symmetric=True).solve(Mu)
    zMu = float(z @ Mu)
    if not zMu > 0:
        raise SogpeError(f"z^T M u = {zMu:.3e} is not positive; A(u) is not coercive")
    gamma = 1.0 / zMu
    return d, -c + gamma * z, gamma


def a_step_plain(u, params):
    """Undamped step ``normalize(A(u)^{-1} M u)``."""
    check_normalized(u)
    d = discretization(u.space, params)
    c = u.coeffs
    z = factorize(d.assemble_A(c), symmetric=True).solve(d.M_padded @ c)
    return normalize(SpinorField(u.space, z))


def _golden(f, lo, hi, evals, warm=None):
    """Minimize ``f`` on ``[lo, hi]`` with ``evals`` evaluations; also try ``warm``."""
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    best = min((f1, x1), (f2, x2))
    n = 2
    if warm is not None and lo <= warm <= hi:
        best = min(best, (f(warm), warm))
        n += 1
    while n < evals:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
            best = min(best, (f1, x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
            best = min(best, (f2, x2))
        n += 1
    return best[1], best[0]


def a_step_damped(u, params, cfg=AStepConfig(), tau_prev=None, solver=None, A=None):
    """One damped step ``normalize(u + tau d)`` with ``d = -u + gamma A(u)^{-1} M u``.

    Returns an :class:`AStepResult` holding the new state, ``tau``,
    ``gamma`` and the new energy.  ``solver`` (a
    :class:`~sogpe.linsolve.LaggedSolver`) reuses factorizations across
    steps; without it every step factorizes ``A(u)``.  ``A`` may pass a
    precomputed ``A(u)``.
    """
    check_normalized(u)
    d, direction, gamma = _direction(u, params, solver, A)
    c = u.coeffs
    Mu = d.M_padded @ c

    def trial(tau):
        v = c + tau * direction
        return v / np.sqrt(float(v @ (d.M_padded @ v)))

    def e_of(tau):
        return d.energy(trial(tau))

    if cfg.tau_strategy == "fixed":
        tau = cfg.tau
        e = e_of(tau)
    else:
        lo, hi = cfg.tau_bounds
        tau, e = _golden(e_of, lo, hi, cfg.line_search_evals, warm=tau_prev)
    v = trial(tau)
    if float(v @ Mu) < 0:
        v = -v
    return AStepResult(SpinorField(u.space, v), tau, gamma, e)


def run_a_method(u0, params, cfg=AStepConfig(), stop=StoppingRule(), method="A", callback=None):
    """Iterate :func:`a_step_damped` from ``u0``.

    Returns ``(state, history, converged)``.  ``history[0]`` describes
    ``u0``; energies are non-increasing up to rounding.
    """
    check_normalized(u0)
    d = discretization(u0.space, params)

    def measure(u):
        A = d.assemble_A(u.coeffs)
        Au = A @ u.coeffs
        lam = float(u.coeffs @ Au)
        return A, lam, dual_residual(u.space, Au, d.M_padded @ u.coeffs, lam)

    u = u0
    e = d.energy(u.coeffs)
    A, lam, res = measure(u)
    history = [IterationRecord(0, method, e, lam, res)]
    tau = None
    solver = LaggedSolver()
    converged = False
    for n in range(1, stop.max_iters + 1):
        t0 = time.perf_counter()
        step = a_step_damped(u, params, cfg, tau_prev=tau, solver=solver, A=A)
        u, tau = step.state, step.tau
        e_new = step.energy
        A, lam, res = measure(u)
        rec = IterationRecord(n, method, e_new, lam, res,
                              tau=tau, wall_ms=1e3 * (time.perf_counter() - t0))
        history.append(rec)
        if callback is not None:
            callback(rec, u)
        if e_new > e + 1e-12 * max(1.0, abs(e)):
            log.warning("energy increased by %.3e at A-iteration %d", e_new - e, n)
        done = stop.reached(e, e_new)
        e = e_new
        if done:
            converged = True
            break
    if not converged:
        log.warning("A-method stopped at the iteration cap (%d)", stop.max_iters)
    return u, history, converged
