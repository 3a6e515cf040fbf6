"""Shifted J-inverse iteration with rank-two Woodbury solves."""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .a_method import StoppingRule
from .assembly import discretization
from .errors import ConfigurationError, IterationAbort, ShiftOnSpectrum, SingularMatrix
from .linsolve import factorize
from .state import (Eigenpair, IterationRecord, SpinorField, check_normalized, complex_inner,
                    dual_residual, normalize, rotate)

log = logging.getLogger(__name__)

WOODBURY_RTOL = 1e-9
DIVERGENCE_INCREASE = 1e-6
DIVERGENCE_STEPS = 3
SHIFT_PERTURBATION = 1e-8


@dataclass(frozen=True)
class ShiftPolicy:
    """Spectral shift selection.

    ``mode="fixed"`` uses ``sigma`` throughout.  ``mode="adaptive"`` uses
    the Rayleigh quotient of the current iterate for the first
    ``freeze_after`` steps and keeps the last value afterwards;
    ``freeze_after=None`` never freezes.
    """

    mode: str = "adaptive"
    sigma: float = None
    freeze_after: int = 2

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise ConfigurationError(f"unknown shift mode {self.mode!r}")
        if self.mode == "fixed" and (self.sigma is None or not np.isfinite(self.sigma)):
            raise ConfigurationError("a fixed shift policy needs a finite sigma")
        if self.freeze_after is not None and self.freeze_after < 0:
            raise ConfigurationError("freeze_after must be nonnegative")

    @classmethod
    def fixed(cls, sigma):
        return cls(mode="fixed", sigma=float(sigma))

    @classmethod
    def adaptive(cls, freeze_after=2):
        return cls(mode="adaptive", freeze_after=freeze_after)


@dataclass(frozen=True, eq=False)
class WoodburySolve:
    """Intermediate results of ``(C + U V)^{-1} M u``.

    ``residual`` is ``||(C + U V) y - M u|| / ||M u||`` for the final
    ``y = z1 - Z z2``.
    """

    z1: np.ndarray = field(repr=False)
    Z: np.ndarray = field(repr=False)
    z2: np.ndarray
    residual: float

    @property
    def y(self):
        return self.z1 - self.Z @ self.z2


class ShiftedJ:
    """Factorized ``J(u) - sigma M = C + U V`` applying its inverse by Woodbury.

    Raises :class:`ShiftOnSpectrum` if ``C = B - sigma M`` or the 2x2
    capacitance matrix is numerically singular.
    """

    def __init__(self, u, params, sigma):
        d = discretization(u.space, params)
        self.sigma = sigma
        self.C, self.factors = d.assemble_J_parts(u.coeffs, sigma)
        try:
            self.lu = factorize(self.C, symmetric=True)
        except SingularMatrix as exc:
            raise ShiftOnSpectrum(f"shift {sigma!r} hits the spectrum: {exc}", sigma) from exc
        f = self.factors
        self.Z = self.lu.solve(f.U)
        self.cap = np.eye(2) + f.V @ self.Z
        if not np.all(np.isfinite(self.cap)) or np.linalg.cond(self.cap) > 1e14:
            raise ShiftOnSpectrum(f"singular capacitance matrix at shift {sigma!r}", sigma)

    def matvec(self, x):
        return self.C @ x + self.factors.apply(x)

    def solve(self, b):
        """Return the :class:`WoodburySolve` of ``(C + U V) y = b``."""
        z1 = self.lu.solve(b)
        z2 = np.linalg.solve(self.cap, self.factors.V @ z1)
        y = z1 - self.Z @ z2
        rel = float(np.linalg.norm(self.matvec(y) - b) / np.linalg.norm(b))
        if rel > WOODBURY_RTOL:
            # expected close to the spectrum, where |y| blows up
            log.debug("Woodbury residual %.3e at sigma=%r (|y|=%.3e)", rel, self.sigma,
                      np.linalg.norm(y))
        return WoodburySolve(z1, self.Z, z2, rel)


def shifted_solve(u, params, sigma, rhs=None):
    """Solve ``(J(u) - sigma M) y = rhs`` (default ``M u``) by the Woodbury formula."""
    op = ShiftedJ(u, params, sigma)
    b = discretization(u.space, params).M_padded @ u.coeffs if rhs is None else rhs
    return op.solve(b)


def j_step(u, params, sigma):
    """One shifted J-step; returns ``(new_state, WoodburySolve)``.

    The sign of the update is chosen so that ``y^T M u >= 0``.
    """
    check_normalized(u)
    ws = shifted_solve(u, params, sigma)
    y = ws.y
    if float(y @ (discretization(u.space, params).M_padded @ u.coeffs)) < 0:
        y = -y
    return normalize(SpinorField(u.space, y)), ws


def phase_factor(u_ref, y, mass_matrix):
    """Unit complex number ``corr / |corr|`` with ``corr = int u_ref conj(y)`` (1 if zero)."""
    corr = complex_inner(u_ref, y, mass_matrix)
    if corr == 0:
        return 1.0 + 0.0j
    return corr / abs(corr)


def j_step_phase_locked(u_ref, u, params, sigma):
    """J-step whose output phase is aligned with the reference state ``u_ref``."""
    check_normalized(u)
    d = discretization(u.space, params)
    y = shifted_solve(u, params, sigma).y
    theta = phase_factor(u_ref.coeffs, y, d.M_padded)
    out = normalize(SpinorField(u.space, y))
    return SpinorField(u.space, rotate(out.coeffs, np.angle(theta)))


def _rayleigh(d, c):
    A = d.assemble_A(c)
    Au = A @ c
    return float(c @ Au), Au


def run_j_method(u0, params, policy=ShiftPolicy(), stop=StoppingRule(), method="J",
                 callback=None, residual_tol=None):
    """Iterate :func:`j_step` from ``u0``.

    Returns ``(Eigenpair, history, converged)``; ``history[0]`` describes
    ``u0``.  Raises :class:`IterationAbort` (carrying the partial history)
    if the shift stays on the spectrum after one perturbation or the
    energy rises by more than 1e-6 in three consecutive steps.
    """
    check_normalized(u0)
    d = discretization(u0.space, params)
    u = u0
    e = d.energy(u.coeffs)
    lam, Au = _rayleigh(d, u.coeffs)
    res = dual_residual(u.space, Au, d.M_padded @ u.coeffs, lam)
    history = [IterationRecord(0, method, e, lam, res)]
    sigma = policy.sigma if policy.mode == "fixed" else lam
    rises = 0
    converged = False
    for n in range(1, stop.max_iters + 1):
        t0 = time.perf_counter()
        if policy.mode == "adaptive" and (policy.freeze_after is None or n <= max(policy.freeze_after, 1)):
            sigma = lam
        try:
            try:
                u_new, ws = j_step(u, params, sigma)
            except ShiftOnSpectrum:
                sigma = sigma * (1.0 + SHIFT_PERTURBATION)
                log.warning("shift on the spectrum, retrying with sigma=%r", sigma)
                u_new, ws = j_step(u, params, sigma)
        except ShiftOnSpectrum as exc:
            raise IterationAbort(f"J-iteration {n}: {exc}", history, u) from exc
        u = u_new
        e_new = d.energy(u.coeffs)
        lam, Au = _rayleigh(d, u.coeffs)
        res = dual_residual(u.space, Au, d.M_padded @ u.coeffs, lam)
        rec = IterationRecord(n, method, e_new, lam, res, sigma=sigma,
                              wall_ms=1e3 * (time.perf_counter() - t0))
        history.append(rec)
        if callback is not None:
            callback(rec, u)
        if not np.isfinite(e_new):
            raise IterationAbort(f"J-iteration {n}: non-finite energy", history, u)
        rises = rises + 1 if e_new - e > DIVERGENCE_INCREASE else 0
        if rises >= DIVERGENCE_STEPS:
            raise IterationAbort(f"J-iteration {n}: energy increased in {rises} consecutive steps",
                                 history, u)
        done = stop.reached(e, e_new) or (residual_tol is not None and res < residual_tol)
        e = e_new
        if done:
            converged = True
            break
    if not converged:
        log.warning("J-method stopped at the iteration cap (%d)", stop.max_iters)
    return Eigenpair(u, lam, e), history, converged
