"""Spectra near the ground state: tangent Hessian and shifted J-operator."""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import discretization
from .errors import SogpeError
from .j_method import ShiftedJ
from .linsolve import factorize
from .state import dual_residual, times_i

log = logging.getLogger(__name__)

CONVERGED_RESIDUAL = 1e-6


@dataclass(frozen=True)
class SpectralReport:
    """Spectral data at a converged state.

    ``predicted_rate`` is ``|lam - sigma| / |mu0 - sigma|``.
    """

    lam: float
    hessian_smallest: tuple
    sigma: float = float("nan")
    mu0: complex = float("nan")
    predicted_rate: float = float("nan")
    notes: tuple = field(default=())

    def to_dict(self):
        mu = complex(self.mu0)
        return {
            "lambda": self.lam,
            "hessian_smallest": list(self.hessian_smallest),
            "sigma": self.sigma,
            "mu0": mu.real if mu.imag == 0 else [mu.real, mu.imag],
            "predicted_rate": self.predicted_rate,
            "notes": list(self.notes),
        }


def _state(u):
    return getattr(u, "state", u)


def _check_converged(u, params, tol):
    d = discretization(u.space, params)
    c = u.coeffs
    Au = d.assemble_A(c) @ c
    Mu = d.M_padded @ c
    lam = float(c @ Au)
    res = dual_residual(u.space, Au, Mu, lam)
    if tol is not None and res > tol:
        raise SogpeError(f"state is not converged (residual {res:.3e} > {tol:.1e})")
    return d, lam


def projected_hessian_eigs(u, params, k=3, shift=None, tol=0.0, residual_tol=CONVERGED_RESIDUAL):
    """``k`` smallest eigenvalues of ``H v = mu M v`` on ``{v : v^T M u = 0}``.

    Shift-invert Lanczos (ARPACK) where the inverse is the bordered solve
    ``[[H - s M, M u], [u^T M, 0]]``, which keeps every iterate in the
    tangent space.  The default shift sits just below the eigenvalue.
    """
    u = _state(u)
    d, lam = _check_converged(u, params, residual_tol)
    H = d.assemble_hessian(u.coeffs)
    M = d.M_padded
    Mu = M @ u.coeffs
    s = lam - 1e-2 * max(1.0, abs(lam)) if shift is None else shift
    n = H.shape[0]
    K = sp.bmat([[H - s * M, sp.csr_matrix(Mu[:, None])],
                 [sp.csr_matrix(Mu[None, :]), None]], format="csc")
    lu = factorize(K, symmetric=True)

    def inv(b):
        return lu.solve(np.append(b, 0.0), check=False)[:n]

    op = spla.LinearOperator((n, n), matvec=inv, dtype=float)
    # a random component keeps degenerate eigenspaces reachable from the start vector
    r = np.random.default_rng(0).standard_normal(n)
    r *= np.sqrt(float(u.coeffs @ Mu) / float(r @ (M @ r)))
    v0 = inv(M @ (times_i(u.coeffs) + r))
    vals, vecs = spla.eigsh(H, k=k, M=M, sigma=s, OPinv=op, which="LM", v0=v0, tol=tol)
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    leak = np.abs(Mu @ vecs).max()
    if leak > 1e-8:
        raise SogpeError(f"Hessian eigenvectors left the tangent space (|v^T M u| = {leak:.2e})")
    return vals


def _m_projector(u, M):
    """Projector with kernel span{u, iu}, orthogonal in the M inner product."""
    R = np.column_stack([u, times_i(u)])
    MR = M @ R
    G = np.linalg.inv(R.T @ MR)

    def apply(x):
        return x - R @ (G @ (MR.T @ x))

    return apply, R


def j_gap(u, params, sigma, nev=4, tol=0.0, residual_tol=CONVERGED_RESIDUAL):
    """Eigenvalue ``mu0`` of ``J v = mu M v`` nearest ``sigma`` outside span{u, iu}.

    Runs Arnoldi (ARPACK) on ``P (J - sigma M)^{-1} M P`` where ``P`` has
    kernel span{u, iu}; this span is invariant, so the projected operator
    carries exactly the remaining spectrum.  Returns
    ``(mu0, predicted_rate, lam)``; ``mu0`` is complex if the nearest
    eigenvalue is.
    """
    u = _state(u)
    d, lam = _check_converged(u, params, residual_tol)
    M = d.M_padded
    op = ShiftedJ(u, params, sigma)
    P, _ = _m_projector(u.coeffs, M)
    n = M.shape[0]

    def matvec(x):
        return P(op.solve(M @ P(np.asarray(x, dtype=float).ravel())).y)

    T = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
    v0 = P(np.random.default_rng(0).standard_normal(n))
    theta = spla.eigs(T, k=nev, which="LM", v0=v0, tol=tol, return_eigenvectors=False)
    theta = theta[np.argmax(np.abs(theta))]
    mu0 = sigma + 1.0 / theta
    if abs(mu0.imag) > 1e-8 * max(1.0, abs(mu0)):
        log.warning("nearest J-eigenvalue %s is complex; using its modulus gap", mu0)
        mu0 = complex(mu0)
    else:
        mu0 = float(mu0.real)
    rate = abs(lam - sigma) / abs(mu0 - sigma)
    return mu0, float(rate), lam


def spectral_report(u, params, sigma=None, k=3, residual_tol=CONVERGED_RESIDUAL):
    """Hessian eigenvalues and, if ``sigma`` is given, the J-gap prediction."""
    u = _state(u)
    hs = projected_hessian_eigs(u, params, k=k, residual_tol=residual_tol)
    d, lam = _check_converged(u, params, None)
    notes = []
    if not (abs(hs[0] - lam) <= 1e-6 * abs(lam)):
        notes.append(f"smallest Hessian eigenvalue {hs[0]!r} differs from lambda {lam!r}")
    if k > 1 and not hs[1] > hs[0]:
        notes.append("second Hessian eigenvalue is not larger than the first")
    if sigma is None:
        return SpectralReport(lam, tuple(float(h) for h in hs), notes=tuple(notes))
    mu0, rate, _ = j_gap(u, params, sigma, residual_tol=None)
    return SpectralReport(lam, tuple(float(h) for h in hs), float(sigma), mu0, rate, tuple(notes))
