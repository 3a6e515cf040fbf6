"""Sparse direct solves with singularity detection and a residual check."""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import LinearSolveError, SingularMatrix

PIVOT_RTOL = 1e-14
RESIDUAL_RTOL = 1e-10


def _norm1(A):
    return float(abs(A).sum(axis=0).max()) if A.shape[0] else 0.0


@dataclass(eq=False)
class Factorization:
    """Sparse LU factors of a square matrix.

    ``solve`` checks the normwise backward error
    ``||A x - b|| <= rtol (||A|| ||x|| + ||b||)`` (infinity norms), applies
    one step of iterative refinement if needed and raises
    :class:`LinearSolveError` if the check still fails.
    """

    matrix: sp.csc_matrix = field(repr=False)
    lu: object = field(repr=False)
    norm_inf: float
    min_pivot: float
    rtol: float = RESIDUAL_RTOL

    @property
    def shape(self):
        return self.matrix.shape

    def _backward_error(self, x, b):
        r = self.matrix @ x - b
        scale = self.norm_inf * np.abs(x).max(axis=0) + np.abs(b).max(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        return np.abs(r).max(axis=0) / scale, r

    def solve(self, b, check=True):
        b = np.asarray(b, dtype=float)
        x = self.lu.solve(b)
        if not check:
            return x
        err, r = self._backward_error(x, b)
        if np.all(err <= self.rtol):
            return x
        x = x - self.lu.solve(r)
        err, _ = self._backward_error(x, b)
        if not np.all(err <= self.rtol):
            raise LinearSolveError(f"backward error {np.max(err):.3e} exceeds {self.rtol:.1e}")
        return x


def factorize(A, symmetric=False, pivot_rtol=PIVOT_RTOL, rtol=RESIDUAL_RTOL):
    """LU factorization of the sparse square matrix ``A``.

    ``symmetric=True`` orders on the pattern of ``A + A^T`` and prefers
    diagonal pivots, which roughly halves the fill for our operators.
    Raises :class:`SingularMatrix` if the factorization breaks down or the
    smallest pivot is below ``pivot_rtol * ||A||_1``.
    """
    A = sp.csc_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got {A.shape}")
    n1 = _norm1(A)
    try:
        if symmetric:
            lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.1,
                           options={"SymmetricMode": True})
        else:
            lu = spla.splu(A)
    except RuntimeError as exc:
        if "singular" in str(exc).lower():
            raise SingularMatrix(str(exc), pivot=0.0) from exc
        raise
    piv = np.abs(lu.U.diagonal())
    min_pivot = float(piv.min()) if len(piv) else 0.0
    if not np.all(np.isfinite(piv)) or min_pivot < pivot_rtol * n1:
        raise SingularMatrix(f"pivot {min_pivot:.3e} below {pivot_rtol:.0e} * ||A||_1 = {pivot_rtol * n1:.3e}",
                             pivot=min_pivot)
    norm_inf = float(abs(A).sum(axis=1).max())
    return Factorization(A, lu, norm_inf, min_pivot, rtol)


def solve(A, b, **kwargs):
    """One-shot ``A x = b``."""
    return factorize(A, **kwargs).solve(b)


def solve_many(A, B, **kwargs):
    """Solve for all columns of ``B`` with a single factorization."""
    return factorize(A, **kwargs).solve(np.asarray(B, dtype=float))


class LaggedSolver:
    """Solves a slowly varying SPD sequence ``A_k x = b``.

    Runs conjugate gradients preconditioned by the LU factors of an
    earlier matrix of the sequence and refactorizes whenever CG needs
    more than ``max_cg`` iterations.  Every returned solution passes the
    same backward-error test as :meth:`Factorization.solve`.
    """

    def __init__(self, max_cg=12, rtol=RESIDUAL_RTOL):
        self.max_cg = max_cg
        self.rtol = rtol
        self.factor = None
        self.refactorizations = 0
        self.last_cg_iterations = 0

    def _refactor(self, A):
        self.factor = factorize(A, symmetric=True, rtol=self.rtol)
        self.refactorizations += 1

    def solve(self, A, b):
        A = sp.csr_matrix(A)
        b = np.asarray(b, dtype=float)
        if self.factor is None or self.factor.shape != A.shape:
            self._refactor(A)
        x = self._pcg(A, b)
        if x is None:
            self._refactor(A)
            x = self._pcg(A, b)
            if x is None:
                x = self.factor.solve(b)
        return x

    def _pcg(self, A, b):
        lu = self.factor.lu
        norm_a = float(abs(A).sum(axis=1).max())
        bnorm = np.abs(b).max()
        x = lu.solve(b)
        r = b - A @ x
        z = lu.solve(r)
        p = z.copy()
        rz = float(r @ z)
        for k in range(self.max_cg + 1):
            if np.abs(r).max() <= self.rtol * (norm_a * np.abs(x).max() + bnorm):
                self.last_cg_iterations = k
                return x
            if k == self.max_cg or rz <= 0:
                break
            Ap = A @ p
            alpha = rz / float(p @ Ap)
            x += alpha * p
            r -= alpha * Ap
            z = lu.solve(r)
            rz_new = float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        return None
