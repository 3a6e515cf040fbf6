"""Discrete spinor states and the scalar quantities derived from them.

A state is a real vector ``[u1R, u1I, u2R, u2I]`` of interior
coefficients.  Complex scalars act on it through :func:`times_i` and
:func:`rotate`.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import discretization, space_operators
from .errors import NotNormalized, SpaceMismatch

NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpinorField:
    """Two-component complex field in the real block layout."""

    space: object
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (4 * self.space.N,):
            raise SpaceMismatch(f"expected {4 * self.space.N} coefficients, got {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self):
        return self.space.N

    def component(self, k):
        """Complex interior coefficients of component ``k`` (1 or 2)."""
        N = self.N
        c = self.coeffs
        off = 2 * (k - 1) * N
        return c[off:off + N] + 1j * c[off + N:off + 2 * N]

    @classmethod
    def from_complex(cls, space, psi1, psi2):
        psi1 = np.asarray(psi1, dtype=complex)
        psi2 = np.asarray(psi2, dtype=complex)
        return cls(space, np.concatenate([psi1.real, psi1.imag, psi2.real, psi2.imag]))

    def with_coeffs(self, coeffs):
        return SpinorField(self.space, coeffs)


@dataclass(frozen=True)
class Eigenpair:
    """Ground state approximation and its eigenvalue."""

    state: SpinorField
    eigenvalue: float
    energy: float


@dataclass
class IterationRecord:
    """One row of an iteration history."""

    iter: int
    method: str
    energy: float
    lam: float
    residual: float
    sigma: float = float("nan")
    tau: float = float("nan")
    wall_ms: float = 0.0


def _c(u):
    return np.asarray(getattr(u, "coeffs", u), dtype=float)


def _space(u, space):
    s = getattr(u, "space", None) or space
    if s is None:
        raise SpaceMismatch("a space is required for raw coefficient vectors")
    return s


def mass(u, space=None):
    """Squared L2 norm ``|u1|^2 + |u2|^2`` integrated over the domain."""
    return space_operators(_space(u, space)).mass(_c(u))


def normalize(u, space=None):
    """Return ``u`` scaled to unit mass."""
    s = _space(u, space)
    m = mass(u, s)
    if not m > 0:
        raise ValueError("cannot normalize the zero state")
    return SpinorField(s, _c(u) / np.sqrt(m))


def check_normalized(u, space=None, tol=NORMALIZATION_TOL):
    m = mass(u, space)
    if abs(m - 1.0) > tol:
        raise NotNormalized(f"state has mass {m:.17g}, expected 1")


def initial_state(space):
    """Default starting guess, nodally interpolated and normalized.

    ``u1 = (x-1)^2 (y-1)^2 exp(-i (x^2+y^2)/2) / 2`` and ``u2 = 2 u1``.
    """
    def psi(x, y):
        return (x - 1) ** 2 * (y - 1) ** 2 * np.exp(-0.5j * (x ** 2 + y ** 2))

    p = space.interpolate(psi)
    return normalize(SpinorField.from_complex(space, 0.5 * p, p))


def energy(u, params, space=None):
    """Discrete GP energy of ``u``."""
    s = _space(u, space)
    return discretization(s, params).energy(_c(u))


def rayleigh_lambda(u, params, space=None, tol=NORMALIZATION_TOL):
    """Eigenvalue estimate ``<A(u) u, u>`` of a normalized state."""
    s = _space(u, space)
    check_normalized(u, s, tol)
    c = _c(u)
    return float(c @ (discretization(s, params).assemble_A(c) @ c))


def residual_norm(u, params, space=None, lam=None):
    """Dual norm ``||A(u) u - lam M u||_{M^-1}`` of the eigen-residual."""
    s = _space(u, space)
    d = discretization(s, params)
    c = _c(u)
    Au = d.assemble_A(c) @ c
    Mu = d.M_padded @ c
    if lam is None:
        lam = float(c @ Au) / float(c @ Mu)
    return dual_residual(s, Au, Mu, lam)


def dual_residual(space, Au, Mu, lam):
    """``||Au - lam Mu||_{M^-1}`` from precomputed products."""
    r = Au - lam * Mu
    N = space.N
    lu = _mass_lu(space)
    z = lu.solve(r.reshape(4, N).T).T.ravel()
    return float(np.sqrt(max(r @ z, 0.0)))


_MASS_LU = {}


def _mass_lu(space):
    key = id(space_operators(space))
    if key not in _MASS_LU:
        _MASS_LU.clear()
        _MASS_LU[key] = spla.splu(space_operators(space).M.tocsc())
    return _MASS_LU[key]


def times_i(c):
    """Coefficients of ``i u``."""
    c = _c(c)
    N = len(c) // 4
    u1r, u1i, u2r, u2i = c.reshape(4, N)
    return np.concatenate([-u1i, u1r, -u2i, u2r])


def rotate(c, phase):
    """Coefficients of ``exp(i phase) u``."""
    c = _c(c)
    return np.cos(phase) * c + np.sin(phase) * times_i(c)


def complex_inner(a, b, matrix):
    """``int a conj(b)`` summed over both components, with ``matrix`` the padded Gram matrix."""
    a, b = _c(a), _c(b)
    Mb = matrix @ b
    return complex(a @ Mb, times_i(a) @ Mb * -1.0)


def quotient_distance(u, v, space=None):
    """H1 distance of ``v`` to the phase orbit ``{exp(i w) u}``."""
    s = _space(u, space)
    K = space_operators(s).H1_matrix
    cu, cv = _c(u), _c(v)
    Kv = K @ cv
    a = float(cu @ Kv)
    b = float(times_i(cu) @ Kv)
    w = np.arctan2(b, a)
    diff = cv - rotate(cu, w)
    return float(np.sqrt(max(diff @ (K @ diff), 0.0)))


def density(u, space=None):
    """Nodal densities ``|u1|^2`` and ``|u2|^2`` on all nodes (boundary included)."""
    s = _space(u, space)
    f = s.extend(_c(u).reshape(4, s.N).T)
    return f[:, 0] ** 2 + f[:, 1] ** 2, f[:, 2] ** 2 + f[:, 3] ** 2
