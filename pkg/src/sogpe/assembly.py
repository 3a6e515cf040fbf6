"""Sparse finite element operators of the spin-orbit coupled GP problem.

All state vectors use the real block layout ``[u1R, u1I, u2R, u2I]``
with ``N`` interior coefficients per block.  Bilinear forms are stored
with rows indexing the test function, i.e. ``<T v, w> = w @ T @ v``.

The N x N blocks (stiffness, mass, potentials, x1-derivative and all
weighted masses) share one sparsity pattern, so sums of blocks are sums
of their CSR data arrays.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import ConfigurationError, SpaceMismatch
from .mesh import shape_functions
from .quadrature import triangle_rule

CONSTANT_DEGREE = 4
WEIGHTED_DEGREE = 8
FIELD_NAMES = ("u1R", "u1I", "u2R", "u2I")


@dataclass(frozen=True)
class PhysicsParams:
    """Physical parameters.

    ``extra_potential`` is ``None``, a callable ``f(x, y)`` applied to both
    components, or a pair of such callables.
    """

    delta: float = 0.0
    omega: float = 0.0
    k0: float = 0.0
    beta11: float = 0.0
    beta12: float = 0.0
    beta22: float = 0.0
    potential_shift_enabled: bool = True
    extra_potential: object = None

    def __post_init__(self):
        for name in ("beta11", "beta12", "beta22"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be nonnegative (repulsive interactions)")
        for name in ("delta", "omega", "k0", "beta11", "beta12", "beta22"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")

    @property
    def potential_shift(self):
        """Constant added to both trapping potentials to make A(u) coercive."""
        if not self.potential_shift_enabled:
            return 0.0
        return 0.5 * (abs(self.delta) + abs(self.omega) + 2.0 * self.k0 ** 2)

    @property
    def linear(self):
        return self.beta11 == 0 and self.beta12 == 0 and self.beta22 == 0

    def potential(self, component, x, y):
        """Trapping potential of ``component`` (1 or 2) at points ``(x, y)``."""
        v = np.full(np.shape(x), self.potential_shift, dtype=float)
        extra = self.extra_potential
        if extra is None:
            return v
        if isinstance(extra, (tuple, list)):
            extra = extra[component - 1]
        return v + np.asarray(extra(x, y), dtype=float)


@dataclass(frozen=True, eq=False)
class ConstantOperators:
    """State independent N x N matrices over the interior DOFs.

    ``S_full``/``M_full`` include boundary nodes (used for checks only).
    """

    S: sp.csr_matrix
    M: sp.csr_matrix
    P1: sp.csr_matrix
    P2: sp.csr_matrix
    L: sp.csr_matrix
    S_full: sp.csr_matrix = field(repr=False)
    M_full: sp.csr_matrix = field(repr=False)


@dataclass(frozen=True, eq=False)
class WeightedOperators:
    """Mass matrices weighted by products of the real fields of ``u``.

    ``data[p]`` holds the CSR data of the matrix weighted by the
    ``p``-th product in :data:`sogpe.kernels.PAIRS`; the weights are the
    raw field values (no mass normalization).
    """

    data: np.ndarray = field(repr=False)
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    N: int

    def _index(self, a, b):
        i, j = sorted((FIELD_NAMES.index(a), FIELD_NAMES.index(b)))
        return kernels.PAIRS.index((i, j))

    def product_data(self, a, b):
        return self.data[self._index(a, b)]

    def product(self, a, b):
        """Matrix weighted by ``a * b``, e.g. ``product('u1R', 'u2I')``."""
        return self._csr(self.product_data(a, b))

    def abs_data(self, component):
        if component == 1:
            return self.product_data("u1R", "u1R") + self.product_data("u1I", "u1I")
        return self.product_data("u2R", "u2R") + self.product_data("u2I", "u2I")

    @property
    def M_abs_u1(self):
        return self._csr(self.abs_data(1))

    @property
    def M_abs_u2(self):
        return self._csr(self.abs_data(2))

    def _csr(self, data):
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.N, self.N))


@dataclass(frozen=True, eq=False)
class RankTwoFactors:
    """Low-rank part ``U @ V`` of the discrete J-operator."""

    U: np.ndarray
    V: np.ndarray

    def apply(self, x):
        return self.U @ (self.V @ x)


def _coeffs(u):
    c = getattr(u, "coeffs", u)
    return np.asarray(c, dtype=float)


class SpaceOperators:
    """Parameter independent data of one finite element space.

    Holds the shared sparsity pattern with its element scatter map, the
    stiffness, mass and x1-derivative matrices and the degree-8 rule used
    for all state dependent integrals.  Use :func:`space_operators`.
    """

    def __init__(self, space):
        self.space = space
        N = space.N
        self.N = N
        origin, jac, det = space.element_geometry()
        self.area = np.abs(det) / 2.0
        tri = space.triangles
        nb = tri.shape[1]
        self._build_pattern()

        qp, qw = triangle_rule(CONSTANT_DEGREE)
        phi, dphi = shape_functions(space.order, qp)
        inv_jt = np.linalg.inv(jac).transpose(0, 2, 1)
        grads = np.einsum("tij,qaj->tqai", inv_jt, dphi)
        wa = self.area[:, None] * qw[None, :]
        self.quad_points = origin[:, None, :] + np.einsum("tij,qj->tqi", jac, qp)
        self.quad_weights = wa
        self.phi4 = phi
        self.mass_elements = np.einsum("tq,qa,qb->tab", wa, phi, phi)
        stiff_e = np.einsum("tq,tqai,tqbi->tab", wa, grads, grads)
        deriv_e = np.einsum("tq,qa,tqb->tab", wa, phi, grads[..., 0])
        self.data = {
            "S": self.scatter_elements(stiff_e),
            "M": self.scatter_elements(self.mass_elements),
            "L": self.scatter_elements(deriv_e),
        }
        rows = np.repeat(tri, nb, axis=1).ravel()
        cols = np.tile(tri, (1, nb)).ravel()
        shape = (space.n_nodes, space.n_nodes)
        self.S_full = sp.coo_matrix((stiff_e.ravel(), (rows, cols)), shape=shape).tocsr()
        self.M_full = sp.coo_matrix((self.mass_elements.ravel(), (rows, cols)), shape=shape).tocsr()

        qp8, qw8 = triangle_rule(WEIGHTED_DEGREE)
        phi8, _ = shape_functions(space.order, qp8)
        self._phi8 = np.ascontiguousarray(phi8)
        self._w8 = np.ascontiguousarray(qw8)

        m = self.data["M"]
        self.M = self.csr(m)
        self.M_padded = self.block([[m, None, None, None], [None, m, None, None],
                                    [None, None, m, None], [None, None, None, m]])
        h1 = self.data["S"] + m
        self.H1_matrix = self.block([[h1, None, None, None], [None, h1, None, None],
                                     [None, None, h1, None], [None, None, None, h1]])

    def _build_pattern(self):
        space = self.space
        tri = space.triangles
        nb = tri.shape[1]
        dof = space.node_to_dof[tri]
        r = np.repeat(dof, nb, axis=1)
        c = np.tile(dof, (1, nb))
        keep = (r >= 0) & (c >= 0)
        key = np.where(keep, r * self.N + c, -1).ravel()
        uniq, inv = np.unique(key[key >= 0], return_inverse=True)
        nnz = len(uniq)
        scatter = np.full(key.shape, nnz, dtype=np.int64)
        scatter[key >= 0] = inv
        self.nnz = nnz
        self.scatter = np.ascontiguousarray(scatter.reshape(len(tri), nb * nb))
        rows = uniq // self.N
        self.indices = (uniq % self.N).astype(np.int32)
        self.indptr = np.zeros(self.N + 1, dtype=np.int32)
        np.cumsum(np.bincount(rows, minlength=self.N), out=self.indptr[1:])

    def scatter_elements(self, elem):
        """Sum element matrices ``(nt, nb, nb)`` into CSR data on the interior pattern."""
        return np.bincount(self.scatter.ravel(), weights=elem.ravel(), minlength=self.nnz + 1)[:self.nnz]

    def csr(self, data):
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.N, self.N))

    def _full_pattern(self):
        # 4N pattern with every block present; gather maps (16, nnz) block data into it
        N, nnz = self.N, self.nnz
        rowlen = np.diff(self.indptr).astype(np.int64)
        indptr4 = np.zeros(4 * N + 1, dtype=np.int64)
        indptr4[1:] = np.cumsum(np.tile(4 * rowlen, 4))
        starts = np.repeat(self.indptr[:-1].astype(np.int64), rowlen)
        local = np.arange(nnz) - starts
        row_of = np.repeat(np.arange(N), rowlen)
        gather = np.empty(16 * nnz, dtype=np.int64)
        indices4 = np.empty(16 * nnz, dtype=np.int32)
        for I in range(4):
            for J in range(4):
                dest = I * 4 * nnz + 4 * self.indptr[row_of] + J * rowlen[row_of] + local
                gather[dest] = (4 * I + J) * nnz + np.arange(nnz)
                indices4[dest] = J * N + self.indices
        self._gather = gather
        self._indices4 = indices4
        self._indptr4 = indptr4.astype(np.int32) if 16 * nnz < 2 ** 31 else indptr4

    def full_block(self, grid):
        """Like :meth:`block` but on the fixed all-blocks pattern (fast, explicit zeros)."""
        if not hasattr(self, "_gather"):
            self._full_pattern()
        stacked = np.zeros((16, self.nnz))
        for i in range(4):
            for j in range(4):
                if grid[i][j] is not None:
                    stacked[4 * i + j] = grid[i][j]
        data = stacked.ravel()[self._gather]
        n = 4 * self.N
        m = sp.csr_matrix((n, n))
        m.data, m.indices, m.indptr = data, self._indices4, self._indptr4
        return m

    def block(self, grid):
        """4N x 4N CSR matrix from a 4x4 grid of CSR data arrays (or None)."""
        blocks = [[None if d is None else self.csr(d) for d in row] for row in grid]
        for i in range(4):
            if all(b is None for b in blocks[i]):
                blocks[i][i] = sp.csr_matrix((self.N, self.N))
        return sp.bmat(blocks, format="csr")

    def check(self, u):
        space = getattr(u, "space", None)
        if space is not None and not self.space.compatible(space):
            raise SpaceMismatch("state lives on a different finite element space")
        c = _coeffs(u)
        if c.shape != (4 * self.N,):
            raise SpaceMismatch(f"expected a vector of length {4 * self.N}, got {c.shape}")
        return c

    def mass(self, c):
        return float(c @ (self.M_padded @ c))

    def fields(self, c):
        """Nodal ``(n_nodes, 4)`` array of the four real fields."""
        return np.ascontiguousarray(self.space.extend(c.reshape(4, self.N).T))

    def weighted(self, u):
        c = self.check(u)
        data = kernels.weighted_mass_data(self.fields(c), self.space.triangles, self._phi8,
                                          self._w8, self.area, self.scatter, self.nnz)
        return WeightedOperators(np.asarray(data), self.indptr, self.indices, self.N)

    def quartic(self, c):
        return kernels.quartic_integrals(self.fields(c), self.space.triangles, self._phi8,
                                         self._w8, self.area)


class Discretization:
    """Operators of the GP problem for one (space, params) pair.

    Construct through :func:`discretization` to share the cache.
    """

    def __init__(self, space, params):
        self.space = space
        self.params = params
        self.ops = ops = space_operators(space)
        self.N = ops.N
        pots = []
        for comp in (1, 2):
            V = params.potential(comp, ops.quad_points[..., 0], ops.quad_points[..., 1])
            pots.append(ops.scatter_elements(
                np.einsum("tq,tq,qa,qb->tab", ops.quad_weights, V, ops.phi4, ops.phi4)))
        d = ops.data
        self.constants = ConstantOperators(
            S=ops.csr(d["S"]), M=ops.M, P1=ops.csr(pots[0]), P2=ops.csr(pots[1]),
            L=ops.csr(d["L"]), S_full=ops.S_full, M_full=ops.M_full,
        )
        self._pots = pots
        self.M_padded = ops.M_padded
        self.H1_matrix = ops.H1_matrix
        self._linear_blocks()

    def _linear_blocks(self):
        d = self.ops.data
        p = self.params
        k1 = 0.5 * d["S"] + self._pots[0] + 0.5 * p.delta * d["M"]
        k2 = 0.5 * d["S"] + self._pots[1] - 0.5 * p.delta * d["M"]
        kl = p.k0 * d["L"]
        om = 0.5 * p.omega * d["M"]
        self._k1, self._k2, self._kl, self._om = k1, k2, kl, om
        self.A_linear = self.ops.block(self._grid(k1, k2))

    def _grid(self, k1, k2, extra=None):
        kl, om = self._kl, self._om
        if not np.any(kl):
            kl = None
        if not np.any(om):
            om = None
        grid = [
            [k1, None if kl is None else -kl, om, None],
            [kl, k1, None, om],
            [om, None, k2, kl],
            [None, om, None if kl is None else -kl, k2],
        ]
        if extra is not None:
            for i in range(4):
                for j in range(4):
                    e = extra[i][j]
                    if e is None:
                        continue
                    grid[i][j] = e if grid[i][j] is None else grid[i][j] + e
        return grid

    # -- state dependent ---------------------------------------------------
    def check(self, u):
        return self.ops.check(u)

    def mass(self, c):
        return self.ops.mass(c)

    def weighted(self, u):
        return self.ops.weighted(u)

    def _norm2(self, c):
        n2 = self.mass(c)
        if not n2 > 0:
            raise ValueError("operator undefined for the zero state")
        return n2

    def assemble_A(self, u, weighted=None):
        c = self.check(u)
        n2 = self._norm2(c)
        p = self.params
        if p.linear:
            return self.A_linear.copy()
        w = weighted if weighted is not None else self.weighted(c)
        a1, a2 = w.abs_data(1) / n2, w.abs_data(2) / n2
        k1 = self._k1 + p.beta11 * a1 + p.beta12 * a2
        k2 = self._k2 + p.beta12 * a1 + p.beta22 * a2
        return self.ops.full_block(self._grid(k1, k2))

    def _i1_grid(self, w, n2):
        p = self.params
        s = 2.0 / n2
        m = {(a, b): w.product_data(a, b) for a in FIELD_NAMES for b in FIELD_NAMES}
        b11, b22, b12 = s * p.beta11, s * p.beta22, s * p.beta12
        return [
            [b11 * m["u1R", "u1R"], b11 * m["u1R", "u1I"], b12 * m["u1R", "u2R"], b12 * m["u1R", "u2I"]],
            [b11 * m["u1R", "u1I"], b11 * m["u1I", "u1I"], b12 * m["u1I", "u2R"], b12 * m["u1I", "u2I"]],
            [b12 * m["u2R", "u1R"], b12 * m["u2R", "u1I"], b22 * m["u2R", "u2R"], b22 * m["u2R", "u2I"]],
            [b12 * m["u2I", "u1R"], b12 * m["u2I", "u1I"], b22 * m["u2R", "u2I"], b22 * m["u2I", "u2I"]],
        ]

    def assemble_hessian(self, u, weighted=None):
        """A(u) plus the symmetric quartic second-derivative blocks."""
        c = self.check(u)
        n2 = self._norm2(c)
        p = self.params
        if p.linear:
            return self.A_linear.copy()
        w = weighted if weighted is not None else self.weighted(c)
        a1, a2 = w.abs_data(1) / n2, w.abs_data(2) / n2
        k1 = self._k1 + p.beta11 * a1 + p.beta12 * a2
        k2 = self._k2 + p.beta12 * a1 + p.beta22 * a2
        return self.ops.full_block(self._grid(k1, k2, extra=self._i1_grid(w, n2)))

    def rank_two(self, u, weighted=None):
        c = self.check(u)
        n2 = self._norm2(c)
        p = self.params
        N = self.N
        Mu = self.M_padded @ c
        V = np.vstack([Mu, Mu])
        U = np.zeros((4 * N, 2))
        if not p.linear:
            w = weighted if weighted is not None else self.weighted(c)
            m1, m2 = w.M_abs_u1, w.M_abs_u2
            g1 = p.beta11 * m1 + p.beta12 * m2
            g2 = p.beta12 * m1 + p.beta22 * m2
            U[0:N, 0] = g1 @ c[0:N]
            U[N:2 * N, 0] = g1 @ c[N:2 * N]
            U[2 * N:3 * N, 1] = g2 @ c[2 * N:3 * N]
            U[3 * N:, 1] = g2 @ c[3 * N:]
            U *= -2.0 / n2 ** 2
        return RankTwoFactors(U, V)

    def assemble_J_parts(self, u, sigma):
        c = self.check(u)
        w = None if self.params.linear else self.weighted(c)
        B = self.assemble_hessian(c, weighted=w)
        C = (B - sigma * self.M_padded).tocsr() if sigma != 0 else B
        return C, self.rank_two(c, weighted=w)

    def energy(self, u):
        c = self.check(u)
        e = 0.5 * float(c @ (self.A_linear @ c))
        p = self.params
        if not p.linear:
            q11, q22, q12 = self.ops.quartic(c)
            e += 0.25 * p.beta11 * q11 + 0.25 * p.beta22 * q22 + 0.5 * p.beta12 * q12
        return e


@lru_cache(maxsize=8)
def space_operators(space):
    """Shared :class:`SpaceOperators` for ``space``."""
    return SpaceOperators(space)


@lru_cache(maxsize=8)
def discretization(space, params):
    """Shared :class:`Discretization` for ``(space, params)``."""
    return Discretization(space, params)


def assemble_constants(space, params):
    return discretization(space, params).constants


def assemble_weighted(space, u):
    """Weighted mass matrices of the state ``u``."""
    return space_operators(space).weighted(u)


def assemble_A(space, params, u):
    """Discrete real-scaling invariant linearized operator A(u)."""
    return discretization(space, params).assemble_A(u)


def assemble_J_parts(space, params, u, sigma):
    """Return ``(C, factors)`` with the shifted J-operator equal to ``C + U V``."""
    return discretization(space, params).assemble_J_parts(u, sigma)


def assemble_hessian(space, params, u):
    """Symmetric matrix of the second derivative of the energy at ``u``."""
    return discretization(space, params).assemble_hessian(u)


def j_matrix(space, params, u, sigma=0.0):
    """Dense ``C + U V`` (small meshes and tests only)."""
    C, f = assemble_J_parts(space, params, u, sigma)
    return C.toarray() + f.U @ f.V
