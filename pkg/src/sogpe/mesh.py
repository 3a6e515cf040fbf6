"""Uniform triangular meshes of rectangles and P1/P2 Lagrange spaces.

Nodes live on a regular grid (``n_sub + 1`` points per axis for P1,
``2 n_sub + 1`` for P2) numbered row-major by ``(y, x)``.  Every grid
cell is split along its lower-left to upper-right diagonal, so the P2
midpoint of the diagonal is the cell centre and all P2 nodes are grid
points of the refined grid.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, SpaceMismatch


@dataclass(frozen=True)
class RectDomain:
    xmin: float = -1.0
    xmax: float = 1.0
    ymin: float = -1.0
    ymax: float = 1.0
    n_sub: int = 256

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ConfigurationError(f"degenerate rectangle {self}")
        if int(self.n_sub) != self.n_sub or self.n_sub < 2:
            raise ConfigurationError(f"n_sub must be an integer >= 2, got {self.n_sub}")

    @property
    def area(self):
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)


# Reference P2 node order: vertices 0, 1, 2, then midpoints of edges
# (0,1), (1,2), (2,0).
REF_NODES = {
    1: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    2: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                 [0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]),
}


def shape_functions(order, pts):
    """Values and reference gradients of the Lagrange basis at ``pts``.

    Returns ``phi`` of shape ``(npts, nb)`` and ``dphi`` of shape
    ``(npts, nb, 2)``.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    xi, eta = pts[:, 0], pts[:, 1]
    l0 = 1.0 - xi - eta
    zero = np.zeros_like(xi)
    if order == 1:
        phi = np.stack([l0, xi, eta], axis=1)
        dphi = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        return phi, np.broadcast_to(dphi, (len(xi), 3, 2)).copy()
    if order == 2:
        phi = np.stack([
            l0 * (2 * l0 - 1), xi * (2 * xi - 1), eta * (2 * eta - 1),
            4 * l0 * xi, 4 * xi * eta, 4 * eta * l0,
        ], axis=1)
        dx = np.stack([
            -(4 * l0 - 1), 4 * xi - 1, zero,
            4 * (l0 - xi), 4 * eta, -4 * eta,
        ], axis=1)
        dy = np.stack([
            -(4 * l0 - 1), zero, 4 * eta - 1,
            -4 * xi, 4 * xi, 4 * (l0 - eta),
        ], axis=1)
        return phi, np.stack([dx, dy], axis=2)
    raise ConfigurationError(f"element order must be 1 or 2, got {order}")


@dataclass(frozen=True, eq=False)
class FeSpace:
    """Lagrange space on a uniform rectangle mesh with zero Dirichlet data.

    Coefficient vectors over the ``N`` interior nodes are the working
    representation; :meth:`extend` pads them with boundary zeros.
    """

    domain: RectDomain
    order: int
    nodes: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)
    interior_nodes: np.ndarray = field(repr=False)
    node_to_dof: np.ndarray = field(repr=False)

    @property
    def N(self):
        return len(self.interior_nodes)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def grid_size(self):
        return self.order * self.domain.n_sub + 1

    @property
    def h(self):
        d = self.domain
        return (d.xmax - d.xmin) / d.n_sub, (d.ymax - d.ymin) / d.n_sub

    def compatible(self, other):
        return other is self or (other.domain == self.domain and other.order == self.order)

    def extend(self, coeffs):
        """Interior coefficients -> full nodal vector (boundary = 0)."""
        coeffs = np.asarray(coeffs)
        if coeffs.shape[0] == self.n_nodes:
            return coeffs
        if coeffs.shape[0] != self.N:
            raise SpaceMismatch(f"expected {self.N} coefficients, got {coeffs.shape[0]}")
        full = np.zeros((self.n_nodes,) + coeffs.shape[1:], dtype=coeffs.dtype)
        full[self.interior_nodes] = coeffs
        return full

    def restrict(self, nodal):
        """Full nodal vector -> interior coefficients."""
        return np.asarray(nodal)[self.interior_nodes]

    def interpolate(self, f):
        """Nodal interpolant of ``f(x, y)`` restricted to the interior DOFs."""
        x, y = self.nodes[self.interior_nodes].T
        return np.asarray(f(x, y))

    def element_geometry(self):
        """Affine maps of all triangles: ``(origin, jac, det)``.

        ``jac[t]`` maps reference coordinates to physical ones,
        ``x = origin[t] + jac[t] @ xi``.
        """
        v = self.nodes[self.triangles[:, :3]]
        origin = v[:, 0]
        jac = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        return origin, jac, det


def dof_count(n_sub, order):
    """Closed-form interior DOF count of the uniform mesh."""
    if order == 1:
        return (n_sub + 1) ** 2 - 4 * n_sub
    if order == 2:
        return (2 * n_sub + 1) ** 2 - 8 * n_sub
    raise ConfigurationError(f"element order must be 1 or 2, got {order}")


def build_space(domain, order):
    """Build the P1 or P2 Lagrange space on ``domain``."""
    if order not in (1, 2):
        raise ConfigurationError(f"element order must be 1 or 2, got {order}")
    n = domain.n_sub
    m = order * n + 1
    xs = np.linspace(domain.xmin, domain.xmax, m)
    ys = np.linspace(domain.ymin, domain.ymax, m)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return j * m + i

    ci, cj = np.meshgrid(np.arange(n), np.arange(n))
    ci = ci.ravel()
    cj = cj.ravel()
    s = order
    i0, j0 = s * ci, s * cj
    i1, j1 = i0 + s, j0 + s
    v00, v10, v01, v11 = idx(i0, j0), idx(i1, j0), idx(i0, j1), idx(i1, j1)
    if order == 1:
        lower = np.column_stack([v00, v10, v11])
        upper = np.column_stack([v00, v11, v01])
    else:
        mid_bottom = idx(i0 + 1, j0)
        mid_right = idx(i1, j0 + 1)
        mid_top = idx(i0 + 1, j1)
        mid_left = idx(i0, j0 + 1)
        centre = idx(i0 + 1, j0 + 1)
        lower = np.column_stack([v00, v10, v11, mid_bottom, mid_right, centre])
        upper = np.column_stack([v00, v11, v01, centre, mid_top, mid_left])
    # cell-major: both triangles of a cell are adjacent
    triangles = np.stack([lower, upper], axis=1).reshape(-1, lower.shape[1])

    gi, gj = np.meshgrid(np.arange(m), np.arange(m))
    on_boundary = ((gi == 0) | (gi == m - 1) | (gj == 0) | (gj == m - 1)).ravel()
    interior = np.flatnonzero(~on_boundary)
    node_to_dof = np.full(m * m, -1, dtype=np.int64)
    node_to_dof[interior] = np.arange(len(interior))
    space = FeSpace(domain, order, nodes, triangles.astype(np.int64), interior, node_to_dof)
    for arr in (nodes, space.triangles, interior, node_to_dof):
        arr.setflags(write=False)
    return space


def interpolate_p1_to_p2(space1, space2, coeffs):
    """Nodal interpolation of a P1 field into the P2 space on the same mesh.

    ``coeffs`` may carry trailing axes (e.g. the four real fields).
    """
    if space1.order != 1 or space2.order != 2:
        raise SpaceMismatch("interpolate_p1_to_p2 needs a P1 source and a P2 target")
    if space1.domain != space2.domain:
        raise SpaceMismatch("P1 and P2 spaces live on different meshes")
    n = space1.domain.n_sub
    full = space1.extend(np.asarray(coeffs, dtype=float))
    tail = full.shape[1:]
    g1 = full.reshape((n + 1, n + 1) + tail)
    g2 = np.zeros((2 * n + 1, 2 * n + 1) + tail)
    g2[::2, ::2] = g1
    g2[::2, 1::2] = 0.5 * (g1[:, :-1] + g1[:, 1:])
    g2[1::2, ::2] = 0.5 * (g1[:-1, :] + g1[1:, :])
    g2[1::2, 1::2] = 0.5 * (g1[:-1, :-1] + g1[1:, 1:])
    return space2.restrict(g2.reshape((-1,) + tail))


def locate(space, points):
    """Containing triangle and reference coordinates of each point."""
    d = space.domain
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    tol = 1e-12 * max(d.xmax - d.xmin, d.ymax - d.ymin)
    outside = (x < d.xmin - tol) | (x > d.xmax + tol) | (y < d.ymin - tol) | (y > d.ymax + tol)
    if np.any(outside):
        raise ValueError(f"{int(outside.sum())} point(s) outside the domain")
    n = d.n_sub
    hx, hy = space.h
    s = (x - d.xmin) / hx
    t = (y - d.ymin) / hy
    ci = np.clip(np.floor(s).astype(np.int64), 0, n - 1)
    cj = np.clip(np.floor(t).astype(np.int64), 0, n - 1)
    ls, lt = s - ci, t - cj
    upper = lt > ls
    tri = 2 * (cj * n + ci) + upper
    origin, jac, _ = space.element_geometry()
    rel = pts - origin[tri]
    ref = np.linalg.solve(jac[tri], rel[:, :, None])[:, :, 0]
    return tri, ref


def eval_at_points(space, coeffs, points):
    """Evaluate the finite element function with interior ``coeffs``."""
    tri, ref = locate(space, points)
    phi, _ = shape_functions(space.order, ref)
    full = space.extend(np.asarray(coeffs, dtype=float))
    local = full[space.triangles[tri]]
    if local.ndim == 2:
        return np.einsum("pa,pa->p", phi, local)
    return np.einsum("pa,pa...->p...", phi, local)
