"""Pure numpy versions of the per-iteration quadrature kernels.

Same signatures as the compiled ``_kernels`` module; used when the
extension is not built or ``SOGPE_PURE_PYTHON`` is set.
"""

import numpy as np

# products of the four real fields (u1R, u1I, u2R, u2I)
PAIRS = ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))


def _fields_at_quadrature(fields, triangles, phi):
    # (nt, nq, 4)
    return np.einsum("qa,taf->tqf", phi, fields[triangles], optimize=True)


def weighted_mass_data(fields, triangles, phi, wq, area, scatter, nnz):
    """CSR data of the ten mass matrices weighted by field products.

    Row ``p`` of the result holds ``int u_i u_j phi_a phi_b`` for the
    ``p``-th entry of :data:`PAIRS`.  ``scatter`` maps each local entry
    ``(t, a*nb+b)`` into ``[0, nnz]``; index ``nnz`` is a dump slot for
    couplings with boundary nodes.
    """
    nt, nb = triangles.shape
    uq = _fields_at_quadrature(fields, triangles, phi)
    i = np.array([p[0] for p in PAIRS])
    j = np.array([p[1] for p in PAIRS])
    prod = uq[:, :, i] * uq[:, :, j] * (area[:, None, None] * wq[None, :, None])
    pp = np.einsum("qa,qb->qab", phi, phi).reshape(len(wq), nb * nb)
    # (nt, 10, nb*nb)
    elem = np.einsum("tqp,qk->tpk", prod, pp, optimize=True)
    flat = scatter.ravel()
    out = np.empty((len(PAIRS), nnz))
    for p in range(len(PAIRS)):
        out[p] = np.bincount(flat, weights=elem[:, p, :].ravel(), minlength=nnz + 1)[:nnz]
    return out


def quartic_integrals(fields, triangles, phi, wq, area):
    """Return ``(int |u1|^4, int |u2|^4, int |u1|^2 |u2|^2)``."""
    uq = _fields_at_quadrature(fields, triangles, phi)
    r1 = uq[:, :, 0] ** 2 + uq[:, :, 1] ** 2
    r2 = uq[:, :, 2] ** 2 + uq[:, :, 3] ** 2
    w = area[:, None] * wq[None, :]
    return float(np.sum(w * r1 * r1)), float(np.sum(w * r2 * r2)), float(np.sum(w * r1 * r2))
