# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled quadrature kernels; see ``_kernels_py`` for the reference versions."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

PAIRS = ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))

cdef int _PI[10]
cdef int _PJ[10]
_PI[:] = [0, 0, 0, 0, 1, 1, 1, 2, 2, 3]
_PJ[:] = [0, 1, 2, 3, 1, 2, 3, 2, 3, 3]


def weighted_mass_data(const double[:, ::1] fields,
                       const cnp.int64_t[:, ::1] triangles,
                       const double[:, ::1] phi,
                       const double[::1] wq,
                       const double[::1] area,
                       const cnp.int64_t[:, ::1] scatter,
                       Py_ssize_t nnz):
    cdef Py_ssize_t nt = triangles.shape[0]
    cdef Py_ssize_t nb = triangles.shape[1]
    cdef Py_ssize_t nq = phi.shape[0]
    cdef Py_ssize_t t, q, a, b, f, p, node, node_t
    cdef double v, w
    cdef double acc[10]
    cdef double uq[4]
    # node-major accumulation keeps the ten scattered writes contiguous
    out_arr = np.zeros((nnz + 1, 10))
    cdef double[:, ::1] out = out_arr
    prod_arr = np.empty((nq, 10))
    cdef double[:, ::1] prod = prod_arr

    with nogil:
        for t in range(nt):
            for q in range(nq):
                for f in range(4):
                    uq[f] = 0.0
                for a in range(nb):
                    node = triangles[t, a]
                    v = phi[q, a]
                    for f in range(4):
                        uq[f] += v * fields[node, f]
                v = area[t] * wq[q]
                for p in range(10):
                    prod[q, p] = v * uq[_PI[p]] * uq[_PJ[p]]
            # element matrices are symmetric in (a, b): compute a <= b once
            for a in range(nb):
                for b in range(a, nb):
                    node = scatter[t, a * nb + b]
                    node_t = scatter[t, b * nb + a]
                    if node >= nnz and node_t >= nnz:
                        continue
                    for p in range(10):
                        acc[p] = 0.0
                    for q in range(nq):
                        w = phi[q, a] * phi[q, b]
                        for p in range(10):
                            acc[p] += prod[q, p] * w
                    if node < nnz:
                        for p in range(10):
                            out[node, p] += acc[p]
                    if b != a and node_t < nnz:
                        for p in range(10):
                            out[node_t, p] += acc[p]
    return np.ascontiguousarray(out_arr[:nnz].T)


def quartic_integrals(const double[:, ::1] fields,
                      const cnp.int64_t[:, ::1] triangles,
                      const double[:, ::1] phi,
                      const double[::1] wq,
                      const double[::1] area):
    cdef Py_ssize_t nt = triangles.shape[0]
    cdef Py_ssize_t nb = triangles.shape[1]
    cdef Py_ssize_t nq = phi.shape[0]
    cdef Py_ssize_t t, q, a, f, node
    cdef double s11 = 0.0, s22 = 0.0, s12 = 0.0, r1, r2, w, v
    cdef double uq[4]
    with nogil:
        for t in range(nt):
            for q in range(nq):
                for f in range(4):
                    uq[f] = 0.0
                for a in range(nb):
                    node = triangles[t, a]
                    v = phi[q, a]
                    for f in range(4):
                        uq[f] += v * fields[node, f]
                r1 = uq[0] * uq[0] + uq[1] * uq[1]
                r2 = uq[2] * uq[2] + uq[3] * uq[3]
                w = area[t] * wq[q]
                s11 += w * r1 * r1
                s22 += w * r2 * r2
                s12 += w * r1 * r2
    return s11, s22, s12
