# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled cyclic Jacobi eigensolver for complex Hermitian matrices.

Hot kernel behind ``numerics.eig_hermitian`` / ``numerics.psd_project``; the
pure-numpy lane in ``_eig_fallback`` implements the identical rotation
schedule and is used when this extension is not built.
"""

import numpy as np

cimport cython
from libc.math cimport fabs, hypot, sqrt


def jacobi_eigh(a, double tol=1e-13, int max_sweeps=60):
    """Diagonalize a Hermitian matrix by cyclic Jacobi rotations.

    Returns (w, v): unsorted eigenvalues and unitary eigenvector columns.
    """
    cdef int n = a.shape[0]
    A_arr = np.array(a, dtype=np.complex128, order="C")
    V_arr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] A = A_arr
    cdef double complex[:, ::1] V = V_arr

    if n == 1:
        return np.array([A_arr[0, 0].real]), V_arr

    cdef double norm_a = 0.0
    cdef int i, j, p, q, sweep
    for i in range(n):
        for j in range(n):
            norm_a += (A[i, j].real * A[i, j].real
                       + A[i, j].imag * A[i, j].imag)
    norm_a = sqrt(norm_a)
    if norm_a == 0.0:
        return np.zeros(n), V_arr
    cdef double thresh = tol * norm_a

    cdef double off, b, app, aqq, tau, t, c, s
    cdef double complex apq, phase, pc, xp, xq

    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * (A[i, j].real * A[i, j].real
                              + A[i, j].imag * A[i, j].imag)
        if sqrt(off) <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                b = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                if b <= 1e-300:
                    continue
                app = A[p, p].real
                aqq = A[q, q].real
                phase = apq / b
                tau = (aqq - app) / (2.0 * b)
                if tau != 0.0:
                    t = (1.0 if tau > 0.0 else -1.0) / (fabs(tau) + hypot(1.0, tau))
                else:
                    t = 1.0
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                pc = phase.conjugate()

                # columns p, q of A
                for i in range(n):
                    xp = A[i, p]
                    xq = A[i, q]
                    A[i, p] = c * xp - s * pc * xq
                    A[i, q] = s * xp + c * pc * xq
                # rows p, q of A
                for j in range(n):
                    xp = A[p, j]
                    xq = A[q, j]
                    A[p, j] = c * xp - s * phase * xq
                    A[q, j] = s * xp + c * phase * xq
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = app - t * b
                A[q, q] = aqq + t * b
                # eigenvector columns
                for i in range(n):
                    xp = V[i, p]
                    xq = V[i, q]
                    V[i, p] = c * xp - s * pc * xq
                    V[i, q] = s * xp + c * pc * xq

    w = np.empty(n)
    for i in range(n):
        w[i] = A[i, i].real
    return w, V_arr
