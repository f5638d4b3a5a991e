# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled cyclic Jacobi sweeps for complex Hermitian matrices.

Real and imaginary parts live in separate C-contiguous arrays. Only rows
are rotated contiguously; the Hermitian mirror is written back into the
columns, and eigenvectors are accumulated as rows of ``vt``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot

cnp.import_array()


cdef double _offdiag_norm(double[:, ::1] ar, double[:, ::1] ai) noexcept nogil:
    cdef Py_ssize_t n = ar.shape[0]
    cdef Py_ssize_t p, q
    cdef double acc = 0.0
    for p in range(n):
        for q in range(p + 1, n):
            acc += ar[p, q] * ar[p, q] + ai[p, q] * ai[p, q]
    return sqrt(2.0 * acc)


def jacobi_eigh(m, double rel_tol=1e-14, int max_sweeps=100):
    """Diagonalize a Hermitian matrix (a copy; the input is untouched).

    Returns ``(eigenvalues, eigenvectors, sweeps)`` in rotation order;
    sorting and gauge fixing happen in the caller.
    """
    src = np.asarray(m, dtype=np.complex128)
    cdef Py_ssize_t n = src.shape[0]
    ar_arr = np.ascontiguousarray(src.real, dtype=np.float64).copy()
    ai_arr = np.ascontiguousarray(src.imag, dtype=np.float64).copy()
    vr_arr = np.eye(n, dtype=np.float64)
    vi_arr = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] ar = ar_arr
    cdef double[:, ::1] ai = ai_arr
    cdef double[:, ::1] vr = vr_arr
    cdef double[:, ::1] vi = vi_arr
    cdef Py_ssize_t p, q, k
    cdef int sweep = 0
    cdef double target, mag, tau, t, c, s, app, aqq
    cdef double cr, ci  # e^{i phi}
    cdef double xr, xi, yr, yi, nr, ni

    target = rel_tol * sqrt(float(np.sum(ar_arr**2 + ai_arr**2)))
    with nogil:
        while sweep < max_sweeps:
            if _offdiag_norm(ar, ai) <= target:
                break
            sweep += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    mag = hypot(ar[p, q], ai[p, q])
                    if mag == 0.0:
                        continue
                    cr = ar[p, q] / mag
                    ci = ai[p, q] / mag
                    app = ar[p, p]
                    aqq = ar[q, q]
                    tau = (aqq - app) / (2.0 * mag)
                    if tau >= 0.0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = t * c
                    # rows of G^dagger A: p <- c x - s e^{i phi} y ; q <- s e^{-i phi} x + c y
                    for k in range(n):
                        xr = ar[p, k]
                        xi = ai[p, k]
                        yr = ar[q, k]
                        yi = ai[q, k]
                        ar[p, k] = c * xr - s * (cr * yr - ci * yi)
                        ai[p, k] = c * xi - s * (cr * yi + ci * yr)
                        ar[q, k] = s * (cr * xr + ci * xi) + c * yr
                        ai[q, k] = s * (cr * xi - ci * xr) + c * yi
                    for k in range(n):
                        if k != p and k != q:
                            ar[k, p] = ar[p, k]
                            ai[k, p] = -ai[p, k]
                            ar[k, q] = ar[q, k]
                            ai[k, q] = -ai[q, k]
                    ar[p, p] = app - t * mag
                    ar[q, q] = aqq + t * mag
                    ai[p, p] = 0.0
                    ai[q, q] = 0.0
                    ar[p, q] = 0.0
                    ai[p, q] = 0.0
                    ar[q, p] = 0.0
                    ai[q, p] = 0.0
                    # eigenvector rows (conjugate of V G columns)
                    for k in range(n):
                        xr = vr[p, k]
                        xi = vi[p, k]
                        yr = vr[q, k]
                        yi = vi[q, k]
                        vr[p, k] = c * xr - s * (cr * yr - ci * yi)
                        vi[p, k] = c * xi - s * (cr * yi + ci * yr)
                        vr[q, k] = s * (cr * xr + ci * xi) + c * yr
                        vi[q, k] = s * (cr * xi - ci * xr) + c * yi
    w = ar_arr.diagonal().copy()
    v = (vr_arr - 1j * vi_arr).T.copy()
    return w, v, sweep
