"""Pure-Python cyclic Jacobi, used when the compiled kernel is unavailable.

Rotation order and formulas mirror ``_jacobi.pyx`` exactly; only the
row updates are vectorized with numpy slices.
"""

import math

import numpy as np


def _offdiag_norm(a):
    upper = np.triu(a, 1)
    return math.sqrt(2.0 * float(np.sum(upper.real**2 + upper.imag**2)))


def jacobi_eigh(m, rel_tol=1e-14, max_sweeps=100):
    a = np.array(m, dtype=np.complex128, order="C", copy=True)
    n = a.shape[0]
    w = np.eye(n, dtype=np.complex128)  # rows are conjugated eigenvectors
    target = rel_tol * math.sqrt(float(np.sum(np.abs(a) ** 2)))
    sweep = 0
    while sweep < max_sweeps:
        if _offdiag_norm(a) <= target:
            break
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = complex(a[p, q])
                mag = math.hypot(apq.real, apq.imag)
                if mag == 0.0:
                    continue
                ph = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                sph = s * ph
                sphc = s * ph.conjugate()

                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - sph * row_q
                a[q, :] = sphc * row_p + c * row_q
                a[:, p] = a[p, :].conj()
                a[:, q] = a[q, :].conj()
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
                a[p, q] = 0.0
                a[q, p] = 0.0

                wp = w[p, :].copy()
                wq = w[q, :].copy()
                w[p, :] = c * wp - sph * wq
                w[q, :] = sphc * wp + c * wq
    return a.diagonal().real.copy(), w.conj().T.copy(), sweep
