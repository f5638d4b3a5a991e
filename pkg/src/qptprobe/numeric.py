"""Dense complex linear algebra shared by every other module.

The eigensolver is a cyclic Jacobi iteration. A compiled kernel is used
when the extension was built; otherwise a numpy-vectorized fallback with
the same rotation order is selected at import. Setting the environment
variable ``QPTPROBE_PURE_PYTHON=1`` forces the fallback.
"""

import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidSplitError, NonHermitianError, NonSquareError, NotNormalizedError

if os.environ.get("QPTPROBE_PURE_PYTHON") == "1":
    from ._jacobi_py import jacobi_eigh as _jacobi_kernel

    BACKEND = "python"
else:
    try:
        from ._jacobi import jacobi_eigh as _jacobi_kernel

        BACKEND = "compiled"
    except ImportError:  # extension not built
        from ._jacobi_py import jacobi_eigh as _jacobi_kernel

        BACKEND = "python"

# Above this dimension "auto" hands the matrix to LAPACK.
JACOBI_MAX_DIM = 128 if BACKEND == "compiled" else 32

HERMITIAN_TOL = 1e-12
DEGENERACY_TOL = 1e-9
JACOBI_REL_TOL = 1e-14
_PHASE_TOL = 1e-8


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues and gauge-fixed orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    method: str = "jacobi"

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``state = sum_i c_i |left_i> (x) |right_i>`` with ``c`` descending."""

    coefficients: np.ndarray
    left: np.ndarray  # columns
    right: np.ndarray  # columns

    def reconstruct(self):
        return np.einsum("i,ai,bi->ab", self.coefficients, self.left, self.right).reshape(-1)


def check_hermitian(m, tol=HERMITIAN_TOL):
    """Return ``m`` as a complex square array, raising if it is not Hermitian."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquareError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    asym = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if asym > tol:
        raise NonHermitianError(f"||M - M^dagger||_max = {asym:.3e} exceeds {tol:.1e}")
    return a


def fix_phase(vec, tol=_PHASE_TOL):
    """Rotate the global phase so the first non-negligible amplitude is real positive."""
    v = np.asarray(vec, dtype=np.complex128)
    idx = np.flatnonzero(np.abs(v) > tol)
    if idx.size == 0:
        return v.copy()
    a = v[idx[0]]
    return v * (abs(a) / a)


def _canonical_subspace_basis(vecs):
    # Gram-Schmidt of projected canonical vectors; pivot on the first
    # candidate within a factor 2 of the best, so solver noise cannot
    # change which canonical vector is picked.
    # Works in subspace coordinates: column j of vecs^dagger is P e_j.
    k = vecs.shape[1]
    cand = vecs.conj().T.copy()
    out = []
    for _ in range(k):
        norms = np.sum(np.abs(cand) ** 2, axis=0).real
        j = int(np.flatnonzero(norms >= 0.5 * norms.max())[0])
        u = cand[:, j] / math.sqrt(norms[j])
        cand -= np.outer(u, u.conj() @ cand)
        out.append(u)
    return vecs @ np.column_stack(out)


def _gauge_fix(w, v, degeneracy_tol):
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    n = w.size
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[stop - 1] < degeneracy_tol:
            stop += 1
        if stop - start > 1:
            v[:, start:stop] = _canonical_subspace_basis(v[:, start:stop])
        start = stop
    for i in range(n):
        v[:, i] = fix_phase(v[:, i])
    return w, v


def hermitian_eig(m, method="auto", degeneracy_tol=DEGENERACY_TOL, hermitian_tol=HERMITIAN_TOL):
    """Full spectrum of a Hermitian matrix with a deterministic eigenvector gauge.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    ``JACOBI_MAX_DIM``). Within clusters of eigenvalues closer than
    ``degeneracy_tol`` the eigenvectors are replaced by the Gram-Schmidt
    orthonormalization of the projected canonical basis; every column is
    then phase fixed.
    """
    a = check_hermitian(m, hermitian_tol)
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_DIM else "lapack"
    if n == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((0, 0), dtype=complex), method)
    if method == "jacobi":
        w, v, _ = _jacobi_kernel(a, JACOBI_REL_TOL)
    elif method == "lapack":
        w, v = scipy.linalg.eigh(a, driver="evr")
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    w, v = _gauge_fix(np.asarray(w, dtype=float), np.array(v, dtype=np.complex128), degeneracy_tol)
    return EigenDecomposition(w, v, method)


def hermitian_function(m, func, beta=None, method="auto"):
    """Apply a real function to the spectrum of ``m``.

    ``func`` is ``"exp"`` (``exp(-beta * x)``), ``"xlogx"`` (natural log,
    ``0 log 0 = 0``) or any vectorized callable.
    """
    w, v = hermitian_eig(m, method=method)
    if func == "exp":
        if beta is None:
            raise ValueError("exp requires beta")
        fw = np.exp(-beta * w)
    elif func == "xlogx":
        wc = np.clip(w, 0.0, None)
        fw = np.where(wc > 0, wc * np.log(np.where(wc > 0, wc, 1.0)), 0.0)
    elif callable(func):
        fw = np.asarray(func(w), dtype=float)
    else:
        raise ValueError(f"unknown matrix function {func!r}")
    return (v * fw) @ v.conj().T


def von_neumann_entropy(rho):
    """``-tr(rho ln rho)``."""
    return -float(np.trace(hermitian_function(rho, "xlogx")).real)


def _parse_split(split, n_sites):
    a_sites, b_sites = (sorted(int(s) for s in part) for part in split)
    everything = a_sites + b_sites
    if (
        not a_sites
        or not b_sites
        or len(set(everything)) != len(everything)
        or sorted(everything) != list(range(1, n_sites + 1))
    ):
        raise InvalidSplitError(
            f"split {split!r} is not a bipartition of sites 1..{n_sites}"
        )
    return a_sites, b_sites


def bipartite_matrix(state, split, site_dim=2):
    """Reshape an amplitude vector into the ``d_A x d_B`` matrix for a split.

    Sites are numbered from 1, most significant first (``|s_1 s_2 ... s_N>``).
    """
    psi = np.asarray(state, dtype=np.complex128).reshape(-1)
    n_sites = int(round(math.log(psi.size, site_dim)))
    if site_dim**n_sites != psi.size:
        raise InvalidSplitError(f"state of length {psi.size} is not {site_dim}^N")
    a_sites, b_sites = _parse_split(split, n_sites)
    tensor = psi.reshape((site_dim,) * n_sites)
    perm = [s - 1 for s in a_sites] + [s - 1 for s in b_sites]
    return tensor.transpose(perm).reshape(site_dim ** len(a_sites), site_dim ** len(b_sites))


def schmidt(state, split, site_dim=2):
    """Schmidt decomposition across ``split = (sites_A, sites_B)``.

    Built from the eigendecomposition of the reduced density matrix of the
    smaller side; coefficients are recomputed as ``||psi^T u_i||`` so tiny
    ones keep full absolute accuracy. Terms below 1e-12 are dropped.
    """
    psi = np.asarray(state, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise NotNormalizedError("state must be normalized")
    mat = bipartite_matrix(psi, split, site_dim)
    transposed = mat.shape[0] > mat.shape[1]
    if transposed:
        mat = mat.T
    _, u = hermitian_eig(mat @ mat.conj().T)
    u = u[:, ::-1]
    rights = u.conj().T @ mat  # rows: c_i * v_i^T
    coeffs = np.linalg.norm(rights, axis=1)
    order = np.argsort(-coeffs, kind="stable")
    coeffs = coeffs[order]
    keep = coeffs > 1e-12
    coeffs = coeffs[keep]
    left = u[:, order][:, keep]
    right = (rights[order][keep] / coeffs[:, None]).T
    if transposed:
        left, right = right, left
    return SchmidtDecomposition(coeffs, left, right)
