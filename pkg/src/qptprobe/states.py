"""Pure, mixed and thermal states; incoherent bases; states along a curve."""

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NotNormalizedError
from .model import ModelSpec, evaluate_curve
from .numeric import DEGENERACY_TOL, check_hermitian, fix_phase, hermitian_eig

UNITARY_TOL = 1e-10


def pure_state(amplitudes, tol=1e-12):
    psi = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise NotNormalizedError(f"||psi|| = {np.linalg.norm(psi):.15g}")
    return psi


def projector(psi):
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    return np.outer(psi, psi.conj())


def as_density(state):
    """Accept a state vector or a density matrix and return a density matrix."""
    a = np.asarray(state, dtype=np.complex128)
    if a.ndim == 1:
        return projector(pure_state(a, tol=1e-10))
    rho = check_hermitian(a)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-10:
        raise NotNormalizedError(f"trace {tr:.15g} != 1")
    return rho


def is_pure_vector(state):
    return np.asarray(state).ndim == 1


def product_state(bits):
    """Computational basis vector ``|b_1 b_2 ...>``."""
    bits = str(bits)
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


@dataclass(frozen=True, eq=False)
class IncoherentBasis:
    """Orthonormal basis given as the columns of a unitary matrix."""

    matrix: np.ndarray
    label: str = "explicit"

    def __post_init__(self):
        e = np.asarray(self.matrix, dtype=np.complex128)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError(f"basis must be a square matrix, got {e.shape}")
        err = np.max(np.abs(e.conj().T @ e - np.eye(e.shape[0])))
        if err > UNITARY_TOL:
            raise ValueError(f"basis columns are not orthonormal (error {err:.2e})")
        object.__setattr__(self, "matrix", e)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def digest_bytes(self):
        return np.ascontiguousarray(self.matrix).tobytes()

    @classmethod
    def computational(cls, dim):
        return cls(np.eye(dim, dtype=complex), "computational")

    @classmethod
    def bell_type_2q(cls):
        """``{(|01>+|10>)/sqrt2, (|01>-|10>)/sqrt2, |00>, |11>}``."""
        s = 1 / math.sqrt(2)
        cols = [
            s * (product_state("01") + product_state("10")),
            s * (product_state("01") - product_state("10")),
            product_state("00"),
            product_state("11"),
        ]
        return cls(np.column_stack(cols), "bell_type_2q")


def _basis_matrix(basis, dim):
    e = basis.matrix if isinstance(basis, IncoherentBasis) else np.asarray(basis, dtype=complex)
    if e.shape != (dim, dim):
        raise DimensionMismatchError(f"basis is {e.shape}, state has dimension {dim}")
    return e


def change_basis(rho, basis):
    """``E^dagger rho E``: the density matrix written in the basis columns."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim == 1:
        rho = projector(rho)
    e = _basis_matrix(basis, rho.shape[0])
    return e.conj().T @ rho @ e


def dephase(rho, basis):
    """``sum_i |e_i><e_i| rho |e_i><e_i|`` expressed in the original frame."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim == 1:
        rho = projector(rho)
    e = _basis_matrix(basis, rho.shape[0])
    diag = np.einsum("ji,jk,ki->i", e.conj(), rho, e).real
    return (e * diag) @ e.conj().T


@dataclass(frozen=True)
class GroundStateResult:
    state: np.ndarray
    energy: float
    degenerate: bool
    gap: float


def ground_state(h, degeneracy_tol=DEGENERACY_TOL):
    """Lowest eigenvector (phase fixed) with its energy and gap to the next level."""
    w, v = hermitian_eig(h, degeneracy_tol=degeneracy_tol)
    gap = float(w[1] - w[0]) if w.size > 1 else math.inf
    return GroundStateResult(fix_phase(v[:, 0]), float(w[0]), gap < degeneracy_tol, max(gap, 0.0))


def gibbs_state(h, beta):
    """``exp(-beta H) / Z``; ``beta = inf`` is not accepted here (use ground_state)."""
    if not (beta >= 0 and math.isfinite(beta)):
        raise ValueError(f"beta must be finite and non-negative, got {beta}")
    w, v = hermitian_eig(h)
    weights = np.exp(-beta * (w - w[0]))
    weights /= weights.sum()
    rho = (v * weights) @ v.conj().T
    return 0.5 * (rho + rho.conj().T)


@dataclass(frozen=True)
class PathPoint:
    """State at one parameter value. ``psi`` is None for thermal states."""

    lam: float
    delta: float
    h: float
    beta: float
    rho: np.ndarray
    psi: np.ndarray | None
    energy: float
    gap: float
    crossing: bool

    @property
    def state(self):
        return self.psi if self.psi is not None else self.rho


class StatePath:
    """``lambda -> rho(lambda)`` for a model driven along a curve (memoized)."""

    def __init__(self, model, curve, degeneracy_tol=DEGENERACY_TOL):
        self.model = model if isinstance(model, ModelSpec) else ModelSpec(**model)
        self.curve = curve
        self.degeneracy_tol = degeneracy_tol
        self._memo = {}
        self._lock = threading.Lock()

    @property
    def dim(self):
        return self.model.dim

    def hamiltonian(self, lam):
        delta, h, _ = evaluate_curve(self.curve, lam)
        return self.model.hamiltonian(delta, h)

    def at(self, lam):
        lam = float(lam)
        with self._lock:
            hit = self._memo.get(lam)
        if hit is not None:
            return hit
        delta, h, beta = evaluate_curve(self.curve, lam)
        ham = self.model.hamiltonian(delta, h)
        gs = ground_state(ham, self.degeneracy_tol)
        if math.isinf(beta):
            point = PathPoint(lam, delta, h, beta, projector(gs.state), gs.state, gs.energy, gs.gap, gs.degenerate)
        else:
            point = PathPoint(lam, delta, h, beta, gibbs_state(ham, beta), None, gs.energy, gs.gap, False)
        with self._lock:
            self._memo[lam] = point
        return point
