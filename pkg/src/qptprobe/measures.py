"""Distances between states and the nonclassicality measures built on them.

Conventions: the trace distance carries the factor 1/2; the entrywise l1
distance does not, so the l1 coherence of ``(|01>+|10>)/sqrt2`` is 1.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from .errors import DimensionMismatchError, NotNormalizedError, OptimizerDidNotConverge
from .numeric import hermitian_eig, schmidt, von_neumann_entropy
from .numeric import _jacobi_kernel, JACOBI_MAX_DIM
from .states import IncoherentBasis, as_density, change_basis, pure_state

DISTANCE_KINDS = ("l1_entrywise", "trace", "hilbert_schmidt")


def _pair(rho, sigma):
    rho = as_density(rho)
    sigma = as_density(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatchError(f"{rho.shape} vs {sigma.shape}")
    return rho, sigma


def _eigvalsh(a):
    # hot path of the optimizer: raw solver, no gauge fixing
    if a.shape[0] <= JACOBI_MAX_DIM:
        w, v, _ = _jacobi_kernel(a)
        return np.asarray(w), np.asarray(v)
    return np.linalg.eigh(a)


def _trace_norm(x):
    w, _ = _eigvalsh(0.5 * (x + x.conj().T))
    return float(np.sum(np.abs(w)))


def _pure_trace_distance(a, b):
    # sqrt(1 - |<a|b>|^2), via the orthogonal residual to avoid cancellation
    a = pure_state(a, tol=1e-10)
    b = pure_state(b, tol=1e-10)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{a.shape} vs {b.shape}")
    if np.array_equal(a, b):
        return 0.0
    r = b - np.vdot(a, b) * a
    return float(min(np.linalg.norm(r), 1.0))


def distance(rho, sigma, kind="trace"):
    """Distance between two states (vectors or density matrices)."""
    if kind == "trace" and np.ndim(rho) == 1 and np.ndim(sigma) == 1:
        return _pure_trace_distance(rho, sigma)
    rho, sigma = _pair(rho, sigma)
    diff = rho - sigma
    if kind == "l1_entrywise":
        return float(np.sum(np.abs(diff)))
    if kind == "trace":
        return 0.5 * _trace_norm(diff)
    if kind == "hilbert_schmidt":
        return float(np.sqrt(np.sum(np.abs(diff) ** 2)))
    raise ValueError(f"unknown distance kind {kind!r}")


def _in_basis(state, basis):
    rho = as_density(state)
    if basis is None:
        basis = IncoherentBasis.computational(rho.shape[0])
    e = basis.matrix if isinstance(basis, IncoherentBasis) else np.asarray(basis)
    if e.shape[0] != rho.shape[0]:
        raise DimensionMismatchError(f"basis dimension {e.shape[0]} vs state {rho.shape[0]}")
    return change_basis(rho, basis)


def coherence_l1(state, basis=None):
    """Sum of absolute off-diagonal elements in the incoherent basis."""
    rb = _in_basis(state, basis)
    return float(np.sum(np.abs(rb)) - np.sum(np.abs(np.diag(rb))))


def coherence_relative_entropy(state, basis=None):
    """``S(Delta(rho)) - S(rho)`` in nats."""
    rb = _in_basis(state, basis)
    p = np.clip(np.diag(rb).real, 0.0, None)
    nz = p[p > 0]
    s_diag = float(-np.sum(nz * np.log(nz)))
    if np.asarray(state).ndim == 1:
        return max(s_diag, 0.0)
    return max(s_diag - von_neumann_entropy(rb), 0.0)


def project_simplex(v):
    """Euclidean projection onto ``{x >= 0, sum x = 1}`` (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / idx > 0)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass
class SimplexMinimum:
    value: float
    weights: np.ndarray
    gap: float
    iterations: int


def _oracle(rb, p, kind):
    """Objective, subgradient in ``p`` and a dual lower bound.

    Each objective is a norm ``||rb - diag(p)||``; any dual-feasible ``W``
    gives ``f >= Re tr(W rb) - max_i W_ii`` (scaled by 1/2 for trace).
    """
    d = np.diag(rb).real
    if kind == "l1_entrywise":
        off = float(np.sum(np.abs(rb)) - np.sum(np.abs(d)))
        r = d - p
        f = off + float(np.sum(np.abs(r)))
        g = -np.sign(r)
        # p = diag(rb) is feasible and attains ``off``, which is also a lower bound
        lower = off
        return f, g, lower
    x = rb - np.diag(p)
    if kind == "hilbert_schmidt":
        f = float(np.sqrt(np.sum(np.abs(x) ** 2)))
        if f == 0.0:
            return 0.0, np.zeros_like(p), 0.0
        wmat = x / f
        g = -np.diag(wmat).real
        lower = float(np.sum(np.conj(wmat) * rb).real) - float(np.diag(wmat).real.max())
        return f, g, lower
    if kind == "trace":
        evals, vecs = _eigvalsh(0.5 * (x + x.conj().T))
        f = 0.5 * float(np.sum(np.abs(evals)))
        scale = max(1.0, float(np.max(np.abs(evals))))
        sgn = np.sign(evals)
        g = -0.5 * np.einsum("ik,k,ik->i", vecs, sgn, vecs.conj()).real
        lower = -math.inf
        # zero eigenvalues may take any sign in [-1, 1]; try both extremes
        for fill in (-1.0, 0.0):
            s = np.where(np.abs(evals) > 1e-13 * scale, sgn, fill)
            wmat = (vecs * s) @ vecs.conj().T
            cand = 0.5 * (float(np.sum(np.conj(wmat) * rb).real) - float(np.diag(wmat).real.max()))
            lower = max(lower, cand)
        return f, g, lower
    raise ValueError(f"unknown distance kind {kind!r}")


def _cutting_plane_step(cuts, upper):
    """Minimize the piecewise-linear model of the cuts over the simplex.

    Returns the model minimizer and a lower bound on the objective built
    from the LP multipliers (a convex combination of cuts, minimized
    exactly over the simplex vertices).
    """
    f = np.array([c[0] - c[1] @ c[2] for c in cuts]) - upper
    g = np.array([c[1] for c in cuts])
    d = g.shape[1]
    res = linprog(
        np.r_[np.zeros(d), 1.0],
        A_ub=np.hstack([g, -np.ones((len(cuts), 1))]),
        b_ub=-f,
        A_eq=np.r_[np.ones(d), 0.0][None, :],
        b_eq=[1.0],
        bounds=[(0, None)] * d + [(None, None)],
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        return None, -math.inf
    mu = np.clip(-res.ineqlin.marginals, 0.0, None)
    if mu.sum() <= 0:
        return project_simplex(res.x[:d]), -math.inf
    mu /= mu.sum()
    lower = float(f @ mu + upper + (mu @ g).min())
    return project_simplex(res.x[:d]), lower


def minimize_over_incoherent(rb, kind, start=None, max_iter=100_000, tol=1e-8, warm_steps=50, step=None):
    """Minimize ``D(rb, diag(p))`` over the probability simplex.

    Projected subgradient descent (step ``c / sqrt(t)``) from the dephased
    state, then cutting-plane refinement on the collected subgradients.
    Convergence is certified by the primal-dual gap falling below ``tol``;
    OptimizerDidNotConverge is raised if that has not happened after
    ``max_iter`` objective evaluations.
    """
    rb = np.asarray(rb, dtype=np.complex128)
    d = rb.shape[0]
    p = project_simplex(np.diag(rb).real if start is None else np.asarray(start, dtype=float))
    c = (0.5 if kind == "trace" else 1.0) / math.sqrt(d) if step is None else step
    best_f, best_p, best_lower = math.inf, p, -math.inf
    cuts = []
    for t in range(1, max_iter + 1):
        f, g, lower = _oracle(rb, p, kind)
        cuts.append((f, g, p))
        if f < best_f:
            best_f, best_p = f, p
        best_lower = max(best_lower, lower)
        if best_f - best_lower <= tol:
            return SimplexMinimum(best_f, best_p, max(best_f - best_lower, 0.0), t)
        if t < warm_steps:
            p = project_simplex(p - (c / math.sqrt(t)) * g / max(float(np.linalg.norm(g)), 1.0))
            continue
        nxt, lower = _cutting_plane_step(cuts, best_f)
        best_lower = max(best_lower, lower)
        if nxt is None:
            break
        p = nxt
    gap = best_f - best_lower
    raise OptimizerDidNotConverge(
        f"{kind} geometric coherence: duality gap {gap:.2e} after {len(cuts)} evaluations", gap
    )


def geometric_coherence(state, basis=None, kind="trace", method="auto", start=None):
    """Minimum distance to the states diagonal in ``basis``.

    Hilbert-Schmidt uses the closed form (the dephased state is nearest)
    unless ``method="minimize"``; the other kinds always minimize.
    """
    rb = _in_basis(state, basis)
    if kind not in DISTANCE_KINDS:
        raise ValueError(f"unknown distance kind {kind!r}")
    if kind == "hilbert_schmidt" and method in ("auto", "closed_form"):
        off = rb - np.diag(np.diag(rb))
        return float(np.sqrt(np.sum(np.abs(off) ** 2)))
    if method == "closed_form":
        raise ValueError(f"no closed form for {kind}")
    return minimize_over_incoherent(rb, kind, start=start).value


def _default_split(n_sites):
    half = n_sites // 2
    return (list(range(1, half + 1)), list(range(half + 1, n_sites + 1)))


def geometric_entanglement(psi, split=None):
    """``1 - (largest Schmidt coefficient)^2`` of a pure state across ``split``."""
    psi = np.asarray(psi)
    if psi.ndim != 1:
        raise NotNormalizedError("geometric entanglement is defined here for pure state vectors only")
    psi = pure_state(psi, tol=1e-10)
    n_sites = int(round(math.log2(psi.size)))
    split = _default_split(n_sites) if split is None else split
    c = schmidt(psi, split).coefficients
    return float(max(1.0 - c[0] ** 2, 0.0))


_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _bloch_two_qubit(rho):
    eye = np.eye(2)
    x = np.array([np.trace(rho @ np.kron(s, eye)).real for s in _SIGMA])
    t = np.array([[np.trace(rho @ np.kron(a, b)).real for b in _SIGMA] for a in _SIGMA])
    return x, t


def _measurement_residual(rho, theta, phi):
    n = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
    ns = sum(ni * s for ni, s in zip(n, _SIGMA))
    out = np.zeros_like(rho)
    for sign in (1.0, -1.0):
        proj = np.kron(0.5 * (np.eye(2) + sign * ns), np.eye(2))
        out += proj @ rho @ proj
    return float(np.sum(np.abs(rho - out) ** 2))


def geometric_discord_2q(state, method="closed_form", grid=64):
    """Squared Hilbert-Schmidt distance to the nearest classical-quantum state.

    ``closed_form``: ``(|x|^2 + ||T||^2 - k_max) / 4`` with ``k_max`` the top
    eigenvalue of ``x x^T + T T^T``. ``search``: minimize over projective
    measurements on qubit A (``grid x grid`` angles, then Nelder-Mead).
    """
    rho = as_density(state)
    if rho.shape != (4, 4):
        raise DimensionMismatchError(f"two-qubit discord needs a 4x4 state, got {rho.shape}")
    if method == "closed_form":
        x, t = _bloch_two_qubit(rho)
        k = np.outer(x, x) + t @ t.T
        kmax = hermitian_eig(k).eigenvalues[-1]
        return float(max(0.25 * (x @ x + np.sum(t * t) - kmax), 0.0))
    if method == "search":
        thetas = np.linspace(0.0, math.pi, grid)
        phis = np.linspace(0.0, 2 * math.pi, grid, endpoint=False)
        best = min(
            ((_measurement_residual(rho, a, b), a, b) for a in thetas for b in phis),
            key=lambda r: r[0],
        )
        res = minimize(
            lambda ang: _measurement_residual(rho, ang[0], ang[1]),
            x0=[best[1], best[2]],
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000},
        )
        return float(min(res.fun, best[0]))
    raise ValueError(f"unknown method {method!r}")


MEASURE_TAGS = (
    "coherence_l1",
    "coherence_relative_entropy",
    "geometric_coherence",
    "geometric_entanglement",
    "geometric_discord_2q",
)
COHERENCE_TAGS = MEASURE_TAGS[:3]


@dataclass(frozen=True, eq=False)
class MeasureKind:
    """A named measure; coherence-type measures carry their incoherent basis."""

    tag: str
    basis: IncoherentBasis | None = None
    distance: str | None = None
    split: tuple | None = None

    def __post_init__(self):
        if self.tag not in MEASURE_TAGS:
            raise ValueError(f"unknown measure {self.tag!r}")
        if (self.tag in COHERENCE_TAGS) != (self.basis is not None):
            raise ValueError(f"{self.tag}: basis is required iff the measure is coherence-type")
        if self.tag == "geometric_coherence" and self.distance not in DISTANCE_KINDS:
            raise ValueError("geometric_coherence needs a distance kind")

    @property
    def name(self):
        base = self.tag
        if self.distance is not None:
            base += f":{self.distance}"
        if self.basis is not None:
            base += f"[{self.basis.label}]"
        return base

    @property
    def requires_pure(self):
        return self.tag == "geometric_entanglement"

    def with_basis(self, basis):
        return MeasureKind(self.tag, basis, self.distance, self.split)

    def __call__(self, state):
        if self.tag == "coherence_l1":
            return coherence_l1(state, self.basis)
        if self.tag == "coherence_relative_entropy":
            return coherence_relative_entropy(state, self.basis)
        if self.tag == "geometric_coherence":
            return geometric_coherence(state, self.basis, self.distance)
        if self.tag == "geometric_entanglement":
            return geometric_entanglement(state, self.split)
        return geometric_discord_2q(state)
