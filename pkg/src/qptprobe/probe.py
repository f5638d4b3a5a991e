"""Finite-difference probes of a state path: line element, susceptibilities,
divergence classification, basis constructions, Berry phase and order
parameters.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionTooSmallError,
    IdenticalStatesError,
    InsufficientLevelsError,
    NotCyclicError,
    NotParityEigenstatesError,
    SameParityError,
)
from .measures import distance
from .model import magnetization, parity_operator
from .numeric import check_hermitian, fix_phase, hermitian_eig
from .states import IncoherentBasis, pure_state

ESTIMATE_KINDS = ("measure_first", "measure_second", "line_element_first", "line_element_second")
DIVERGENT_RATIO = (1.8, 2.2)
BOUNDED_RATIO = (0.8, 1.2)
ORTHOGONAL_TOL = 1e-8
IDENTICAL_TOL = 1e-10
PARITY_TOL = 1e-8
CYCLIC_TOL = 1e-8
BERRY_PANELS = 10_000


@dataclass(frozen=True)
class SusceptibilityEstimate:
    """A finite-difference estimate at ``lam`` with step ``step``."""

    lam: float
    step: float
    value: float
    kind: str
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.kind not in ESTIMATE_KINDS:
            raise ValueError(f"unknown estimate kind {self.kind!r}")
        if not math.isfinite(self.value) and "overflow" not in self.flags:
            object.__setattr__(self, "flags", frozenset(self.flags | {"overflow"}))

    @property
    def crossing(self):
        return "crossing" in self.flags


@dataclass(frozen=True)
class DivergenceReport:
    lam: float
    classification: str  # finite | divergent | cusp
    ratios: tuple
    second_ratios: tuple = ()
    estimates: tuple = ()
    second_estimates: tuple = ()


@dataclass(frozen=True)
class BerryPhaseResult:
    analytic: float
    integrated: float
    generator: str = ""


def _flags(*points):
    return frozenset({"crossing"}) if any(p.crossing for p in points) else frozenset()


def evaluate_measure(measure, point):
    """Measure value at a path point; NaN when a pure-state measure meets a mixed state."""
    if measure.requires_pure and point.psi is None:
        return math.nan
    return float(measure(point.state))


def line_element_rate(path, lam, step, kind="trace"):
    """One-sided ``D[rho(lam + step), rho(lam)] / step``."""
    if not step > 0:
        raise ValueError("step must be positive")
    a = path.at(lam)
    b = path.at(lam + step)
    value = distance(a.state, b.state, kind) / step
    return SusceptibilityEstimate(lam, step, value, "line_element_first", _flags(a, b))


def line_element_second(path, lam, step, kind="trace"):
    """Second difference of arclength, each panel taken as one chord.

    ``[D(rho(lam+step), rho(lam)) - D(rho(lam), rho(lam-step))] / step^2``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    lo, mid, hi = path.at(lam - step), path.at(lam), path.at(lam + step)
    value = (distance(hi.state, mid.state, kind) - distance(mid.state, lo.state, kind)) / step**2
    return SusceptibilityEstimate(lam, step, value, "line_element_second", _flags(lo, hi))


def measure_susceptibility(measure, path, lam, step):
    """Central difference ``[M(lam+step) - M(lam-step)] / (2 step)``."""
    if not step > 0:
        raise ValueError("step must be positive")
    lo, hi = path.at(lam - step), path.at(lam + step)
    value = (evaluate_measure(measure, hi) - evaluate_measure(measure, lo)) / (2 * step)
    return SusceptibilityEstimate(lam, step, value, "measure_first", _flags(lo, hi))


def second_susceptibility(measure, path, lam, step):
    """Central second difference ``[M(lam+step) - 2 M(lam) + M(lam-step)] / step^2``."""
    if not step > 0:
        raise ValueError("step must be positive")
    lo, mid, hi = path.at(lam - step), path.at(lam), path.at(lam + step)
    value = (
        evaluate_measure(measure, hi) - 2 * evaluate_measure(measure, mid) + evaluate_measure(measure, lo)
    ) / step**2
    return SusceptibilityEstimate(lam, step, value, "measure_second", _flags(lo, hi))


def _values(items):
    return [abs(e.value) if isinstance(e, SusceptibilityEstimate) else abs(float(e)) for e in items]


def _ratios(values):
    out = []
    for a, b in zip(values, values[1:]):
        if a == 0.0:
            out.append(1.0 if b == 0.0 else math.inf)
        else:
            out.append(b / a)
    return tuple(out)


def _within(ratios, bounds):
    lo, hi = bounds
    return all(lo <= r <= hi for r in ratios)


def classify_divergence(first, second=None, lam=None):
    """Classify estimates at successively halved steps (coarsest first).

    ``divergent`` when every successive ratio of ``|first|`` lies in
    [1.8, 2.2]; ``cusp`` when those ratios lie in [0.8, 1.2] while the
    ``second`` differences double; ``finite`` otherwise. Plain numbers
    are accepted in place of estimates. Two zero values count as ratio 1.
    """
    first = list(first)
    if len(first) < 3:
        raise InsufficientLevelsError(f"need at least 3 refinement levels, got {len(first)}")
    if all(isinstance(e, SusceptibilityEstimate) for e in first):
        first.sort(key=lambda e: -e.step)
        lam = first[0].lam if lam is None else lam
    ratios = _ratios(_values(first))
    second_ratios = ()
    if second is not None:
        second = list(second)
        if len(second) != len(first):
            raise InsufficientLevelsError("first and second differences need the same levels")
        if all(isinstance(e, SusceptibilityEstimate) for e in second):
            second.sort(key=lambda e: -e.step)
        second_ratios = _ratios(_values(second))
    if _within(ratios, DIVERGENT_RATIO):
        label = "divergent"
    elif second_ratios and _within(ratios, BOUNDED_RATIO) and _within(second_ratios, DIVERGENT_RATIO):
        label = "cusp"
    else:
        label = "finite"
    return DivergenceReport(
        math.nan if lam is None else float(lam),
        label,
        ratios,
        second_ratios,
        tuple(first),
        tuple(second) if second is not None else (),
    )


def refinement_steps(step, levels=3):
    return [step / 2**k for k in range(levels)]


def order_parameter_expectation(psi, observable):
    """``<psi|O|psi>`` for Hermitian ``O``."""
    o = check_hermitian(observable)
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    val = np.vdot(psi, o @ psi)
    if abs(val.imag) > 1e-12:
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def _states_along(evals, coeffs, mus):
    # rows: U(mu) psi for each mu, in the eigenbasis of O
    return np.exp(-1j * np.outer(mus, evals)) * coeffs


def berry_phase(psi, observable, panels=BERRY_PANELS, generator=""):
    """Berry phase of ``psi`` under the cycle ``U(mu) = exp(-i mu O)``, ``mu`` in [0, 2 pi].

    ``analytic`` is ``2 pi <psi|O|psi>``. ``integrated`` evaluates
    ``i * integral <psi(mu)| d/dmu |psi(mu)> dmu`` with a five-point
    derivative stencil and composite Simpson on ``panels`` panels.
    """
    psi = pure_state(psi, tol=1e-10)
    o = check_hermitian(observable)
    if panels < 2 or panels % 2:
        raise ValueError("Simpson needs an even number of panels")
    w, v = hermitian_eig(o)
    c = v.conj().T @ psi
    if np.linalg.norm(v @ _states_along(w, c, np.array([2 * math.pi]))[0] - psi) > CYCLIC_TOL:
        raise NotCyclicError("exp(-2 pi i O) does not return the state to itself")
    analytic = 2 * math.pi * order_parameter_expectation(psi, o)
    mus = np.linspace(0.0, 2 * math.pi, panels + 1)
    h = 1e-3
    integrand = np.empty(mus.size)
    for lo in range(0, mus.size, 1024):
        m = mus[lo : lo + 1024]
        s = _states_along(w, c, m)
        shift = [np.exp(-1j * k * h * w) for k in (2, 1, -1, -2)]
        deriv = (-s * shift[0] + 8 * s * shift[1] - 8 * s * shift[2] + s * shift[3]) / (12 * h)
        integrand[lo : lo + 1024] = (1j * np.sum(s.conj() * deriv, axis=1)).real
    weights = np.ones(mus.size)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    integrated = float(weights @ integrand * (mus[1] - mus[0]) / 3.0)
    return BerryPhaseResult(analytic, integrated, generator)


def half_magnetization(n_sites):
    """``(sum_j sigma^z_j) / 2``: the Berry-phase generator used by the sweep."""
    return 0.5 * magnetization(n_sites)


def _complete_basis(columns, dim, allowed=None):
    """Extend orthonormal ``columns`` with Gram-Schmidt over canonical vectors.

    ``allowed`` restricts the candidate canonical vectors to a subset of
    indices (a symmetry sector). Pivot: first candidate whose residual
    is within a factor 2 of the largest.
    """
    basis = [np.asarray(c, dtype=np.complex128) for c in columns]
    idx = np.arange(dim) if allowed is None else np.asarray(allowed)
    cand = np.zeros((dim, idx.size), dtype=complex)
    cand[idx, np.arange(idx.size)] = 1.0
    for q in basis:
        cand -= np.outer(q, q.conj() @ cand)
    while len(basis) < idx.size:
        norms = np.sum(np.abs(cand) ** 2, axis=0)
        j = int(np.flatnonzero(norms >= 0.5 * norms.max())[0])
        u = cand[:, j] / math.sqrt(norms[j])
        q = np.column_stack(basis)
        u -= q @ (q.conj().T @ u)  # second pass for orthogonality
        u = fix_phase(u / np.linalg.norm(u))
        cand -= np.outer(u, u.conj() @ cand)
        basis.append(u)
    return basis


def theorem3_basis(psi_before, psi_after):
    """Incoherent basis in which ``psi_before`` is incoherent and ``psi_after`` is not.

    Partial overlap: ``e_1`` is the component of ``psi_after`` orthogonal to
    ``psi_before``. Orthogonal states: ``e_1, e_2 = (psi_after +- w)/sqrt2``
    with ``w`` orthogonal to both, which needs dimension 3 or more.
    """
    a = pure_state(psi_before, tol=1e-10)
    b = pure_state(psi_after, tol=1e-10)
    if a.shape != b.shape:
        raise ValueError("states have different dimensions")
    d = a.size
    ov = np.vdot(a, b)
    if abs(ov) > 1 - IDENTICAL_TOL:
        raise IdenticalStatesError(f"|<before|after>| = {abs(ov):.15f}")
    if abs(ov) > ORTHOGONAL_TOL:
        r = b - ov * a
        cols = [a, r / np.linalg.norm(r)]
        label = "theorem3_partial"
    else:
        if d < 3:
            raise DimensionTooSmallError("orthogonal qubit states have equal coherence in every basis")
        b = b - np.vdot(a, b) * a
        b /= np.linalg.norm(b)
        w = _complete_basis([a, b], d)[2]
        cols = [a, (b + w) / math.sqrt(2), (b - w) / math.sqrt(2)]
        label = "theorem3_orthogonal"
    return IncoherentBasis(np.column_stack(_complete_basis(cols, d)), label)


def _parity_sign(psi, diag, name):
    p = float(np.real(np.vdot(psi, diag * psi)))
    if abs(abs(p) - 1.0) > PARITY_TOL:
        raise NotParityEigenstatesError(f"{name} has parity expectation {p:.12f}")
    return 1.0 if p > 0 else -1.0


def parity_fourier_basis(n_sites, psi_before, psi_after):
    """Basis built from the two parity sectors of an N-site chain.

    The sector of ``psi_before`` contains ``psi_before`` as a basis vector.
    The sector of ``psi_after`` gets an orthonormal set anchored on
    ``psi_after`` and then Fourier mixed, so ``psi_after`` has equal weight
    on every vector of its sector.
    """
    a = pure_state(psi_before, tol=1e-10)
    b = pure_state(psi_after, tol=1e-10)
    diag = np.diag(parity_operator(n_sites)).real
    if a.size != diag.size or b.size != diag.size:
        raise ValueError(f"states must have dimension 2^{n_sites}")
    sa = _parity_sign(a, diag, "psi_before")
    sb = _parity_sign(b, diag, "psi_after")
    if sa == sb:
        raise SameParityError("both states lie in the same parity sector")
    d = diag.size

    def project(psi, sign):
        out = np.where(diag == sign, psi, 0.0)
        return out / np.linalg.norm(out)

    sector_a = np.flatnonzero(diag == sa)
    sector_b = np.flatnonzero(diag == sb)
    cols_a = _complete_basis([project(a, sa)], d, sector_a)
    e = np.column_stack(_complete_basis([project(b, sb)], d, sector_b))
    m = e.shape[1]
    k = np.arange(m)
    fourier = np.exp(-2j * math.pi * np.outer(k, k) / m) / math.sqrt(m)
    cols_b = e @ fourier
    return IncoherentBasis(np.column_stack(cols_a + [cols_b[:, i] for i in range(m)]), "parity_fourier")


def compatible_distance(measure):
    """The distance ``D`` for which ``measure`` is the geometric quantifier ``min D``."""
    if measure.tag == "geometric_coherence":
        return measure.distance
    if measure.tag == "coherence_l1":
        return "l1_entrywise"
    if measure.tag == "geometric_entanglement":
        return "trace"  # 1 - max product fidelity is 1-Lipschitz in trace distance
    return None


def verify_theorem1_bound(measure, path, lam, step, kind=None):
    """``(|M(lam+step) - M(lam)|, D[rho(lam+step), rho(lam)])``; expect lhs <= rhs."""
    if kind is None:
        kind = compatible_distance(measure)
    if kind is None or kind != compatible_distance(measure):
        raise ValueError(f"{measure.name} is not a geometric quantifier for distance {kind!r}")
    a, b = path.at(lam), path.at(lam + step)
    lhs = abs(evaluate_measure(measure, b) - evaluate_measure(measure, a))
    return lhs, distance(a.state, b.state, kind)


def bound_pair(measure, rho1, rho2, kind=None):
    """Same check as :func:`verify_theorem1_bound` for an arbitrary pair of states."""
    kind = compatible_distance(measure) if kind is None else kind
    lhs = abs(float(measure(rho1)) - float(measure(rho2)))
    return lhs, distance(rho1, rho2, kind)

