"""Parameterized spin Hamiltonians, the parity operator and parameter curves.

Basis ordering: site 1 is the most significant bit, ``|s_1 s_2 ... s_N>``,
with ``sigma_z |0> = +|0>``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionTooLargeError, ExpressionError, OutOfRangeError
from .expr import Expression

MAX_SITES = 12
ZERO_TEMPERATURE = math.inf
BOUNDARIES = ("periodic", "open")

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliTerm:
    """``coefficient * prod_j sigma^{axis_j}_{site_j}`` with 1-based sites."""

    coefficient: float
    ops: tuple  # ((site, axis), ...)

    def __post_init__(self):
        sites = [s for s, _ in self.ops]
        if len(set(sites)) != len(sites):
            raise ValueError(f"repeated site in Pauli term {self.ops}")
        for _, axis in self.ops:
            if axis not in ("X", "Y", "Z"):
                raise ValueError(f"unknown Pauli axis {axis!r}")


def _check_sites(n_sites):
    if n_sites < 1:
        raise ValueError("need at least one site")
    if n_sites > MAX_SITES:
        raise DimensionTooLargeError(f"N={n_sites} exceeds the dense limit N<={MAX_SITES}")


def pauli_string_matrix(ops, n_sites):
    """Dense matrix of a Pauli string, built as a phased bit-flip permutation."""
    _check_sites(n_sites)
    dim = 2**n_sites
    x = np.arange(dim)
    flip = 0
    phase = np.ones(dim, dtype=complex)
    for site, axis in ops:
        if not 1 <= site <= n_sites:
            raise ValueError(f"site {site} outside 1..{n_sites}")
        bit = 1 << (n_sites - site)
        b = (x & bit) != 0
        if axis in ("X", "Y"):
            flip |= bit
        if axis == "Z":
            phase *= np.where(b, -1.0, 1.0)
        elif axis == "Y":
            phase *= np.where(b, -1j, 1j)
    m = np.zeros((dim, dim), dtype=complex)
    m[x ^ flip, x] = phase
    return m


def pauli_string_kron(ops, n_sites):
    """Same matrix as :func:`pauli_string_matrix` via iterated Kronecker products."""
    factors = ["I"] * n_sites
    for site, axis in ops:
        factors[site - 1] = axis
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, PAULI[f])
    return out


@dataclass(frozen=True)
class HamiltonianSpec:
    n_sites: int
    terms: tuple = field(default_factory=tuple)
    boundary: str = "periodic"

    @property
    def dim(self):
        return 2**self.n_sites

    def build(self):
        _check_sites(self.n_sites)
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for term in self.terms:
            if term.coefficient != 0.0:
                h += term.coefficient * pauli_string_matrix(term.ops, self.n_sites)
        return h


def xy_chain_spec(n_sites, delta, h, boundary="periodic"):
    """Terms of ``-sum_j [(1+d)/4 XX + (1-d)/4 YY + h/2 Z_j]``.

    Periodic boundary couples site N to site 1; open drops that bond.
    """
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}")
    _check_sites(n_sites)
    if n_sites < 2:
        raise ValueError("an XY chain needs N >= 2")
    bonds = [(j, j + 1) for j in range(1, n_sites)]
    if boundary == "periodic":
        bonds.append((n_sites, 1))
    terms = []
    for a, b in bonds:
        terms.append(PauliTerm(-(1 + delta) / 4, ((a, "X"), (b, "X"))))
        terms.append(PauliTerm(-(1 - delta) / 4, ((a, "Y"), (b, "Y"))))
    for j in range(1, n_sites + 1):
        terms.append(PauliTerm(-h / 2, ((j, "Z"),)))
    return HamiltonianSpec(n_sites, tuple(terms), boundary)


def build_xy_chain(n_sites, delta, h, boundary="periodic"):
    return xy_chain_spec(n_sites, delta, h, boundary).build()


def build_xy_two_spin(delta, h):
    """``-(1+d)/2 X1X2 - (1-d)/2 Y1Y2 - h/2 (Z1 + Z2)``."""
    terms = (
        PauliTerm(-(1 + delta) / 2, ((1, "X"), (2, "X"))),
        PauliTerm(-(1 - delta) / 2, ((1, "Y"), (2, "Y"))),
        PauliTerm(-h / 2, ((1, "Z"),)),
        PauliTerm(-h / 2, ((2, "Z"),)),
    )
    return HamiltonianSpec(2, terms, "open").build()


def parity_operator(n_sites):
    """``prod_j sigma^z_j``: diagonal, +1 on even bit-parity basis states."""
    _check_sites(n_sites)
    x = np.arange(2**n_sites)
    popcount = np.array([bin(v).count("1") for v in x])
    return np.diag(np.where(popcount % 2 == 0, 1.0, -1.0)).astype(complex)


def magnetization(n_sites):
    """``sum_j sigma^z_j``."""
    return sum(pauli_string_matrix(((j, "Z"),), n_sites) for j in range(1, n_sites + 1))


@dataclass(frozen=True)
class ModelSpec:
    """Which XY Hamiltonian a curve drives."""

    kind: str = "xy_two_spin"  # or "xy_chain"
    n_sites: int = 2
    boundary: str = "periodic"

    def __post_init__(self):
        if self.kind not in ("xy_two_spin", "xy_chain"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "xy_two_spin" and self.n_sites != 2:
            raise ValueError("xy_two_spin has exactly 2 sites")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}")
        _check_sites(self.n_sites)

    def hamiltonian(self, delta, h):
        if self.kind == "xy_two_spin":
            return build_xy_two_spin(delta, h)
        return build_xy_chain(self.n_sites, delta, h, self.boundary)

    @property
    def dim(self):
        return 2**self.n_sites


class CurveSpec:
    """A curve ``lambda -> (delta, h, beta)`` over a closed range.

    ``beta`` may be the literal ``zero-temperature`` (evaluates to ``inf``).
    """

    def __init__(self, delta, h, beta="zero-temperature", lam_range=(-math.inf, math.inf)):
        self.delta = delta if isinstance(delta, Expression) else Expression(str(delta))
        self.h = h if isinstance(h, Expression) else Expression(str(h))
        if isinstance(beta, str) and beta.strip() == "zero-temperature":
            self.beta = None
        else:
            self.beta = beta if isinstance(beta, Expression) else Expression(str(beta))
        lo, hi = (float(v) for v in lam_range)
        if not lo <= hi:
            raise ValueError(f"empty lambda range {lam_range}")
        self.lam_range = (lo, hi)

    @property
    def zero_temperature(self):
        return self.beta is None

    def canonical(self):
        return {
            "delta": self.delta.canonical,
            "h": self.h.canonical,
            "beta": "zero-temperature" if self.beta is None else self.beta.canonical,
            "range": [repr(self.lam_range[0]), repr(self.lam_range[1])],
        }

    def __eq__(self, other):
        return isinstance(other, CurveSpec) and self.canonical() == other.canonical()

    def __hash__(self):
        return hash(repr(sorted(self.canonical().items())))

    def __repr__(self):
        return f"CurveSpec({self.canonical()!r})"

    @classmethod
    def radial(cls, theta, lam_range=(0.0, math.inf), beta="zero-temperature"):
        """``delta = lambda sin(theta)``, ``h = lambda cos(theta)`` (so ``r = lambda``)."""
        return cls(f"lambda * sin({theta!r})", f"lambda * cos({theta!r})", beta, lam_range)


def evaluate_curve(curve, lam):
    """Return ``(delta, h, beta)`` at ``lam``; ``beta`` is ``inf`` at zero temperature."""
    lo, hi = curve.lam_range
    if not lo <= lam <= hi:
        raise OutOfRangeError(f"lambda={lam} outside [{lo}, {hi}]")
    delta = curve.delta(lam)
    h = curve.h(lam)
    beta = ZERO_TEMPERATURE if curve.beta is None else curve.beta(lam)
    if not (math.isfinite(delta) and math.isfinite(h)):
        raise ExpressionError(f"curve is not finite at lambda={lam}")
    if math.isnan(beta) or beta < 0:
        raise ExpressionError(f"beta={beta} at lambda={lam} is not a non-negative temperature")
    return float(delta), float(h), float(beta)
