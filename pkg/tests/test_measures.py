import itertools
import math

import numpy as np
import pytest
from scipy.stats import spearmanr

from qptprobe.errors import DimensionMismatchError, InvalidSplitError
from qptprobe.measures import (
    DISTANCE_KINDS,
    MeasureKind,
    coherence_l1,
    coherence_relative_entropy,
    distance,
    geometric_coherence,
    geometric_discord_2q,
    geometric_entanglement,
    minimize_over_incoherent,
    project_simplex,
)
from qptprobe.states import IncoherentBasis, change_basis, projector

from conftest import random_density, random_pure

G_MINUS = np.array([0, 1, 1, 0]) / math.sqrt(2)
PLUS = np.array([1, 1]) / math.sqrt(2)


def g_plus(theta):
    return np.array([math.cos(theta / 2), 0, 0, math.sin(theta / 2)])


def simplex_grid(d, resolution):
    n = round(1 / resolution)
    for c in itertools.product(range(n + 1), repeat=d - 1):
        if sum(c) <= n:
            yield np.array(list(c) + [n - sum(c)]) / n


def brute_force_coherence(rho, kind, resolution):
    return min(distance(rho, np.diag(p).astype(complex), kind) for p in simplex_grid(rho.shape[0], resolution))


# distances


@pytest.mark.parametrize("kind", DISTANCE_KINDS)
def test_distance_to_self_is_zero(rng, kind):
    rho = random_density(rng, 4)
    assert distance(rho, rho, kind) == pytest.approx(0.0, abs=1e-12)


def test_orthogonal_pure_states_trace_distance_one():
    assert distance(projector([1, 0]), projector([0, 1]), "trace") == pytest.approx(1.0)
    assert distance(np.array([1, 0]), np.array([0, 1]), "trace") == pytest.approx(1.0)


def test_distance_formulas(rng):
    a, b = random_density(rng, 3), random_density(rng, 3)
    diff = a - b
    assert distance(a, b, "l1_entrywise") == pytest.approx(np.abs(diff).sum(), abs=1e-14)
    assert distance(a, b, "hilbert_schmidt") == pytest.approx(np.linalg.norm(diff), abs=1e-14)
    assert distance(a, b, "trace") == pytest.approx(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum(), abs=1e-12)


def test_pure_trace_distance_matches_matrix_path(rng):
    for _ in range(20):
        a, b = random_pure(rng, 5), random_pure(rng, 5)
        assert distance(a, b, "trace") == pytest.approx(distance(projector(a), projector(b), "trace"), abs=1e-12)


@pytest.mark.parametrize("kind", DISTANCE_KINDS)
def test_metric_axioms(rng, kind):
    for _ in range(50):
        d = int(rng.integers(2, 6))
        a, b, c = (random_density(rng, d, rank=int(rng.integers(1, d + 1))) for _ in range(3))
        assert distance(a, b, kind) >= 0
        assert abs(distance(a, b, kind) - distance(b, a, kind)) <= 1e-12
        assert distance(a, b, kind) <= distance(a, c, kind) + distance(b, c, kind) + 1e-12


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        distance(np.eye(2) / 2, np.eye(3) / 3)


# coherence


def test_l1_coherence_values():
    assert coherence_l1(G_MINUS) == pytest.approx(1.0, abs=1e-12)
    assert coherence_l1(g_plus(math.pi / 2)) == pytest.approx(1.0, abs=1e-12)
    assert coherence_l1(g_plus(math.pi / 4)) == pytest.approx(math.sin(math.pi / 4), abs=1e-12)


def test_l1_coherence_bell_type_basis():
    bell = IncoherentBasis.bell_type_2q()
    assert coherence_l1(G_MINUS, bell) == pytest.approx(0.0, abs=1e-12)
    assert coherence_l1(g_plus(math.pi / 2), bell) == pytest.approx(1.0, abs=1e-12)


def test_relative_entropy_coherence():
    assert coherence_relative_entropy(np.diag([0.3, 0.7]).astype(complex)) == pytest.approx(0.0, abs=1e-14)
    assert coherence_relative_entropy(PLUS) == pytest.approx(math.log(2), abs=1e-14)
    c2, s2 = math.cos(math.pi / 8) ** 2, math.sin(math.pi / 8) ** 2
    expected = -c2 * math.log(c2) - s2 * math.log(s2)
    assert coherence_relative_entropy(g_plus(math.pi / 4)) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.4164955307, abs=1e-10)


def test_relative_entropy_coherence_mixed_state_bounds(rng):
    rho = random_density(rng, 4)
    assert 0 <= coherence_relative_entropy(rho) <= math.log(4)


@pytest.mark.parametrize("kind", DISTANCE_KINDS)
def test_incoherent_states_have_zero_geometric_coherence(kind):
    rho = np.diag([0.1, 0.2, 0.7]).astype(complex)
    assert geometric_coherence(rho, kind=kind) == pytest.approx(0.0, abs=1e-8)


def test_plus_state_geometric_coherence_hs():
    assert geometric_coherence(PLUS, kind="hilbert_schmidt") == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert brute_force_coherence(projector(PLUS), "hilbert_schmidt", 1e-3) == pytest.approx(1 / math.sqrt(2), abs=1e-6)


def test_plus_state_geometric_coherence_trace():
    assert geometric_coherence(PLUS, kind="trace") == pytest.approx(0.5, abs=1e-8)
    assert brute_force_coherence(projector(PLUS), "trace", 1e-3) == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("kind", ["trace", "l1_entrywise", "hilbert_schmidt"])
def test_minimizer_against_grid_oracle(rng, kind):
    for _ in range(3):
        rho = random_density(rng, 3, rank=int(rng.integers(1, 4)))
        ours = geometric_coherence(rho, kind=kind, method="minimize")
        grid = brute_force_coherence(rho, kind, 1 / 80)
        assert ours <= grid + 1e-10
        assert ours >= grid - 0.05  # the grid is coarse; our value can only be lower


@pytest.mark.parametrize("kind", ["trace", "l1_entrywise"])
def test_minimizer_certificate_against_lp(rng, kind):
    # l1 and trace with pure input reduce to problems a dense LP/SDP solver handles well
    cvxpy = pytest.importorskip("cvxpy")
    for _ in range(3):
        rho = random_density(rng, 4)
        p = cvxpy.Variable(4, nonneg=True)
        diff = rho - cvxpy.diag(p)
        if kind == "trace":
            herm = cvxpy.bmat([[cvxpy.real(diff), -cvxpy.imag(diff)], [cvxpy.imag(diff), cvxpy.real(diff)]])
            obj = 0.25 * cvxpy.normNuc(herm)
        else:
            obj = cvxpy.sum(cvxpy.abs(diff))
        prob = cvxpy.Problem(cvxpy.Minimize(obj), [cvxpy.sum(p) == 1])
        prob.solve()
        ours = minimize_over_incoherent(change_basis(rho, IncoherentBasis.computational(4)), kind)
        assert ours.gap <= 1e-8
        assert ours.value == pytest.approx(prob.value, abs=1e-5)


def test_hs_closed_form_matches_minimizer(rng):
    for _ in range(20):
        rho = random_density(rng, 3)
        closed = geometric_coherence(rho, kind="hilbert_schmidt")
        searched = geometric_coherence(rho, kind="hilbert_schmidt", method="minimize")
        assert abs(closed - searched) <= 1e-6


def test_qubit_l1_coherence_equals_l1_geometric_coherence(rng):
    for _ in range(20):
        rho = random_density(rng, 2)
        assert abs(coherence_l1(rho) - geometric_coherence(rho, kind="l1_entrywise")) <= 1e-6


def test_project_simplex():
    np.testing.assert_allclose(project_simplex([0.2, 0.3, 0.5]), [0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_simplex([2.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(project_simplex([0.0, 0.0]), [0.5, 0.5])


def test_permutation_invariance(rng):
    rho = random_density(rng, 4)
    basis = IncoherentBasis.bell_type_2q()
    permuted = IncoherentBasis(basis.matrix[:, [2, 0, 3, 1]])
    for tag, dist in [("coherence_l1", None), ("coherence_relative_entropy", None)] + [
        ("geometric_coherence", k) for k in DISTANCE_KINDS
    ]:
        a = MeasureKind(tag, basis, dist)(rho)
        b = MeasureKind(tag, permuted, dist)(rho)
        assert abs(a - b) <= 1e-9 if tag == "geometric_coherence" and dist != "hilbert_schmidt" else abs(a - b) <= 1e-12


def test_reverse_triangle_bound(rng):
    for kind in DISTANCE_KINDS:
        for _ in range(20):
            a, b = random_density(rng, 3), random_density(rng, 3)
            lhs = abs(geometric_coherence(a, kind=kind) - geometric_coherence(b, kind=kind))
            assert lhs <= distance(a, b, kind) + 1e-10


# entanglement


def test_geometric_entanglement_values():
    assert geometric_entanglement(np.array([1, 0, 0, 0])) == pytest.approx(0.0, abs=1e-14)
    assert geometric_entanglement(G_MINUS) == pytest.approx(0.5, abs=1e-12)
    assert geometric_entanglement(g_plus(math.pi / 2)) == pytest.approx(0.5, abs=1e-12)
    assert geometric_entanglement(g_plus(math.pi / 4)) == pytest.approx(1 - math.cos(math.pi / 8) ** 2, abs=1e-12)


def test_geometric_entanglement_against_product_search():
    psi = g_plus(math.pi / 4)
    best = 0.0
    for t1 in np.linspace(0, math.pi, 181):
        for t2 in np.linspace(0, math.pi, 181):
            a = np.array([math.cos(t1 / 2), math.sin(t1 / 2)])
            b = np.array([math.cos(t2 / 2), math.sin(t2 / 2)])
            best = max(best, abs(np.vdot(np.kron(a, b), psi)) ** 2)
    assert 1 - best == pytest.approx(geometric_entanglement(psi), abs=1e-4)


def test_geometric_entanglement_range(rng):
    for _ in range(20):
        e = geometric_entanglement(random_pure(rng, 8), ([1], [2, 3]))
        assert 0 <= e <= 0.5 + 1e-12


def test_geometric_entanglement_invalid_split():
    with pytest.raises(InvalidSplitError):
        geometric_entanglement(G_MINUS, ([1], [1]))


# discord


def test_discord_product_diagonal_zero():
    rho = np.kron(np.diag([0.3, 0.7]), np.diag([0.6, 0.4])).astype(complex)
    assert geometric_discord_2q(rho) == pytest.approx(0.0, abs=1e-14)


def test_discord_bell_state():
    assert geometric_discord_2q(G_MINUS) == pytest.approx(0.5, abs=1e-12)
    assert geometric_discord_2q(G_MINUS, method="search") == pytest.approx(0.5, abs=1e-8)


def test_discord_closed_form_vs_search(rng):
    for _ in range(5):
        rho = random_density(rng, 4, rank=int(rng.integers(1, 5)))
        assert abs(geometric_discord_2q(rho) - geometric_discord_2q(rho, method="search", grid=32)) <= 1e-4


def test_discord_increases_with_entanglement_on_pure_states(rng):
    states = [random_pure(rng, 4) for _ in range(50)]
    ent = [geometric_entanglement(s) for s in states]
    disc = [geometric_discord_2q(s) for s in states]
    assert spearmanr(ent, disc).statistic == pytest.approx(1.0)


def test_discord_dimension_check():
    with pytest.raises(DimensionMismatchError):
        geometric_discord_2q(np.eye(3) / 3)


def test_measure_kind_basis_rules():
    with pytest.raises(ValueError):
        MeasureKind("coherence_l1")
    with pytest.raises(ValueError):
        MeasureKind("geometric_entanglement", IncoherentBasis.computational(4))
    with pytest.raises(ValueError):
        MeasureKind("geometric_coherence", IncoherentBasis.computational(4))
    m = MeasureKind("geometric_coherence", IncoherentBasis.computational(4), "trace")
    assert m.name == "geometric_coherence:trace[computational]"
