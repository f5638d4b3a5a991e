import math
from types import SimpleNamespace

import numpy as np
import pytest

from qptprobe.errors import (
    DimensionTooSmallError,
    IdenticalStatesError,
    InsufficientLevelsError,
    NotCyclicError,
    NotParityEigenstatesError,
    SameParityError,
)
from qptprobe.measures import MeasureKind, coherence_l1, distance
from qptprobe.model import CurveSpec, ModelSpec, build_xy_chain, magnetization
from qptprobe.probe import (
    SusceptibilityEstimate,
    berry_phase,
    bound_pair,
    classify_divergence,
    half_magnetization,
    line_element_rate,
    line_element_second,
    measure_susceptibility,
    order_parameter_expectation,
    parity_fourier_basis,
    refinement_steps,
    second_susceptibility,
    theorem3_basis,
    verify_theorem1_bound,
)
from qptprobe.states import IncoherentBasis, StatePath, ground_state

from conftest import random_density, random_pure

STEPS = (1e-2, 5e-3, 2.5e-3)
G_MINUS = np.array([0, 1, 1, 0]) / math.sqrt(2)
COMP = IncoherentBasis.computational(4)


def g_plus(theta):
    return np.array([math.cos(theta / 2), 0, 0, math.sin(theta / 2)])


def radial(theta):
    return StatePath(ModelSpec(), CurveSpec.radial(theta))


class ScalarPath:
    """A fake path whose 'state' is lambda itself, for synthetic profiles."""

    def at(self, lam):
        return SimpleNamespace(state=lam, psi=None, crossing=False)


class Profile:
    requires_pure = False

    def __init__(self, f):
        self.f = f

    def __call__(self, lam):
        return self.f(lam)


# line element


def test_line_element_constant_curve():
    path = StatePath(ModelSpec(), CurveSpec("0.3", "0.2"))
    for lam in (0.0, 1.0, 2.0):
        assert line_element_rate(path, lam, 1e-2).value == 0.0
        assert line_element_second(path, lam, 1e-2).value == 0.0


def test_line_element_straddling_crossing():
    path = radial(math.pi / 3)
    s = 1e-2
    est = line_element_rate(path, 1 - s / 2, s)
    jump = distance(G_MINUS, g_plus(math.pi / 3), "trace")
    assert est.value >= 0.5 / s * jump
    assert est.value == pytest.approx(1 / s, rel=1e-12)


def test_line_element_smooth_segment_converges():
    path = StatePath(ModelSpec(), CurveSpec("lambda", "1"))  # theta varies, r > 1
    values = [line_element_rate(path, 1.5, s).value for s in STEPS]
    assert values[0] > 0
    for a, b in zip(values, values[1:]):
        assert abs(b - a) / a <= 0.05


def test_line_element_second_on_smooth_segment_is_finite():
    path = StatePath(ModelSpec(), CurveSpec("lambda", "1"))
    values = [line_element_second(path, 1.5, s).value for s in STEPS]
    rep = classify_divergence(values)
    assert rep.classification == "finite" or max(abs(v) for v in values) < 1


def test_line_element_marks_crossing():
    est = line_element_rate(radial(math.pi / 4), 0.99, 1e-2)
    assert est.crossing


# susceptibilities


def test_l1_susceptibility_step_at_unit_radius():
    path = radial(math.pi / 4)
    m = MeasureKind("coherence_l1", COMP)
    for s in STEPS:
        chi = measure_susceptibility(m, path, 1.0, s).value
        assert abs(chi) == pytest.approx((1 - math.sin(math.pi / 4)) / (2 * s), rel=1e-9)


def test_entanglement_susceptibility_bounded_at_zero_field():
    path = StatePath(ModelSpec(), CurveSpec("lambda", "0"))
    m = MeasureKind("geometric_entanglement")
    for s in STEPS:
        assert abs(measure_susceptibility(m, path, 1.0, s).value) <= 1


def test_constant_measure_has_zero_susceptibility():
    path = radial(math.pi / 4)
    m = MeasureKind("coherence_l1", COMP)
    assert measure_susceptibility(m, path, 1.4, 1e-2).value == 0.0


def test_second_difference_of_linear_profile():
    m = Profile(lambda x: 3.0 * x + 1.0)
    for s in STEPS:
        assert abs(second_susceptibility(m, ScalarPath(), 0.7, s).value) <= 10 * np.finfo(float).eps / s**2


def test_second_difference_of_kink_doubles():
    m = Profile(lambda x: abs(x - 0.5))
    values = [second_susceptibility(m, ScalarPath(), 0.5, s).value for s in STEPS]
    assert values[0] == pytest.approx(2 / STEPS[0], rel=1e-9)
    for a, b in zip(values, values[1:]):
        assert b / a == pytest.approx(2.0, rel=1e-9)


def test_second_difference_of_quadratic():
    m = Profile(lambda x: 1.7 * x**2)
    for s in STEPS:
        assert second_susceptibility(m, ScalarPath(), 0.3, s).value == pytest.approx(3.4, rel=1e-2)


def test_step_must_be_positive():
    with pytest.raises(ValueError):
        SusceptibilityEstimate(0.0, 0.0, 1.0, "measure_first")
    with pytest.raises(ValueError):
        line_element_rate(radial(0.3), 1.0, -1e-3)


def test_nonfinite_estimate_flagged():
    assert "overflow" in SusceptibilityEstimate(0.0, 1e-3, math.inf, "measure_first").flags


# classification


def test_classify_doubling_is_divergent():
    assert classify_divergence([100, 200, 400]).classification == "divergent"


def test_classify_cusp():
    assert classify_divergence([5.0, 5.0, 5.0], [50, 100, 200]).classification == "cusp"


def test_classify_finite():
    assert classify_divergence([5.0, 5.1, 5.05]).classification == "finite"


def test_classify_needs_three_levels():
    with pytest.raises(InsufficientLevelsError):
        classify_divergence([1.0, 2.0])


def test_classify_sorts_estimates_by_step():
    est = [SusceptibilityEstimate(1.0, s, 1 / s, "measure_first") for s in reversed(STEPS)]
    rep = classify_divergence(est)
    assert rep.classification == "divergent" and rep.lam == 1.0
    assert rep.ratios == pytest.approx((2.0, 2.0))


def test_refinement_steps():
    assert refinement_steps(1e-2) == [1e-2, 5e-3, 2.5e-3]


def _classify_profile(f, lam, steps):
    m, path = Profile(f), ScalarPath()
    first = [measure_susceptibility(m, path, lam, s) for s in steps]
    second = [second_susceptibility(m, path, lam, s) for s in steps]
    return classify_divergence(first, second).classification


def test_classify_randomized_synthetic_profiles(rng):
    # smooth background of slope below 1 under a jump or kink of size 0.5 to 2
    outcomes = []
    for _ in range(50):
        lc = rng.uniform(-1, 1)
        a = rng.uniform(0.05, 0.25) * rng.choice([-1, 1])
        b = rng.uniform(0.5, 2.0)
        c = rng.uniform(0.5, 2.0) * rng.choice([-1, 1])
        smooth = lambda x, a=a, b=b, lc=lc: a * math.sin(b * (x - lc) + 0.7) + 0.1 * x**2
        step = lambda x, f=smooth, c=c, lc=lc: f(x) + (c if x > lc else 0.0)
        kink = lambda x, f=smooth, c=c, lc=lc: f(x) + c * abs(x - lc)
        s0 = rng.uniform(5e-3, 2e-2)
        steps = refinement_steps(s0)
        outcomes.append(_classify_profile(step, lc, steps) == "divergent")
        outcomes.append(_classify_profile(kink, lc, steps) == "cusp")
        outcomes.append(_classify_profile(smooth, lc, steps) == "finite")
    assert all(outcomes)


# Berry phase and order parameter


def test_berry_phase_g_minus():
    res = berry_phase(G_MINUS, half_magnetization(2))
    assert res.analytic == pytest.approx(0.0, abs=1e-14)
    assert abs(res.integrated - res.analytic) <= 1e-8


def test_berry_phase_g_plus():
    res = berry_phase(g_plus(math.pi / 2), half_magnetization(2))
    assert res.analytic == pytest.approx(0.0, abs=1e-12)
    theta = math.pi / 4
    res = berry_phase(g_plus(theta), half_magnetization(2))
    assert res.analytic == pytest.approx(2 * math.pi * math.cos(theta), abs=1e-12)
    assert res.analytic == pytest.approx(4.44288, abs=1e-5)
    assert abs(res.integrated - res.analytic) <= 1e-8


def test_berry_phase_zero_generator():
    res = berry_phase(G_MINUS, np.zeros((4, 4)))
    assert res.analytic == 0.0 and abs(res.integrated) <= 1e-12


def test_berry_phase_random_states_agree(rng):
    for n in (2, 4):
        o = half_magnetization(n)
        for _ in range(3):
            res = berry_phase(random_pure(rng, 2**n), o)
            assert abs(res.integrated - res.analytic) <= 1e-8


def test_berry_phase_not_cyclic(rng):
    # odd chains give half-integer eigenvalues, so U(2 pi) = -1
    with pytest.raises(NotCyclicError):
        berry_phase(random_pure(rng, 8), half_magnetization(3))
    with pytest.raises(NotCyclicError):
        berry_phase(np.array([1, 1]) / math.sqrt(2), np.diag([0.0, 0.25]))


def test_order_parameter_values():
    o = magnetization(2)
    assert order_parameter_expectation(G_MINUS, o) == pytest.approx(0.0, abs=1e-12)
    assert order_parameter_expectation(g_plus(math.pi / 2), o) == pytest.approx(2 * math.cos(math.pi / 2), abs=1e-12)
    assert order_parameter_expectation(g_plus(math.pi / 4), o) == pytest.approx(2 * math.cos(math.pi / 4), abs=1e-12)
    assert order_parameter_expectation(np.array([1, 0, 0, 0]), o) == pytest.approx(2.0)


def test_order_parameter_rejects_non_hermitian():
    with pytest.raises(ValueError):
        order_parameter_expectation(G_MINUS, np.triu(np.ones((4, 4))))


# step-revealing basis


def test_step_basis_partial_overlap():
    basis = theorem3_basis([1, 0], np.array([1, 1]) / math.sqrt(2))
    np.testing.assert_allclose(np.abs(basis.matrix), np.eye(2), atol=1e-12)
    assert coherence_l1(np.array([1, 1]) / math.sqrt(2), basis) == pytest.approx(1.0, abs=1e-12)
    assert basis.label == "theorem3_partial"


def test_step_basis_orthogonal_three_dimensional():
    basis = theorem3_basis([1, 0, 0], [0, 1, 0])
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(basis.matrix[:, 1], [0, s, s], atol=1e-12)
    np.testing.assert_allclose(basis.matrix[:, 2], [0, s, -s], atol=1e-12)
    assert coherence_l1(np.array([0, 1, 0]), basis) == pytest.approx(1.0, abs=1e-12)
    assert coherence_l1(np.array([1, 0, 0]), basis) == pytest.approx(0.0, abs=1e-12)


def test_step_basis_two_spin_orthogonal_states():
    after = g_plus(math.pi / 2)
    basis = theorem3_basis(G_MINUS, after)
    assert coherence_l1(G_MINUS, basis) == pytest.approx(0.0, abs=1e-12)
    assert coherence_l1(after, basis) == pytest.approx(1.0, abs=1e-12)


def test_step_basis_errors():
    with pytest.raises(DimensionTooSmallError):
        theorem3_basis([1, 0], [0, 1])
    with pytest.raises(IdenticalStatesError):
        theorem3_basis([1, 0], [1j, 0])


def test_step_basis_random_states(rng):
    for _ in range(20):
        d = int(rng.integers(2, 7))
        a, b = random_pure(rng, d), random_pure(rng, d)
        basis = theorem3_basis(a, b)
        assert coherence_l1(a, basis) <= 1e-10
        assert coherence_l1(b, basis) > 0


def test_step_basis_forward_and_converse_on_path():
    path = radial(math.pi / 3)
    s = STEPS[-1]
    le = [line_element_rate(path, 1 - x / 2, x) for x in STEPS]
    assert classify_divergence(le).classification == "divergent"
    before, after = path.at(1 - s), path.at(1 + s)
    basis = theorem3_basis(before.psi, after.psi)
    m = MeasureKind("coherence_l1", basis)
    step = m(after.psi) - m(before.psi)
    assert step > 0
    est = [measure_susceptibility(m, path, 1.0, x) for x in STEPS]
    assert classify_divergence(est).classification == "divergent"
    for b in (basis, COMP, IncoherentBasis.bell_type_2q()):
        gap = abs(coherence_l1(after.psi, b) - coherence_l1(before.psi, b))
        assert distance(before.psi, after.psi, "l1_entrywise") >= gap - 1e-10


# parity Fourier basis


def test_parity_fourier_two_spins():
    after = g_plus(math.pi / 2)
    basis = parity_fourier_basis(2, G_MINUS, after)
    assert coherence_l1(G_MINUS, basis) == pytest.approx(0.0, abs=1e-12)
    assert coherence_l1(after, basis) == pytest.approx(1.0, abs=1e-12)
    bell = IncoherentBasis.bell_type_2q()
    assert coherence_l1(G_MINUS, bell) < coherence_l1(after, bell)


def test_parity_fourier_eight_spins():
    p_before = ground_state(build_xy_chain(8, 0.6, 0.79)).state
    p_after = ground_state(build_xy_chain(8, 0.6, 0.81)).state
    basis = parity_fourier_basis(8, p_before, p_after)
    assert coherence_l1(p_before, basis) < 1e-8
    assert coherence_l1(p_after, basis) > 0.1


def test_parity_fourier_errors():
    with pytest.raises(SameParityError):
        parity_fourier_basis(2, G_MINUS, np.array([0, 1, -1, 0]) / math.sqrt(2))
    with pytest.raises(NotParityEigenstatesError):
        parity_fourier_basis(2, G_MINUS, np.array([1, 1, 0, 0]) / math.sqrt(2))


# distance bound on measure changes


@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 3])
def test_distance_bound_along_path(theta):
    path = radial(theta)
    measures = [
        MeasureKind("coherence_l1", COMP),
        MeasureKind("geometric_coherence", COMP, "trace"),
        MeasureKind("geometric_coherence", COMP, "hilbert_schmidt"),
        MeasureKind("geometric_entanglement"),
    ]
    for lam in np.linspace(0.5, 1.5, 21):
        for m in measures:
            lhs, rhs = verify_theorem1_bound(m, path, lam, 1e-2)
            assert lhs <= rhs + 1e-10


def test_distance_bound_across_crossing_is_order_one():
    m = MeasureKind("coherence_l1", COMP)
    lhs, rhs = verify_theorem1_bound(m, radial(math.pi / 4), 0.995, 1e-2)
    assert lhs > 0.2 and lhs <= rhs + 1e-10


def test_distance_bound_constant_curve():
    path = StatePath(ModelSpec(), CurveSpec("0.2", "0.3"))
    assert verify_theorem1_bound(MeasureKind("coherence_l1", COMP), path, 0.0, 1e-2) == (0.0, 0.0)


def test_distance_bound_rejects_mismatched_distance():
    with pytest.raises(ValueError):
        verify_theorem1_bound(MeasureKind("coherence_l1", COMP), radial(0.3), 1.0, 1e-2, "trace")


def test_bound_pair_random_mixed_states(rng):
    m = MeasureKind("geometric_coherence", IncoherentBasis.computational(3), "trace")
    for _ in range(10):
        lhs, rhs = bound_pair(m, random_density(rng, 3), random_density(rng, 3))
        assert lhs <= rhs + 1e-10
