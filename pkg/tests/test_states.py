import math

import numpy as np
import pytest

from qptprobe.errors import DimensionMismatchError, NotNormalizedError
from qptprobe.measures import distance
from qptprobe.model import CurveSpec, ModelSpec, build_xy_two_spin
from qptprobe.states import (
    IncoherentBasis,
    StatePath,
    as_density,
    change_basis,
    dephase,
    gibbs_state,
    ground_state,
    product_state,
    projector,
)

from conftest import random_density, random_hermitian

G_MINUS = np.array([0, 1, 1, 0]) / math.sqrt(2)


def g_plus(theta):
    return np.array([math.cos(theta / 2), 0, 0, math.sin(theta / 2)])


def test_ground_state_below_unit_radius():
    gs = ground_state(build_xy_two_spin(0.5, 0.5))
    np.testing.assert_allclose(gs.state, G_MINUS, atol=1e-12)
    assert gs.energy == pytest.approx(-1.0, abs=1e-12)
    assert not gs.degenerate


def test_ground_state_above_unit_radius():
    gs = ground_state(build_xy_two_spin(1.0, 1.0))
    np.testing.assert_allclose(gs.state, g_plus(math.pi / 4), atol=1e-12)
    assert gs.energy == pytest.approx(-math.sqrt(2), abs=1e-12)


def test_ground_state_degenerate_at_crossing():
    gs = ground_state(build_xy_two_spin(0.6, 0.8))
    assert gs.degenerate and gs.gap < 1e-9


def test_ground_energy_is_minimum_eigenvalue(rng):
    h = random_hermitian(rng, 8)
    gs = ground_state(h)
    assert gs.energy == pytest.approx(np.linalg.eigvalsh(h)[0], abs=1e-12)
    assert np.linalg.norm(h @ gs.state - gs.energy * gs.state) <= 1e-9


def test_gibbs_infinite_temperature():
    rho = gibbs_state(build_xy_two_spin(0.3, 0.4), 0.0)
    np.testing.assert_allclose(rho, np.eye(4) / 4, atol=1e-15)


def test_gibbs_low_temperature_approaches_ground_state():
    h = build_xy_two_spin(1.0, 1.0)
    rho = gibbs_state(h, 50.0)
    assert distance(rho, projector(ground_state(h).state), "trace") <= 1e-6


def test_gibbs_diagonal():
    rho = gibbs_state(np.diag([-1.0, 1.0]), math.log(2))
    np.testing.assert_allclose(rho, np.diag([2 / 2.5, 0.5 / 2.5]), atol=1e-15)


@pytest.mark.parametrize("beta", [0.0, 0.1, 1.0, 10.0, 200.0])
def test_gibbs_is_density_matrix(rng, beta):
    rho = gibbs_state(random_hermitian(rng, 6), beta)
    assert abs(np.trace(rho).real - 1) <= 1e-12
    assert np.max(np.abs(rho - rho.conj().T)) <= 1e-12
    assert np.linalg.eigvalsh(rho).min() >= -1e-10


def test_gibbs_rejects_infinite_beta():
    with pytest.raises(ValueError):
        gibbs_state(np.eye(2), math.inf)


def test_dephase_diagonal_unchanged():
    rho = np.diag([0.2, 0.3, 0.5]).astype(complex)
    np.testing.assert_allclose(dephase(rho, IncoherentBasis.computational(3)), rho, atol=1e-15)


def test_dephase_plus_state():
    plus = np.array([1, 1]) / math.sqrt(2)
    np.testing.assert_allclose(dephase(projector(plus), IncoherentBasis.computational(2)), np.eye(2) / 2, atol=1e-15)


def test_dephase_g_plus():
    out = dephase(projector(g_plus(math.pi / 4)), IncoherentBasis.computational(4))
    c2, s2 = math.cos(math.pi / 8) ** 2, math.sin(math.pi / 8) ** 2
    np.testing.assert_allclose(out, np.diag([c2, 0, 0, s2]), atol=1e-15)


def test_dephase_is_idempotent_projection(rng):
    rho = random_density(rng, 4)
    basis = IncoherentBasis.bell_type_2q()
    once = dephase(rho, basis)
    assert np.max(np.abs(dephase(once, basis) - once)) <= 1e-12
    assert abs(np.trace(once) - 1) <= 1e-12


def test_change_basis_identity(rng):
    rho = random_density(rng, 3)
    np.testing.assert_allclose(change_basis(rho, IncoherentBasis.computational(3)), rho, atol=1e-15)


def test_change_basis_bell_type():
    out = change_basis(projector(G_MINUS), IncoherentBasis.bell_type_2q())
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_change_basis_preserves_spectrum(rng):
    rho = random_density(rng, 4)
    out = change_basis(rho, IncoherentBasis.bell_type_2q())
    np.testing.assert_allclose(np.linalg.eigvalsh(out), np.linalg.eigvalsh(rho), atol=1e-12)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        dephase(np.eye(2) / 2, IncoherentBasis.computational(4))


def test_basis_must_be_unitary():
    with pytest.raises(ValueError):
        IncoherentBasis(np.array([[1, 1], [0, 1]]))


def test_as_density_checks_trace():
    with pytest.raises(NotNormalizedError):
        as_density(np.eye(2))


def test_product_state_bit_order():
    assert np.flatnonzero(product_state("01"))[0] == 1


def test_path_flags_crossing_and_memoizes():
    path = StatePath(ModelSpec(), CurveSpec.radial(math.pi / 4))
    assert path.at(1.0).crossing
    assert not path.at(0.9).crossing
    assert path.at(0.9) is path.at(0.9)


def test_path_thermal_point_has_no_vector():
    path = StatePath(ModelSpec(), CurveSpec.radial(math.pi / 4, beta="50"))
    point = path.at(1.5)
    assert point.psi is None and point.state.shape == (4, 4)
    zero = StatePath(ModelSpec(), CurveSpec.radial(math.pi / 4)).at(1.5)
    assert distance(point.rho, zero.rho, "trace") <= 1e-6
