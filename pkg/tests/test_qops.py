import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpemba import qops
from mpemba.errors import DimensionError, InvalidStateError, SystemTooLargeError


def test_sigma_minus_lowers_up_to_down():
    assert np.allclose(qops.SIGMA_MINUS @ qops.UP, qops.DOWN)
    assert np.allclose(qops.SIGMA_MINUS @ qops.DOWN, 0)


def test_site_operator_leftmost_factor_is_site_zero():
    op = qops.site_operator(qops.SIGMA_Z, 0, 3)
    assert np.allclose(op, np.kron(qops.SIGMA_Z, np.eye(4)))


def test_site_operator_rejects_bad_site():
    with pytest.raises(IndexError):
        qops.site_operator(qops.SIGMA_Z, 3, 3)


def test_kron_cap():
    with pytest.raises(SystemTooLargeError):
        qops.kron(np.eye(64), np.eye(128))


def test_collective_ops_commutator():
    sm, sp, sz = qops.collective_ops(3)
    assert np.allclose(sp @ sm - sm @ sp, 2 * sz)


def test_magnetization_matches_sz():
    _, _, sz = qops.collective_ops(4)
    assert np.allclose(np.diag(sz).real, qops.magnetization(4))


def test_product_state_labels():
    assert np.argmax(np.abs(qops.product_state("ud"))) == 1
    with pytest.raises(ValueError):
        qops.product_state("ux")


def test_bloch_roundtrip_and_rejection():
    r = np.array([0.3, -0.2, 0.5])
    assert np.allclose(qops.rho_to_bloch(qops.bloch_to_rho(r)), r)
    with pytest.raises(InvalidStateError):
        qops.bloch_to_rho([1.0, 0.1, 0.0])
    with pytest.raises(DimensionError):
        qops.bloch_to_rho([1.0, 0.0])


def test_density_checks():
    assert qops.is_density_matrix(np.eye(2) / 2)
    assert not qops.is_density_matrix(np.diag([1.2, -0.2]))
    with pytest.raises(InvalidStateError):
        qops.check_density_matrix(np.diag([0.7, 0.7]))


def test_dfs_state_rejects_odd_length():
    with pytest.raises(ValueError):
        qops.dfs_state(3)


@pytest.mark.parametrize("L", [2, 4, 6, 8])
def test_dfs_state_is_dark_and_normalized(L):
    psi = qops.dfs_state(L)
    sm, _, _ = qops.collective_ops(L)
    assert np.isclose(np.linalg.norm(psi), 1)
    assert np.linalg.norm(sm @ psi) < 1e-12


def test_dfs_l2_is_singlet():
    s = qops.dicke_basis_states(2)
    assert abs(abs(np.vdot(s["dfs"], s["singlet"])) - 1) < 1e-12


def test_half_up_state_zero_magnetization():
    psi = qops.half_up_state(4)
    i = np.argmax(np.abs(psi))
    assert qops.magnetization(4)[i] == 0
    with pytest.raises(ValueError):
        qops.half_up_state(3)


def test_annihilation_on_coherent_state():
    psi = qops.coherent_state(0.7 + 0.2j, 40)
    a = qops.annihilation(40)
    assert np.allclose(a @ psi, (0.7 + 0.2j) * psi, atol=1e-10)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_bloch_states_are_density_matrices(x, y, z):
    r = np.array([x, y, z])
    n = np.linalg.norm(r)
    if n > 1:
        r = r / n
    assert qops.is_density_matrix(qops.bloch_to_rho(r), tol=1e-10)
