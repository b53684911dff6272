import numpy as np
import pytest

from mpemba import lindblad, merit, qops, spectral
from mpemba.errors import NoCoherenceError, PreconditionError
from mpemba.partner import construct_partner, merit_curve, verify_mpemba

from conftest import MIXED_BLOCH, PURE_BLOCH


@pytest.fixture
def hot_partner(hot_qubit):
    rho = qops.bloch_to_rho(MIXED_BLOCH)
    return hot_qubit, rho, construct_partner(rho, hot_qubit.H, spectral.decompose(hot_qubit), 10.0)


def test_partner_is_diagonal_unitary_image(hot_partner):
    model, rho, p = hot_partner
    assert np.allclose(p.U @ p.U.conj().T, np.eye(2), atol=1e-12)
    assert abs(p.rho_prime[0, 1]) < 1e-12
    # same spectrum as rho
    assert np.allclose(np.linalg.eigvalsh(p.rho_prime), np.linalg.eigvalsh(rho), atol=1e-12)


def test_partner_populations_oracle(hot_partner):
    # larger eigenvalue of rho on the excited level: (1 + |r|)/2
    _, _, p = hot_partner
    r = np.linalg.norm(MIXED_BLOCH)
    assert np.isclose(p.rho_prime[0, 0].real, 0.5 * (1 + r), atol=1e-12)
    assert np.isclose(p.rho_prime[0, 0].real, 0.785457, atol=1e-6)


def test_partner_kills_slow_mode_and_raises_free_energy(hot_partner):
    _, rho, p = hot_partner
    assert abs(p.overlap_l2) <= 1e-8 and abs(p.overlap_l2_dagger) <= 1e-8
    assert p.f_gap > 0


def test_zero_temperature_partner_is_excited_projector(cold_qubit):
    rho = qops.bloch_to_rho(PURE_BLOCH / np.linalg.norm(PURE_BLOCH))
    p = construct_partner(rho, cold_qubit.H, spectral.decompose(cold_qubit), 0.0)
    assert np.allclose(p.rho_prime, qops.projector(qops.UP), atol=1e-10)


def test_no_coherence_rejected(hot_qubit):
    with pytest.raises(NoCoherenceError):
        construct_partner(np.diag([0.3, 0.7]), hot_qubit.H, spectral.decompose(hot_qubit), 10)


def test_degenerate_hamiltonian_rejected():
    model = lindblad.LindbladModel(np.zeros((2, 2)), [(1.0, qops.SIGMA_MINUS)])
    with pytest.raises(ValueError):
        construct_partner(qops.bloch_to_rho([0.5, 0, 0]), model.H, spectral.decompose(model), 1.0)


def test_verify_precondition(hot_partner):
    model, rho, p = hot_partner
    grid = np.linspace(0, 1, 11)
    with pytest.raises(PreconditionError):
        verify_mpemba(model, p.rho_prime, rho, "fneq", grid, 10.0)


def test_unknown_metric(hot_qubit):
    with pytest.raises(ValueError):
        merit_curve(hot_qubit, np.eye(2) / 2, [0, 1], "purity", 10)


def test_partner_decays_faster_asymptotically(hot_partner):
    model, rho, p = hot_partner
    grid = np.linspace(0, 3, 301)
    ref = merit.gibbs_state(model.H, 10)
    a = merit_curve(model, rho, grid, "tracedist", 10, ref)
    b = merit_curve(model, p.rho_prime, grid, "tracedist", 10, ref)
    assert b.values[-1] < a.values[-1]
