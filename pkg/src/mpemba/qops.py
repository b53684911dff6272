"""Dense operator algebra and state constructors.

Operators are plain complex ``numpy.ndarray`` objects. Basis convention for a
single spin: ``|up> = (1, 0)``, ``|down> = (0, 1)`` so that ``sigma_z|up> = +|up>``.
Site 0 is the leftmost Kronecker factor.
"""
from __future__ import annotations

from functools import reduce

import numpy as np

from .errors import DimensionError, InvalidStateError, SystemTooLargeError

MAX_DIM = 4096  # L <= 12 spins

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |down><up|
SIGMA_PLUS = SIGMA_MINUS.conj().T.copy()
IDENTITY_2 = np.eye(2, dtype=complex)

UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)


def as_operator(a, hermitian: bool = False) -> np.ndarray:
    """Return ``a`` as a square complex array, optionally checking Hermiticity."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"operator must be square, got shape {a.shape}")
    if hermitian and np.max(np.abs(a - a.conj().T), initial=0.0) > 1e-12:
        raise DimensionError("operator flagged hermitian is not Hermitian")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def kron(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    a = as_operator(a)
    b = as_operator(b)
    dim = a.shape[0] * b.shape[0]
    if dim > max_dim:
        raise SystemTooLargeError(f"dimension {dim} exceeds cap {max_dim}")
    return np.kron(a, b)


def site_operator(op, site: int, L: int, max_dim: int = MAX_DIM) -> np.ndarray:
    """Embed a single-spin operator at ``site`` of an ``L``-spin register."""
    op = as_operator(op)
    if op.shape != (2, 2):
        raise DimensionError("site operators must be 2x2")
    if not 0 <= site < L:
        raise IndexError(f"site {site} out of range for L={L}")
    if 2**L > max_dim:
        raise SystemTooLargeError(f"2**{L} exceeds cap {max_dim}")
    factors = [op if k == site else IDENTITY_2 for k in range(L)]
    return reduce(np.kron, factors)


def collective_ops(L: int, max_dim: int = MAX_DIM):
    """Return ``(S_minus, S_plus, S_z)`` summed over ``L`` sites."""
    if L < 1:
        raise ValueError("L must be >= 1")
    s_minus = sum(site_operator(SIGMA_MINUS, i, L, max_dim) for i in range(L))
    s_z = 0.5 * sum(site_operator(SIGMA_Z, i, L, max_dim) for i in range(L))
    return s_minus, dagger(s_minus).copy(), s_z


def magnetization(L: int) -> np.ndarray:
    """Diagonal of ``S_z`` in the computational basis (cheap, no matrices)."""
    idx = np.arange(2**L)
    downs = np.array([bin(i).count("1") for i in idx])
    return 0.5 * (L - 2 * downs)


def product_state(spins: str) -> np.ndarray:
    """Computational basis ket from a string like ``"uudd"``."""
    index = 0
    for ch in spins:
        if ch not in "ud":
            raise ValueError(f"bad spin label {ch!r}")
        index = 2 * index + (ch == "d")
    psi = np.zeros(2 ** len(spins), dtype=complex)
    psi[index] = 1.0
    return psi


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def check_pure_state(psi, tol: float = 1e-12) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise InvalidStateError("pure state must be a vector")
    if abs(np.vdot(psi, psi).real - 1.0) > tol:
        raise InvalidStateError("pure state is not normalized")
    return psi


def density_violations(rho, tol: float = 1e-10) -> list[str]:
    """List the density-matrix invariants that ``rho`` breaks (empty if valid)."""
    rho = np.asarray(rho)
    problems = []
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return ["not square"]
    tr = np.trace(rho)
    if abs(tr.imag) > tol or abs(tr.real - 1.0) > tol:
        problems.append(f"trace {tr} != 1")
    herm = np.max(np.abs(rho - rho.conj().T), initial=0.0)
    if herm > tol:
        problems.append(f"non-Hermitian by {herm:.3g}")
    else:
        wmin = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
        if wmin < -tol:
            problems.append(f"negative eigenvalue {wmin:.3g}")
    return problems


def is_density_matrix(rho, tol: float = 1e-10) -> bool:
    return not density_violations(rho, tol)


def check_density_matrix(rho, tol: float = 1e-10) -> np.ndarray:
    rho = as_operator(rho)
    problems = density_violations(rho, tol)
    if problems:
        raise InvalidStateError("invalid density matrix: " + "; ".join(problems))
    return rho


def bloch_to_rho(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise DimensionError("Bloch vector must have 3 components")
    if np.linalg.norm(r) > 1 + 1e-12:
        raise InvalidStateError(f"|r| = {np.linalg.norm(r)} > 1")
    return 0.5 * (IDENTITY_2 + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z)


def rho_to_bloch(rho) -> np.ndarray:
    rho = as_operator(rho)
    if rho.shape != (2, 2):
        raise DimensionError("Bloch vector only defined for qubits")
    return np.array([np.trace(rho @ s).real for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)])


def dfs_state(L: int) -> np.ndarray:
    """Single-excitation dark state, alternating sign starting at ``-1`` on site 0.

    The alternating signs cancel under ``S^-`` only for even ``L``.
    """
    if L < 2 or L % 2:
        raise ValueError(f"alternating dark state needs even L >= 2, got {L}")
    psi = np.zeros(2**L, dtype=complex)
    for i in range(L):
        psi += (-1) ** (i + 1) * product_state("d" * i + "u" + "d" * (L - i - 1))
    return psi / np.sqrt(L)


def half_up_state(L: int) -> np.ndarray:
    """Zero-magnetization product state: first half down, second half up."""
    if L % 2:
        raise ValueError(f"half-up state needs even L, got {L}")
    return product_state("d" * (L // 2) + "u" * (L // 2))


def dicke_basis_states(L: int) -> dict[str, np.ndarray]:
    """Named states used by the collective-decay experiments.

    Keys: ``all_up``, plus ``dfs`` and ``half_up`` for even L and, for L == 2,
    ``singlet`` and ``triplet``.
    """
    states = {"all_up": product_state("u" * L)}
    if L >= 2 and L % 2 == 0:
        states["dfs"] = dfs_state(L)
        states["half_up"] = half_up_state(L)
    if L == 2:
        states["singlet"] = (product_state("ud") - product_state("du")) / np.sqrt(2)
        states["triplet"] = product_state("uu")
    return states


def spin_chain_hamiltonian(L: int, Jz: float) -> np.ndarray:
    """``Jz * sum_i sigma^z_i / 2`` as a dense diagonal matrix."""
    return np.diag(Jz * magnetization(L)).astype(complex)


def annihilation(ncut: int) -> np.ndarray:
    """Truncated bosonic lowering operator on ``ncut`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, ncut)), k=1).astype(complex)


def coherent_state(alpha: complex, ncut: int) -> np.ndarray:
    """Fock-truncated coherent ket, renormalized after truncation."""
    n = np.arange(ncut)
    logfact = np.array([np.sum(np.log(np.arange(1, k + 1))) for k in n])
    amp = np.zeros(ncut, dtype=complex)
    if alpha == 0:
        amp[0] = 1.0
        return amp
    amp = np.exp(n * np.log(complex(alpha)) - 0.5 * logfact - 0.5 * abs(alpha) ** 2)
    return amp / np.linalg.norm(amp)
