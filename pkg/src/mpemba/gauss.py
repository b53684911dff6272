"""Gaussian bosonic model: one system mode star-coupled to a harmonic bath.

Quadratures are interleaved, ``R = (q_0, p_0, q_1, p_1, ...)``, with
``[R_j, R_k] = i Omega_jk`` and vacuum variance 1/2. For
``H = 1/2 R^T Hmat R`` the moments obey ``dr/dt = Omega Hmat r`` so the
evolution is the symplectic map ``S(t) = exp(Omega Hmat t)``.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, IntegrationError, InvalidStateError
from .lindblad import bose_einstein, expm

SYMMETRY_TOL = 1e-10
PHYSICALITY_TOL = 1e-8
STEP_TOL = 1e-6


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class GaussianState:
    r: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        s = np.asarray(self.sigma, dtype=float)
        if r.ndim != 1 or r.size % 2 or s.shape != (r.size, r.size):
            raise DimensionError("need r of length 2N and sigma of shape 2N x 2N")
        if np.max(np.abs(s - s.T), initial=0.0) > SYMMETRY_TOL:
            raise InvalidStateError("covariance matrix is not symmetric")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "sigma", s)

    @property
    def n_modes(self) -> int:
        return self.r.size // 2

    def system_block(self) -> tuple[np.ndarray, np.ndarray]:
        return self.r[:2], self.sigma[:2, :2]

    def physicality_margin(self) -> float:
        """Smallest eigenvalue of ``sigma + (i/2) Omega`` (>= 0 when physical)."""
        M = self.sigma + 0.5j * symplectic_form(self.n_modes)
        return float(np.linalg.eigvalsh(M)[0])

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        return self.physicality_margin() >= -tol


@dataclass(frozen=True)
class QuadraticHamiltonian:
    Hmat: np.ndarray
    omegas: np.ndarray | None = None     # bath frequencies, for reference

    def __post_init__(self):
        H = np.asarray(self.Hmat, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] % 2:
            raise DimensionError("Hmat must be 2N x 2N")
        if np.max(np.abs(H - H.T)) > SYMMETRY_TOL:
            raise ValueError("Hmat must be symmetric")
        object.__setattr__(self, "Hmat", H)

    @property
    def n_modes(self) -> int:
        return self.Hmat.shape[0] // 2

    def energy(self, state: GaussianState) -> float:
        """``<H> = 1/2 (r^T Hmat r + Tr[Hmat sigma])``."""
        return 0.5 * float(state.r @ self.Hmat @ state.r + np.sum(self.Hmat * state.sigma))


@dataclass(frozen=True)
class BathSpec:
    n_bath: int
    omega_min: float
    omega_max: float
    coupling: float
    T_bath: float

    def __post_init__(self):
        if self.n_bath < 0:
            raise ValueError("n_bath must be non-negative")
        if not 0 < self.omega_min < self.omega_max:
            raise ValueError("need 0 < omega_min < omega_max")
        if self.coupling < 0:
            raise ValueError("coupling must be non-negative")
        if self.T_bath < 0:
            raise ValueError("T_bath must be non-negative")

    @property
    def frequencies(self) -> np.ndarray:
        if self.n_bath == 1:
            return np.array([0.5 * (self.omega_min + self.omega_max)])
        return np.linspace(self.omega_min, self.omega_max, self.n_bath)

    @property
    def spacing(self) -> float:
        if self.n_bath < 2:
            return self.omega_max - self.omega_min
        return (self.omega_max - self.omega_min) / (self.n_bath - 1)

    @property
    def recurrence_time(self) -> float:
        return 2 * math.pi / self.spacing

    def decay_rate(self) -> float:
        """Golden-rule energy decay rate of a resonant system mode, ``pi g^2 / 2``."""
        return 0.5 * math.pi * self.coupling ** 2


def build_star_model(omega_s: float, bath: BathSpec) -> QuadraticHamiltonian:
    """System mode 0 coupled through ``g_i q_0 q_i`` to a uniform comb of modes."""
    if omega_s <= 0:
        raise ValueError("omega_s must be positive")
    if bath.n_bath and not bath.omega_min <= omega_s <= bath.omega_max:
        warnings.warn("system frequency outside the bath window; no thermalization expected",
                      stacklevel=2)
    N = 1 + bath.n_bath
    H = np.zeros((2 * N, 2 * N))
    H[0, 0] = H[1, 1] = omega_s
    w = bath.frequencies if bath.n_bath else np.array([])
    g = bath.coupling * math.sqrt(bath.spacing)
    for i, wi in enumerate(w, start=1):
        H[2 * i, 2 * i] = H[2 * i + 1, 2 * i + 1] = wi
        H[0, 2 * i] = H[2 * i, 0] = g
    return QuadraticHamiltonian(H, w)


def initial_state(kind: str, value: float | complex, bath: BathSpec) -> GaussianState:
    """Product state: system ``coherent`` (alpha), ``squeezed_vacuum`` (s) or
    ``thermal`` (mean occupation), bath modes thermal at ``bath.T_bath``."""
    N = 1 + bath.n_bath
    r = np.zeros(2 * N)
    sigma = np.zeros((2 * N, 2 * N))
    if kind == "coherent":
        a = complex(value)
        r[0], r[1] = math.sqrt(2) * a.real, math.sqrt(2) * a.imag
        sigma[:2, :2] = 0.5 * np.eye(2)
    elif kind == "squeezed_vacuum":
        s = float(value)
        sigma[:2, :2] = 0.5 * np.diag([math.exp(-2 * s), math.exp(2 * s)])
    elif kind == "thermal":
        n = float(value)
        if n < 0:
            raise ValueError("thermal occupation must be non-negative")
        sigma[:2, :2] = (n + 0.5) * np.eye(2)
    else:
        raise ValueError(f"unknown initial state kind {kind!r}")
    if bath.n_bath:
        occ = np.array([bose_einstein(w, bath.T_bath) for w in bath.frequencies])
        idx = np.arange(2, 2 * N)
        sigma[idx, idx] = np.repeat(occ + 0.5, 2)
    return GaussianState(r, sigma)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid[0] != 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must start at 0 and increase strictly")
    return grid


def evolve_gaussian(H: QuadraticHamiltonian, state0: GaussianState, grid,
                    check_every: int = 0) -> list[GaussianState]:
    """Exact symplectic evolution sampled on ``grid``.

    Step propagators are cached by step length, so a uniform grid costs one
    matrix exponential. With ``check_every > 0`` physicality is verified on
    every that-many grid points and an :class:`IntegrationError` is raised
    on a violation beyond 1e-6.
    """
    if H.n_modes != state0.n_modes:
        raise DimensionError("Hamiltonian and state have different mode counts")
    grid = _check_grid(grid)
    A = symplectic_form(H.n_modes) @ H.Hmat
    cache: dict[float, np.ndarray] = {}
    S = np.eye(A.shape[0])
    out = [state0]
    for k, dt in enumerate(np.diff(grid), start=1):
        key = round(float(dt), 14)
        if key not in cache:
            cache[key] = expm(A * dt).real
        S = cache[key] @ S
        sigma = S @ state0.sigma @ S.T
        st = GaussianState(S @ state0.r, 0.5 * (sigma + sigma.T))
        if check_every and k % check_every == 0 and st.physicality_margin() < -STEP_TOL:
            raise IntegrationError(f"physicality lost at t={grid[k]:.4g}")
        out.append(st)
    return out


def symplectic_eigenvalues(sigma) -> np.ndarray:
    """Williamson spectrum: moduli of the eigenvalues of ``i Omega sigma``, one per mode."""
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ sigma))
    return np.sort(ev)[::2]


def correlation_blocks(state: GaussianState) -> tuple[np.ndarray, float]:
    """Frobenius norms of the system-mode cross blocks ``sigma_{0,i}`` and their
    double-counted total ``sum_i (|sigma_0i| + |sigma_i0|)``."""
    if state.n_modes < 2:
        raise ValueError("need at least one bath mode")
    s = state.sigma
    row = s[:2, 2:].reshape(2, -1, 2)
    col = s[2:, :2].reshape(-1, 2, 2)
    per_mode = np.sqrt(np.sum(row ** 2, axis=(0, 2)))
    total = float(per_mode.sum() + np.sqrt(np.sum(col ** 2, axis=(1, 2))).sum())
    return per_mode, total


def mode_entropy(nu: float) -> float:
    if nu < 0.5 - 1e-8:
        raise InvalidStateError(f"symplectic eigenvalue {nu} < 1/2")
    if nu <= 0.5 + 1e-12:
        return 0.0
    return (nu + 0.5) * math.log(nu + 0.5) - (nu - 0.5) * math.log(nu - 0.5)


def system_energy(state: GaussianState, omega_s: float) -> float:
    """``omega_s <a^dag a>`` of the system mode (vacuum energy removed)."""
    r, s = state.system_block()
    return omega_s * (0.5 * (s[0, 0] + s[1, 1] - 1) + 0.5 * (r @ r))


def gaussian_f_neq(state: GaussianState, omega_s: float, T: float) -> float:
    """Free energy ``<H> - T S`` of the reduced system mode."""
    if T < 0:
        raise ValueError("T must be non-negative")
    _, s = state.system_block()
    det = float(np.linalg.det(s))
    if det < 0.25 - 1e-8:
        raise InvalidStateError(f"reduced block unphysical, det = {det}")
    nu = math.sqrt(max(det, 0.25))
    return system_energy(state, omega_s) - T * mode_entropy(nu)


def heatmap_csv(grid, states: list[GaussianState]) -> str:
    """``t, mode, norm`` triples for the system-bath correlation heat map."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "mode", "norm"])
    for t, st in zip(grid, states):
        per_mode, _ = correlation_blocks(st)
        for i, v in enumerate(per_mode, start=1):
            w.writerow([f"{t:.9g}", i, f"{v:.9g}"])
    return buf.getvalue()
