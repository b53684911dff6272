"""Lindblad models, superoperators and time evolution.

Vectorization is column stacking: ``vec(A X B) = (B^T kron A) vec(X)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import qops
from .errors import DimensionError, IntegrationError, SystemTooLargeError

SUPEROP_MAX_DIM = 64
TRACE_DRIFT_FAIL = 1e-6


@dataclass
class LindbladModel:
    """Hamiltonian plus ``(rate, jump operator)`` channels.

    ``charge`` optionally labels basis states with a conserved quantity: ``H``
    must not connect different labels and every jump operator must shift the
    label by a fixed amount. Evolution then runs sector by sector.
    """

    H: np.ndarray
    channels: list[tuple[float, np.ndarray]] = field(default_factory=list)
    charge: np.ndarray | None = None

    def __post_init__(self):
        self.H = qops.as_operator(self.H, hermitian=True)
        checked = []
        for rate, L in self.channels:
            L = qops.as_operator(L)
            if L.shape != self.H.shape:
                raise DimensionError(f"jump operator shape {L.shape} != H shape {self.H.shape}")
            if rate < 0 or not np.isfinite(rate):
                raise ValueError(f"rates must be finite and non-negative, got {rate}")
            checked.append((float(rate), L))
        self.channels = checked
        if self.charge is not None:
            self.charge = np.asarray(self.charge, dtype=float)
            if self.charge.shape != (self.dim,):
                raise DimensionError("charge must label every basis state")

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def active_channels(self):
        return [(r, L) for r, L in self.channels if r > 0]

    def effective_hamiltonian(self) -> np.ndarray:
        """``H - (i/2) sum_k rate_k L_k^dag L_k``."""
        if self.dim >= 64:
            K = sp.csr_matrix(self.H.shape, dtype=complex)
            for r, L in self.active_channels():
                Ls = sp.csr_matrix(L)
                K = K + r * (Ls.conj().T @ Ls)
            return self.H - 0.5j * K.toarray()
        K = sum((r * (L.conj().T @ L) for r, L in self.active_channels()),
                np.zeros_like(self.H))
        return self.H - 0.5j * K

    def max_jump_rate(self) -> float:
        """Upper bound on the total jump rate over all states."""
        total = 0.0
        for r, L in self.active_channels():
            total += r * np.linalg.eigvalsh(L.conj().T @ L)[-1]
        return float(total)


def bose_einstein(omega: float, T: float) -> float:
    if T < 0 or omega < 0:
        raise ValueError("omega and T must be non-negative")
    if T == 0:
        return 0.0
    if omega == 0:
        raise ValueError("Bose-Einstein occupation diverges at omega = 0")
    x = omega / T
    if x > 700:  # expm1 overflows; occupation underflows to zero anyway
        return 0.0
    return 1.0 / math.expm1(x)


def dissipator_apply(L, rho) -> np.ndarray:
    """``L rho L^dag - 1/2 {L^dag L, rho}``."""
    L = np.asarray(L, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if L.shape != rho.shape:
        raise DimensionError(f"shapes {L.shape} and {rho.shape} differ")
    LdL = L.conj().T @ L
    return L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)


def liouvillian_apply(model: LindbladModel, rho) -> np.ndarray:
    """Action of the Liouvillian on an arbitrary operator, no superoperator built."""
    rho = np.asarray(rho, dtype=complex)
    out = -1j * (model.H @ rho - rho @ model.H)
    for r, L in model.active_channels():
        out += r * dissipator_apply(L, rho)
    return out


def vec(rho) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = math.isqrt(v.size)
    return v.reshape(dim, dim, order="F")


def liouvillian_matrix(model: LindbladModel, max_dim: int = SUPEROP_MAX_DIM) -> np.ndarray:
    D = model.dim
    if D > max_dim:
        raise SystemTooLargeError(f"superoperator for D={D} exceeds cap D<={max_dim}")
    I = np.eye(D)
    H = model.H
    S = -1j * (np.kron(I, H) - np.kron(H.T, I))
    for r, L in model.active_channels():
        LdL = L.conj().T @ L
        S += r * (np.kron(L.conj(), L) - 0.5 * np.kron(I, LdL) - 0.5 * np.kron(LdL.T, I))
    return S


# -- model constructors -------------------------------------------------------

def davies_qubit(omega: float, gamma_minus: float, gamma_plus: float, T: float) -> LindbladModel:
    """Qubit ``H = omega sigma_z / 2`` in contact with a bosonic bath at ``T``."""
    if min(omega, gamma_minus, gamma_plus, T) < 0:
        raise ValueError("davies_qubit parameters must be non-negative")
    H = 0.5 * omega * qops.SIGMA_Z
    nbar = bose_einstein(omega, T)
    channels = [(gamma_minus * (nbar + 1), qops.SIGMA_MINUS)]
    if T > 0:
        channels.append((gamma_plus * nbar, qops.SIGMA_PLUS))
    return LindbladModel(H, channels)


def collective_model(L: int, Jz: float, Gamma: float, mu: float, T: float) -> LindbladModel:
    """Spins with collective decay at ``Gamma`` and local thermal channels at ``mu``.

    Channels: ``(Gamma, S^-_c)`` followed by ``(mu(1+N), S^-_k), (mu N, S^+_k)``
    for each site ``k``; ``N`` is the occupation at gap ``Jz``.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if min(Gamma, mu, T) < 0:
        raise ValueError("rates and temperature must be non-negative")
    nbar = bose_einstein(abs(Jz), T) if Jz != 0 else 0.0
    s_minus, _, _ = qops.collective_ops(L)
    H = qops.spin_chain_hamiltonian(L, Jz)
    channels = [(Gamma, s_minus)]
    for k in range(L):
        channels.append((mu * (1 + nbar), qops.site_operator(qops.SIGMA_MINUS, k, L)))
        channels.append((mu * nbar, qops.site_operator(qops.SIGMA_PLUS, k, L)))
    return LindbladModel(H, channels, charge=qops.magnetization(L))


def damped_oscillator_model(Jz: float, Ntot: float, gamma: float, ncut: int) -> LindbladModel:
    """Truncated oscillator ``H = Jz (a^dag a - N/2)`` damped at ``N gamma``."""
    if ncut < 2:
        raise ValueError("ncut must be >= 2")
    a = qops.annihilation(ncut)
    H = Jz * (a.conj().T @ a - 0.5 * Ntot * np.eye(ncut))
    return LindbladModel(H, [(Ntot * gamma, a)], charge=None)


# -- time evolution -----------------------------------------------------------

def expm(A) -> np.ndarray:
    """Scaling-and-squaring Pade matrix exponential."""
    return scipy.linalg.expm(np.asarray(A))


def default_rk4_step(model: LindbladModel) -> float:
    """``1e-3 / max(rate, spectral range of H)``."""
    E = np.linalg.eigvalsh(model.H)
    scale = max([E[-1] - E[0]] + [r for r, _ in model.channels])
    return 1e-3 / scale if scale > 0 else 1e-3


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-D array")
    if grid[0] != 0:
        raise ValueError("grid must start at t = 0")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    return grid


def _substeps(delta: float, h: float) -> tuple[int, float]:
    n = max(1, math.ceil(delta / h - 1e-9))
    return n, delta / n


def _guard(rho_trace: complex, biggest: float, step: int, t: float):
    drift = abs(rho_trace - 1.0)
    if drift > TRACE_DRIFT_FAIL or not np.isfinite(biggest) or biggest > 1 + TRACE_DRIFT_FAIL:
        raise IntegrationError(
            f"integration failed at step {step} (t={t:.6g}): trace drift {drift:.3g}, "
            f"max |rho_ij| {biggest:.3g}; reduce the step size")


class _DenseRK4:
    """RK4 on the full matrix, with sparse jump operators when that pays off."""

    def __init__(self, model: LindbladModel):
        D = model.dim
        self.heff = _maybe_sparse(model.effective_hamiltonian())
        self.jumps = [(r, _maybe_sparse(L)) for r, L in model.active_channels()]
        self.D = D

    def rhs(self, rho):
        X = self.heff @ rho
        out = -1j * (X - X.conj().T)
        for r, L in self.jumps:
            A = L @ rho
            out += r * (L @ A.conj().T).conj().T
        return out


class _PolyRK4:
    """For small D: the RK4 step for a linear ODE is a fixed matrix polynomial."""

    def __init__(self, model: LindbladModel):
        self.S = liouvillian_matrix(model)
        self.cache = {}

    def step_matrix(self, h):
        key = round(h, 15)
        if key not in self.cache:
            A = self.S * h
            A2 = A @ A
            A3 = A2 @ A
            self.cache[key] = np.eye(A.shape[0]) + A + A2 / 2 + A3 / 6 + A3 @ A / 24
        return self.cache[key]


def _maybe_sparse(A):
    if A.shape[0] >= 64 and np.count_nonzero(A) < 0.1 * A.size:
        return sp.csr_matrix(A)
    return A


class _SectorRK4:
    """RK4 on the blocks of a state that is block diagonal in a conserved charge."""

    def __init__(self, model: LindbladModel):
        q = model.charge
        labels = np.unique(q)
        self.index = [np.flatnonzero(q == v) for v in labels]
        where = {v: k for k, v in enumerate(labels)}
        H = model.H
        off = np.abs(H) > 0
        if np.any(off & (q[:, None] != q[None, :])):
            raise ValueError("H mixes charge sectors")
        heff = model.effective_hamiltonian()
        self.heff = [sp.csr_matrix(heff[np.ix_(ix, ix)]) for ix in self.index]
        # jump terms per (source sector, target sector): sparse-enough blocks are
        # folded into one superoperator, denser ones applied as L rho L^dag
        self.jumps: dict[tuple[int, int], sp.csr_matrix] = {}
        self.products: list[tuple[int, int, float, sp.csr_matrix]] = []
        for r, L in model.active_channels():
            rows, cols = np.nonzero(L)
            shifts = np.unique(np.round(q[rows] - q[cols], 12))
            if shifts.size > 1:
                raise ValueError("jump operator does not shift the charge uniformly")
            if shifts.size == 0:
                continue
            for src, ix in enumerate(self.index):
                dst_label = labels[src] + shifts[0]
                dst = where.get(dst_label)
                if dst is None:
                    continue
                blk = sp.csr_matrix(L[np.ix_(self.index[dst], ix)])
                if blk.nnz == 0:
                    continue
                if blk.nnz >= 2 * ix.size:
                    self.products.append((src, dst, r, blk))
                    continue
                J = r * sp.kron(blk.conj(), blk, format="csr")
                key = (src, dst)
                self.jumps[key] = self.jumps[key] + J if key in self.jumps else J
        self.D = model.dim

    def split(self, rho):
        blocks = [rho[np.ix_(ix, ix)].copy() for ix in self.index]
        inside = sum(np.sum(np.abs(b) ** 2) for b in blocks)
        if np.sum(np.abs(rho) ** 2) - inside > 1e-26:
            return None
        return blocks

    def join(self, blocks):
        rho = np.zeros((self.D, self.D), dtype=complex)
        for ix, b in zip(self.index, blocks):
            rho[np.ix_(ix, ix)] = b
        return rho

    def rhs(self, blocks):
        out = []
        for Hb, b in zip(self.heff, blocks):
            X = Hb @ b
            out.append(-1j * (X - X.conj().T))
        for (src, dst), J in self.jumps.items():
            n = out[dst].shape[0]
            out[dst] += (J @ vec(blocks[src])).reshape(n, n, order="F")
        for src, dst, r, blk in self.products:
            A = blk @ blocks[src]
            out[dst] += r * (blk @ A.conj().T).conj().T
        return out


def _rk4_blocks(rhs, blocks, h):
    k1 = rhs(blocks)
    k2 = rhs([b + 0.5 * h * k for b, k in zip(blocks, k1)])
    k3 = rhs([b + 0.5 * h * k for b, k in zip(blocks, k2)])
    k4 = rhs([b + h * k for b, k in zip(blocks, k3)])
    return [b + (h / 6) * (a + 2 * c + 2 * d + e) for b, a, c, d, e in zip(blocks, k1, k2, k3, k4)]


def iter_evolve(model: LindbladModel, rho0, grid: Sequence[float], method: str = "exact",
                dt: float | None = None) -> Iterator[np.ndarray]:
    """Yield ``rho(t)`` for every ``t`` in ``grid`` (which must start at 0).

    ``method`` is ``"exact"`` (superoperator exponential), ``"rk4"`` (fixed
    step ``dt``, default :func:`default_rk4_step`) or ``"auto"`` (exact when
    ``D <= 16``).
    """
    grid = _check_grid(grid)
    rho = qops.as_operator(rho0).copy()
    if rho.shape != model.H.shape:
        raise DimensionError("initial state dimension does not match model")
    if method == "auto":
        method = "exact" if model.dim <= 16 else "rk4"
    if method == "exact":
        yield from _iter_exact(model, rho, grid)
    elif method == "rk4":
        yield from _iter_rk4(model, rho, grid, dt or default_rk4_step(model))
    else:
        raise ValueError(f"unknown method {method!r}")


def evolve(model: LindbladModel, rho0, grid, method: str = "exact", dt: float | None = None):
    return list(iter_evolve(model, rho0, grid, method, dt))


def _iter_exact(model, rho, grid):
    S = liouvillian_matrix(model)
    D = model.dim
    v = vec(rho)
    cache = {}
    yield rho
    for t0, t1 in zip(grid[:-1], grid[1:]):
        key = round(t1 - t0, 12)
        if key not in cache:
            cache[key] = expm(S * (t1 - t0))
        v = cache[key] @ v
        out = unvec(v, D)
        yield 0.5 * (out + out.conj().T)


def _iter_rk4(model, rho, grid, h):
    step = 0
    yield rho
    if model.dim <= 16:
        poly = _PolyRK4(model)
        v = vec(rho)
        for t0, t1 in zip(grid[:-1], grid[1:]):
            n, hh = _substeps(t1 - t0, h)
            P = poly.step_matrix(hh)
            for _ in range(n):
                v = P @ v
                step += 1
                tr = v[:: model.dim + 1].sum()
                _guard(tr, np.max(np.abs(v)), step, t0)
                v = v / tr
            out = unvec(v, model.dim)
            yield 0.5 * (out + out.conj().T)
        return

    sector = _SectorRK4(model) if model.charge is not None else None
    blocks = sector.split(rho) if sector is not None else None
    if blocks is not None:
        rhs, join = sector.rhs, sector.join
        state = blocks
    else:
        dense = _DenseRK4(model)
        rhs, join = (lambda bl: [dense.rhs(bl[0])]), (lambda bl: bl[0])
        state = [rho]
    for t0, t1 in zip(grid[:-1], grid[1:]):
        n, hh = _substeps(t1 - t0, h)
        for _ in range(n):
            state = _rk4_blocks(rhs, state, hh)
            step += 1
            tr = sum(np.trace(b) for b in state)
            biggest = max(np.max(np.abs(b)) for b in state)
            _guard(tr, biggest, step, t0)
            state = [0.5 * (b + b.conj().T) / tr.real for b in state]
        yield join(state)
