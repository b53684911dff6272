"""Figures of merit: entropy, non-equilibrium free energy, trace distance, crossings."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DimensionError, InvalidStateError

EIG_CLAMP = 1e-12


@dataclass(frozen=True)
class MeritCurve:
    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise DimensionError("times and values must be 1-D of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"curve {self.label!r} has non-finite values")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


def _hermitian_eigvalsh(rho: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, split over exact block structure.

    Large evolved states are often exactly block diagonal up to a permutation
    (e.g. conserved magnetization); the spectrum is the union of block spectra.
    """
    n = rho.shape[0]
    if n <= 64:
        return np.linalg.eigvalsh(rho)
    ncomp, labels = connected_components(csr_matrix(rho != 0), directed=False)
    if ncomp == 1:
        return np.linalg.eigvalsh(rho)
    out = []
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        out.append(np.linalg.eigvalsh(rho[np.ix_(idx, idx)]))
    return np.sort(np.concatenate(out))


def _check_hermitian(rho, tol=1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"expected a square matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    return rho


def entropy_from_spectrum(w) -> float:
    w = np.asarray(w, dtype=float)
    w = w[w > EIG_CLAMP]
    return float(-np.sum(w * np.log(w)))


def von_neumann_entropy(rho) -> float:
    """Entropy in nats; eigenvalues within 1e-12 of zero contribute nothing."""
    rho = _check_hermitian(rho)
    return entropy_from_spectrum(_hermitian_eigvalsh(rho))


def energy(rho, H) -> float:
    rho = np.asarray(rho)
    H = np.asarray(H)
    if rho.shape != H.shape:
        raise DimensionError(f"rho {rho.shape} and H {H.shape} differ")
    # Tr[H rho] without forming the product
    return float(np.real(np.sum(H.T * rho)))


def f_neq(rho, H, T: float) -> float:
    """Non-equilibrium free energy ``<H> - T S``."""
    if T < 0:
        raise ValueError("temperature must be non-negative")
    rho = _check_hermitian(rho)
    e = energy(rho, H)
    if T == 0:
        return e
    return e - T * von_neumann_entropy(rho)


def gibbs_state(H, T: float) -> np.ndarray:
    """Thermal state of ``H``; ground-state projector (uniform on degeneracy) at T=0."""
    H = np.asarray(H, dtype=complex)
    E, V = np.linalg.eigh(H)
    if T == 0:
        w = (np.abs(E - E[0]) < 1e-12).astype(float)
    else:
        w = np.exp(-(E - E[0]) / T)
    w /= w.sum()
    return (V * w) @ V.conj().T


def free_energy_equilibrium(H, T: float) -> float:
    """``-T ln Z`` computed from the spectrum of ``H``."""
    E = np.linalg.eigvalsh(np.asarray(H, dtype=complex))
    if T == 0:
        return float(E[0])
    return float(E[0] - T * np.log(np.sum(np.exp(-(E - E[0]) / T))))


def trace_distance(rho, sigma) -> float:
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise DimensionError(f"shapes {rho.shape} and {sigma.shape} differ")
    A = rho - sigma
    A = 0.5 * (A + A.conj().T)
    return float(0.5 * np.sum(np.abs(_hermitian_eigvalsh(A))))


def crossing_time(a: MeritCurve, b: MeritCurve) -> float | None:
    """First grid-bracketed sign change of ``a - b``, linearly interpolated.

    Accuracy is bounded by the grid spacing. Returns ``None`` if the curves
    never change order. Samples where the curves touch exactly are skipped so
    that a tangency at ``t=0`` is not reported.
    """
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise DimensionError("curves must share a time grid")
    d = a.values - b.values
    t = a.times
    nz = np.flatnonzero(d != 0)
    for i, j in zip(nz[:-1], nz[1:]):
        if np.sign(d[i]) != np.sign(d[j]):
            return float(t[i] + (t[j] - t[i]) * d[i] / (d[i] - d[j]))
    return None


def fit_decay_rate(times, values, window: tuple[float, float], floor: float = 0.0) -> float:
    """Least-squares exponential rate of ``values - floor`` inside ``window``."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float) - floor
    mask = (t >= window[0]) & (t <= window[1]) & (y > 0)
    if mask.sum() < 2:
        raise ValueError("not enough positive samples in the fit window")
    slope = np.polyfit(t[mask], np.log(y[mask]), 1)[0]
    return float(-slope)
