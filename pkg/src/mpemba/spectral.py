"""Liouvillian eigendecomposition and spectral reconstruction of rho(t).

Left and right eigenoperators are paired through the undaggered trace,
``Tr[l_j r_k] = delta_jk``, so the overlap of a state with mode ``k`` is
``Tr[l_k rho]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, NonDiagonalizableError
from .lindblad import LindbladModel, liouvillian_matrix, unvec, vec

COND_LIMIT = 1e10
RESIDUAL_TOL = 1e-8
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray      # (D^2,) complex, ascending |Re|
    right_ops: np.ndarray        # (D^2, D, D)
    left_ops: np.ndarray         # (D^2, D, D)

    @property
    def dim(self) -> int:
        return self.right_ops.shape[1]

    @property
    def steady_state(self) -> np.ndarray:
        return self.right_ops[0]

    def slowest_decaying(self) -> tuple[complex, np.ndarray, np.ndarray]:
        """``(lambda_2, l_2, r_2)``."""
        return self.eigenvalues[1], self.left_ops[1], self.right_ops[1]


def _order(lam: np.ndarray) -> np.ndarray:
    """Ascending |Re|, ties (within tolerance) broken by (Re, Im)."""
    first = np.argsort(np.abs(lam.real), kind="stable")
    groups, current = [], [first[0]]
    for k in first[1:]:
        if abs(abs(lam[k].real) - abs(lam[current[0]].real)) <= DEGENERACY_TOL:
            current.append(k)
        else:
            groups.append(current)
            current = [k]
    groups.append(current)
    order = []
    for g in groups:
        order.extend(sorted(g, key=lambda k: (round(lam[k].real, 9), lam[k].imag)))
    return np.array(order)


def decompose(superop) -> SpectralData:
    """Diagonalize a Liouvillian matrix (column-stacking convention).

    Raises :class:`NonDiagonalizableError` when the eigenvector matrix is
    ill-conditioned (exceptional point) or the eigenpairs fail their residual
    check.
    """
    if isinstance(superop, LindbladModel):
        superop = liouvillian_matrix(superop)
    S = np.asarray(superop, dtype=complex)
    n = S.shape[0]
    D = int(round(np.sqrt(n)))
    if D * D != n or S.shape != (n, n):
        raise DimensionError("superoperator must be D^2 x D^2")

    lam, vl, vr = scipy.linalg.eig(S, left=True, right=True)
    cond = np.linalg.cond(vr)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NonDiagonalizableError(f"eigenvector condition number {cond:.3g} > {COND_LIMIT:g}")

    order = _order(lam)
    lam, vl, vr = lam[order], vl[:, order], vr[:, order]
    # rows of W are dual to the columns of vr: W @ vr = I
    gram = vl.conj().T @ vr
    W = np.linalg.solve(gram, vl.conj().T)

    # steady state normalized to unit trace; its dual then becomes the identity
    r1 = unvec(vr[:, 0], D)
    tr = np.trace(r1)
    if abs(tr) < 1e-12:
        raise NonDiagonalizableError("zero mode has vanishing trace; no unique steady state")
    vr[:, 0] /= tr
    W[0, :] *= tr

    right = np.stack([unvec(vr[:, k], D) for k in range(n)])
    # Tr[l r] = vec(l^T) . vec(r)
    left = np.stack([unvec(W[k, :], D).T for k in range(n)])

    resid = np.linalg.norm(S @ vr - vr * lam, axis=0) / np.maximum(np.linalg.norm(vr, axis=0), 1e-300)
    if np.max(resid) > RESIDUAL_TOL:
        raise NonDiagonalizableError(f"eigenpair residual {np.max(resid):.3g} too large")
    return SpectralData(lam, right, left)


def overlap(l, rho) -> complex:
    """``Tr[l rho]`` (no dagger on ``l``)."""
    l = np.asarray(l)
    rho = np.asarray(rho)
    if l.shape != rho.shape:
        raise DimensionError(f"shapes {l.shape} and {rho.shape} differ")
    return complex(np.sum(l.T * rho))


def coefficients(spec: SpectralData, rho0) -> np.ndarray:
    rho0 = np.asarray(rho0, dtype=complex)
    return np.einsum("kji,ij->k", spec.left_ops, rho0)


def reconstruct(spec: SpectralData, rho0, t: float) -> np.ndarray:
    """``rho(t) = sum_k Tr[l_k rho0] r_k exp(lambda_k t)``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    c = coefficients(spec, rho0) * np.exp(spec.eigenvalues * t)
    rho = np.einsum("k,kij->ij", c, spec.right_ops)
    return 0.5 * (rho + rho.conj().T)


def steady_state(model: LindbladModel) -> np.ndarray:
    """Unique stationary state from the null space of the Liouvillian."""
    S = liouvillian_matrix(model)
    D = model.dim
    # replace one equation by the trace condition
    A = S.copy()
    A[0, :] = vec(np.eye(D)).conj()
    b = np.zeros(D * D, dtype=complex)
    b[0] = 1.0
    rho = unvec(np.linalg.solve(A, b), D)
    return 0.5 * (rho + rho.conj().T)
