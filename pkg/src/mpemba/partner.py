"""Strong-Mpemba partner states ``rho' = U rho U^dag`` and their verification."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import merit
from .errors import NoCoherenceError, PartnerNotFoundError, PreconditionError
from .lindblad import LindbladModel, evolve
from .spectral import SpectralData, overlap

OVERLAP_TOL = 1e-8
EXHAUSTIVE_MAX_DIM = 8


@dataclass(frozen=True)
class MpembaPartner:
    U: np.ndarray
    rho_prime: np.ndarray
    overlap_l2: complex
    overlap_l2_dagger: complex
    f_gap: float


def _l2_is_complex(spec: SpectralData) -> bool:
    return abs(spec.eigenvalues[1].imag) > 1e-9


def construct_partner(rho, H, spec: SpectralData, T: float) -> MpembaPartner:
    """Rotate ``rho`` into a state diagonal in the energy eigenbasis.

    The eigenvalues of ``rho`` are assigned to energy levels by a permutation;
    among assignments with vanishing overlap on the slowest mode (and on its
    conjugate partner when that mode is complex) the one with the largest
    free energy is returned.
    """
    rho = np.asarray(rho, dtype=complex)
    H = np.asarray(H, dtype=complex)
    E, VH = np.linalg.eigh(H)
    if np.min(np.diff(E), initial=np.inf) < 1e-9:
        raise ValueError("H has a degenerate spectrum; energy eigenbasis is ambiguous")

    rho_e = VH.conj().T @ rho @ VH
    off = rho_e - np.diag(np.diag(rho_e))
    if np.max(np.abs(off)) <= 1e-10:
        raise NoCoherenceError("rho has no coherences in the energy eigenbasis")

    p, Vrho = np.linalg.eigh(rho)
    D = len(E)
    _, l2, _ = spec.slowest_decaying()
    complex_mode = _l2_is_complex(spec)
    # Tr[l rho'] for diagonal rho' = sum_i (VH^dag l VH)_ii * population_i
    levels = [np.outer(VH[:, i], VH[:, i].conj()) for i in range(D)]
    w2 = np.array([overlap(l2, P) for P in levels])
    w2d = np.array([overlap(l2.conj().T, P) for P in levels])
    scale = max(np.linalg.norm(l2), 1.0)

    def ok(pops):
        a = abs(w2 @ pops)
        b = abs(w2d @ pops) if complex_mode else 0.0
        return a <= OVERLAP_TOL * scale and b <= OVERLAP_TOL * scale, (a, b)

    # p ascending; pairing ascending energies gives maximal energy first
    candidates = (itertools.permutations(range(D)) if D <= EXHAUSTIVE_MAX_DIM
                  else _greedy_candidates(D))
    best, best_energy, residuals = None, -np.inf, []
    for perm in candidates:
        pops = p[list(perm)]
        good, res = ok(pops)
        if not good:
            residuals.append(res)
            continue
        e = float(E @ pops)
        if e > best_energy + 1e-14:
            best, best_energy = perm, e
    if best is None:
        worst = min(residuals, key=lambda r: max(r))
        raise PartnerNotFoundError(
            f"no eigenvalue assignment zeroes the slowest-mode overlap; best residuals {worst}")

    P = np.zeros((D, D))
    P[np.arange(D), list(best)] = 1.0  # energy level i <- eigenvector best[i]
    U = VH @ P @ Vrho.conj().T
    rho_prime = U @ rho @ U.conj().T
    rho_prime = 0.5 * (rho_prime + rho_prime.conj().T)
    f_gap = merit.f_neq(rho_prime, H, T) - merit.f_neq(rho, H, T)
    return MpembaPartner(
        U=U,
        rho_prime=rho_prime,
        overlap_l2=overlap(l2, rho_prime),
        overlap_l2_dagger=overlap(l2.conj().T, rho_prime),
        f_gap=f_gap,
    )


def _greedy_candidates(D):
    """Energy-sorted assignment, then all single transpositions of it."""
    base = list(range(D))
    yield tuple(base)
    for i, j in itertools.combinations(range(D), 2):
        perm = base.copy()
        perm[i], perm[j] = perm[j], perm[i]
        yield tuple(perm)


def merit_curve(model: LindbladModel, rho0, grid, metric: str, T: float,
                reference=None, method: str = "auto", label: str = "") -> merit.MeritCurve:
    """Evolve ``rho0`` and sample ``fneq`` or ``tracedist`` (to ``reference``)."""
    states = evolve(model, rho0, grid, method)
    if metric == "fneq":
        vals = [merit.f_neq(r, model.H, T) for r in states]
    elif metric == "tracedist":
        if reference is None:
            raise ValueError("tracedist needs the equilibrium reference state")
        vals = [merit.trace_distance(r, reference) for r in states]
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return merit.MeritCurve(np.asarray(grid, float), np.asarray(vals), label)


def verify_mpemba(model: LindbladModel, rho, rho_prime, metric: str, grid, T: float,
                  reference=None):
    """Crossing time of the merit curves of ``rho`` and ``rho'``.

    Returns ``(crossing, (curve_rho, curve_rho_prime))``. ``rho'`` must start
    at least as far from equilibrium as ``rho``.
    """
    if reference is None and metric == "tracedist":
        reference = merit.gibbs_state(model.H, T)
    c_rho = merit_curve(model, rho, grid, metric, T, reference, label="rho")
    c_prime = merit_curve(model, rho_prime, grid, metric, T, reference, label="rho_prime")
    if c_prime.values[0] < c_rho.values[0] - 1e-12:
        raise PreconditionError(
            f"rho' starts closer to equilibrium ({c_prime.values[0]:.6g} < {c_rho.values[0]:.6g})")
    return merit.crossing_time(c_prime, c_rho), (c_rho, c_prime)
