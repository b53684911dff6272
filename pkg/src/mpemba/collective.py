"""Collective-decay experiments and the coherent-state decay oracle."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import merit, qops
from .errors import CutoffLeakageError
from .lindblad import collective_model, damped_oscillator_model, iter_evolve

DEFAULT_RK4_STEP = 5e-3


@dataclass(frozen=True)
class ExtremeScalingResult:
    L: int
    t_c1: float | None
    curves: tuple[merit.MeritCurve, merit.MeritCurve]


@dataclass(frozen=True)
class CoherentDecayParams:
    alpha0: complex
    Jz: float
    Ntot: float
    gamma: float

    def __post_init__(self):
        if self.Ntot < 1:
            raise ValueError("Ntot must be >= 1")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("MPEMBA_THREADS", "1")))
    except ValueError:
        return 1


def fneq_curve(model, psi, grid, T, label="", method="auto", dt=DEFAULT_RK4_STEP):
    rho0 = qops.projector(psi)
    vals = [merit.f_neq(r, model.H, T) for r in iter_evolve(model, rho0, grid, method, dt)]
    return merit.MeritCurve(np.asarray(grid, float), np.asarray(vals), label)


def run_dfs_experiment(L, Jz, Gamma, mu, T, grid, method="auto", dt=DEFAULT_RK4_STEP):
    """F_neq of the all-up and dark (single-excitation) states and their crossing."""
    model = collective_model(L, Jz, Gamma, mu, T)
    up = fneq_curve(model, qops.product_state("u" * L), grid, T, "all_up", method, dt)
    dfs = fneq_curve(model, qops.dfs_state(L), grid, T, "dfs", method, dt)
    return up, dfs, merit.crossing_time(up, dfs)


def _extreme_one(L, Jz, Gamma, mu, T, grid, dt):
    model = collective_model(L, Jz, Gamma, mu, T)
    up = fneq_curve(model, qops.product_state("u" * L), grid, T, "all_up", "rk4", dt)
    half = fneq_curve(model, qops.half_up_state(L), grid, T, "half_up", "rk4", dt)
    return ExtremeScalingResult(L, merit.crossing_time(up, half), (up, half))


def run_extreme_sweep(Ls, Jz, Gamma, mu, T, grid, dt=DEFAULT_RK4_STEP):
    """All-up versus zero-magnetization crossing times for each even ``L``."""
    Ls = list(Ls)
    for L in Ls:
        if L % 2:
            raise ValueError(f"extreme sweep needs even L, got {L}")
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        futures = [pool.submit(_extreme_one, L, Jz, Gamma, mu, T, grid, dt) for L in Ls]
        return [f.result() for f in futures]


def alpha_trajectory(p: CoherentDecayParams, t) -> complex:
    """``alpha(t) = exp((-i Jz - N gamma / 2) t) alpha0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    return np.exp((-1j * p.Jz - 0.5 * p.Ntot * p.gamma) * t) * p.alpha0


def minimum_cutoff(alpha0: complex) -> int:
    n = abs(alpha0) ** 2
    return int(np.ceil(n + 8 * np.sqrt(n) + 10))


def holstein_primakoff_check(p: CoherentDecayParams, ncut: int, grid, leak_tol: float = 1e-6,
                             return_series: bool = False):
    """Max deviation of simulated ``<a>(t)`` from the closed-form coherent decay.

    Raises :class:`CutoffLeakageError` if the top Fock level ever holds more
    than ``leak_tol`` population.
    """
    model = damped_oscillator_model(p.Jz, p.Ntot, p.gamma, ncut)
    a = qops.annihilation(ncut)
    rho0 = qops.projector(qops.coherent_state(p.alpha0, ncut))
    grid = np.asarray(grid, dtype=float)
    sim = []
    for t, rho in zip(grid, iter_evolve(model, rho0, grid, "exact")):
        if rho[-1, -1].real > leak_tol:
            raise CutoffLeakageError(
                f"population {rho[-1, -1].real:.3g} in level {ncut - 1} at t={t:.4g}; raise ncut")
        sim.append(np.trace(a @ rho))
    sim = np.asarray(sim)
    exact = alpha_trajectory(p, grid)
    dev = float(np.max(np.abs(sim - exact)))
    if return_series:
        return dev, sim, exact
    return dev
