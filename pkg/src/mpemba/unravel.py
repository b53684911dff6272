"""Monte-Carlo wave-function unraveling and the qubit jump/survival formulas.

Trajectories use a first-order jump scheme. In a step ``dt`` a jump happens
with the probability lost by the no-jump branch, ``1 - Tr[K rho K^dag]`` with
``K = exp(-i H_eff dt)``, which equals ``sum_k rate_k Tr[L_k^dag L_k rho] dt``
to first order and keeps no-jump statistics exact. The channel is chosen in
proportion to ``rate_k Tr[L_k^dag L_k rho]`` and maps
``rho -> L rho L^dag / Tr``; otherwise ``rho -> K rho K^dag / Tr``. Mixed initial states are evolved as
conditional density matrices.

Random numbers: trajectory ``k`` of a run with base seed ``s`` owns the
Philox4x64 stream keyed by ``(s, k)``; step ``n`` consumes the two uniforms
at row ``n`` of that stream. Records are therefore reproducible for any
batching or thread count.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import merit
from .errors import StepSizeError, UnsupportedCaseError
from .lindblad import LindbladModel, expm

STEP_VALIDITY = 0.01
MAX_STEP_PROBABILITY = 0.1
CHUNK = 250
OBSERVABLES = ("fneq", "tracedist", "entropy", "survival", "population")


@dataclass
class TrajectoryRecord:
    seed: tuple[int, int]
    grid: np.ndarray
    jumps: list[tuple[float, int]]
    states: np.ndarray           # conditional states on the grid, (n_grid, D, D)
    survived: np.ndarray         # no jump yet at each grid point

    @property
    def samples(self) -> np.ndarray:
        """Bloch vectors for qubits, full conditional states otherwise."""
        return self.bloch() if self.states.shape[1] == 2 else self.states

    def bloch(self) -> np.ndarray:
        """Bloch vectors of the conditional states (qubits only)."""
        if self.states.shape[1] != 2:
            raise ValueError("Bloch vectors only defined for qubits")
        s = self.states
        return np.stack([2 * s[:, 0, 1].real, -2 * s[:, 0, 1].imag,
                         (s[:, 0, 0] - s[:, 1, 1]).real], axis=1)

    def to_csv(self, observables: dict[str, np.ndarray] | None = None) -> str:
        """CSV with columns ``t, jump_flag, channel`` plus observable columns.

        ``jump_flag`` counts jumps in ``(t_prev, t]``; ``channel`` is the last
        channel that fired there or ``-1``.
        """
        observables = observables or {}
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "jump_flag", "channel", *observables])
        jt = np.array([j[0] for j in self.jumps])
        jc = [j[1] for j in self.jumps]
        prev = -np.inf
        for i, t in enumerate(self.grid):
            inside = np.flatnonzero((jt > prev) & (jt <= t + 1e-12)) if jt.size else []
            flag = len(inside)
            chan = jc[inside[-1]] if flag else -1
            w.writerow([f"{t:.9g}", flag, chan, *(f"{v[i]:.9g}" for v in observables.values())])
            prev = t + 1e-12
        return buf.getvalue()


@dataclass
class EnsembleStats:
    mean: merit.MeritCurve
    stderr: np.ndarray
    count: int
    mean_states: np.ndarray = field(repr=False)

    def entropy_of_mean(self) -> np.ndarray:
        return np.array([merit.von_neumann_entropy(r) for r in self.mean_states])


def _generator(base: int, index: int) -> np.random.Generator:
    key = np.array([base % 2**64, index % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _normalize_seed(seed) -> tuple[int, int]:
    if isinstance(seed, (tuple, list)):
        return int(seed[0]), int(seed[1])
    return int(seed), 0


def _plan_steps(grid: np.ndarray, model: LindbladModel, dt: float | None):
    """Uniform sub-steps per grid interval respecting the step-validity bound."""
    rate = model.max_jump_rate()
    dt_max = STEP_VALIDITY / rate if rate > 0 else np.inf
    if dt is not None:
        if dt * rate > STEP_VALIDITY + 1e-12:
            raise StepSizeError(f"dt*max_rate = {dt * rate:.3g} exceeds {STEP_VALIDITY}")
        dt_max = dt
    plan = []
    for t0, t1 in zip(grid[:-1], grid[1:]):
        n = 1 if not np.isfinite(dt_max) else max(1, math.ceil((t1 - t0) / dt_max - 1e-9))
        plan.append((n, (t1 - t0) / n))
    return plan


class _Propagators:
    def __init__(self, model: LindbladModel):
        self.heff = model.effective_hamiltonian()
        chans = model.active_channels()
        self.rates = np.array([r for r, _ in chans])
        self.ops = np.array([L for _, L in chans]).reshape(len(chans), model.dim, model.dim)
        self.ldl = np.einsum("cki,ckj->cij", self.ops.conj(), self.ops)
        self.channel_ids = [i for i, (r, _) in enumerate(model.channels) if r > 0]
        self._drift = {}

    def drift(self, h):
        key = round(h, 15)
        if key not in self._drift:
            self._drift[key] = expm(-1j * self.heff * h)
        return self._drift[key]

    def probabilities(self, rho, h):
        # p[b, c] = rate_c h Tr[L_c^dag L_c rho_b]
        tr = np.einsum("cji,bij->bc", self.ldl, rho).real
        return self.rates[None, :] * h * tr


def _simulate(model: LindbladModel, rho0, grid, keys, dt=None, keep_states=True):
    """Run one batch of trajectories. ``keys`` are ``(base, index)`` pairs."""
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must start at 0 and increase strictly")
    plan = _plan_steps(grid, model, dt)
    nsteps = sum(n for n, _ in plan)
    props = _Propagators(model)
    B, D = len(keys), model.dim
    uniforms = np.stack([_generator(*k).random((nsteps, 2)) for k in keys], axis=1)

    rho = np.broadcast_to(np.asarray(rho0, dtype=complex), (B, D, D)).copy()
    alive = np.ones(B, dtype=bool)
    jumps = [[] for _ in range(B)]
    states = np.empty((len(grid), B, D, D), dtype=complex) if keep_states else None
    survived = np.empty((len(grid), B), dtype=bool)
    if keep_states:
        states[0] = rho
    survived[0] = alive
    step = 0
    t = 0.0
    nch = len(props.rates)
    for g, (n, h) in enumerate(plan, start=1):
        K = props.drift(h)
        Kd = K.conj().T
        for _ in range(n):
            u = uniforms[step]
            step += 1
            t += h
            drifted = K @ rho @ Kd
            kept = np.trace(drifted, axis1=1, axis2=2).real
            if nch:
                # total jump probability is the norm lost by the no-jump branch
                total = 1.0 - kept
                if np.any(total > MAX_STEP_PROBABILITY):
                    raise StepSizeError(f"jump probability {total.max():.3g} per step; reduce dt")
                fire = u[:, 0] < total
            else:
                fire = np.zeros(B, dtype=bool)
            stay = ~fire
            if np.any(stay):
                rho[stay] = drifted[stay] / kept[stay, None, None]
            if np.any(fire):
                idx = np.flatnonzero(fire)
                p = props.probabilities(rho[idx], h)
                cum = np.cumsum(p, axis=1) / p.sum(axis=1)[:, None]
                chan = np.minimum((u[idx, 1][:, None] >= cum).sum(axis=1), nch - 1)
                L = props.ops[chan]
                r = L @ rho[idx] @ np.conj(np.swapaxes(L, 1, 2))
                rho[idx] = r / np.trace(r, axis1=1, axis2=2).real[:, None, None]
                alive[idx] = False
                for b, c in zip(idx, chan):
                    jumps[b].append((t, props.channel_ids[c]))
            rho = 0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))
        t = grid[g]
        if keep_states:
            states[g] = rho
        survived[g] = alive
    return states, survived, jumps


def mcwf_sample(model: LindbladModel, rho0, grid, seed, dt: float | None = None) -> TrajectoryRecord:
    """One conditional trajectory. ``seed`` is an int or a ``(base, index)`` pair."""
    key = _normalize_seed(seed)
    states, survived, jumps = _simulate(model, rho0, grid, [key], dt)
    return TrajectoryRecord(key, np.asarray(grid, float), jumps[0], states[:, 0], survived[:, 0])


def _observable_values(observable, states, survived, H=None, T=None, reference=None):
    """Per-trajectory observable, shape (n_grid, B)."""
    if observable == "survival":
        return survived.astype(float)
    if observable == "population":
        return states[..., 0, 0].real
    w = np.linalg.eigvalsh(states)
    if observable in ("entropy", "fneq"):
        wc = np.where(w > merit.EIG_CLAMP, w, 1.0)
        S = -np.sum(np.where(w > merit.EIG_CLAMP, w * np.log(wc), 0.0), axis=-1)
        if observable == "entropy":
            return S
        E = np.einsum("ji,gbij->gb", H, states).real
        return E - T * S
    if observable == "tracedist":
        d = np.linalg.eigvalsh(states - reference[None, None])
        return 0.5 * np.abs(d).sum(axis=-1)
    raise ValueError(f"unknown observable {observable!r}")


def _workers():
    try:
        return max(1, int(os.environ.get("MPEMBA_THREADS", "1")))
    except ValueError:
        return 1


def ensemble_statistics(model: LindbladModel, rho0, grid, count: int, observables,
                        seed: int = 0, T: float | None = None, reference=None,
                        dt: float | None = None) -> dict[str, EnsembleStats]:
    """Several trajectory averages from one shared ensemble."""
    if count < 1:
        raise ValueError("count must be >= 1")
    observables = tuple(observables)
    for ob in observables:
        if ob not in OBSERVABLES:
            raise ValueError(f"observable must be one of {OBSERVABLES}, got {ob!r}")
    if "fneq" in observables and T is None:
        raise ValueError("fneq needs a temperature")
    if "tracedist" in observables and reference is None:
        if T is None:
            raise ValueError("tracedist needs a reference state or a temperature")
        reference = merit.gibbs_state(model.H, T)
    grid = np.asarray(grid, dtype=float)
    chunks = [list(range(s, min(s + CHUNK, count))) for s in range(0, count, CHUNK)]

    def run(chunk):
        states, survived, _ = _simulate(model, rho0, grid, [(seed, k) for k in chunk], dt)
        vals = [_observable_values(ob, states, survived, model.H, T, reference)
                for ob in observables]
        return vals, states.sum(axis=1)

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(run, chunks))
    # reduce in chunk order so the result is independent of the thread count
    state_sum = results[0][1].copy()
    for r in results[1:]:
        state_sum += r[1]
    mean_states = state_sum / count
    out = {}
    for i, ob in enumerate(observables):
        vals = np.concatenate([r[0][i] for r in results], axis=1)
        mean = vals.mean(axis=1)
        stderr = vals.std(axis=1, ddof=1) / np.sqrt(count) if count > 1 else np.zeros_like(mean)
        out[ob] = EnsembleStats(merit.MeritCurve(grid, mean, ob), stderr, count, mean_states)
    return out


def ensemble_average(model: LindbladModel, rho0, grid, count: int, observable: str,
                     seed: int = 0, T: float | None = None, reference=None,
                     dt: float | None = None) -> EnsembleStats:
    """Trajectory average of ``observable`` with per-point standard errors.

    ``observable`` is one of ``fneq`` (needs ``T``), ``tracedist`` (distance to
    ``reference``, default Gibbs state at ``T``), ``entropy``, ``survival``
    (fraction with no jump yet) or ``population`` (excited level).
    """
    return ensemble_statistics(model, rho0, grid, count, (observable,), seed, T,
                               reference, dt)[observable]


def jump_probability(state, model: LindbladModel, dt: float) -> list[float]:
    """Per-channel probability ``rate Tr[L^dag L rho] dt`` (zero-rate channels give 0)."""
    rho = np.asarray(state, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    probs = [r * float(np.trace(L.conj().T @ L @ rho).real) * dt for r, L in model.channels]
    if sum(probs) > MAX_STEP_PROBABILITY:
        raise StepSizeError(f"total jump probability {sum(probs):.3g} > {MAX_STEP_PROBABILITY}")
    return probs


def _check_amplitudes(alpha0, beta0):
    n = abs(alpha0) ** 2 + abs(beta0) ** 2
    if abs(n - 1) > 1e-10:
        raise ValueError(f"|alpha0|^2 + |beta0|^2 = {n}, expected 1")


def survival_analytic(alpha0, beta0, mu, Nbar, t):
    """No-jump probabilities ``(P_s', P_s)`` for the excited state and for
    ``alpha0|g> + beta0|e>`` under the thermal qubit channels."""
    _check_amplitudes(alpha0, beta0)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    ps_prime = np.exp(-mu * (Nbar + 1) * t)
    ps = abs(alpha0) ** 2 * np.exp(-mu * Nbar * t) + abs(beta0) ** 2 * ps_prime
    return ps_prime, ps


def no_jump_amplitudes(alpha0, beta0, mu, t, Nbar: float = 0.0):
    """Ground/excited amplitudes on the no-jump branch at zero temperature."""
    if Nbar != 0:
        raise UnsupportedCaseError("closed-form no-jump amplitudes only hold at zero temperature")
    _check_amplitudes(alpha0, beta0)
    t = np.asarray(t, dtype=float)
    norm = np.sqrt(abs(alpha0) ** 2 + abs(beta0) ** 2 * np.exp(-mu * t))
    return alpha0 / norm, beta0 * np.exp(-0.5 * mu * t) / norm


def no_jump_branch(model: LindbladModel, psi0, grid, dt: float | None = None,
                   interaction_picture: bool = True) -> np.ndarray:
    """Amplitudes of the normalized no-jump evolution, sampled on ``grid``.

    Uses the same sub-stepped drift propagator as the trajectory engine.
    With ``interaction_picture`` the free rotation ``exp(-iHt)`` is removed.
    """
    grid = np.asarray(grid, dtype=float)
    props = _Propagators(model)
    psi = np.asarray(psi0, dtype=complex)
    out = [psi.copy()]
    for (n, h), t in zip(_plan_steps(grid, model, dt), grid[1:]):
        K = props.drift(h)
        for _ in range(n):
            psi = K @ psi
            psi /= np.linalg.norm(psi)
        out.append(psi.copy())
    out = np.array(out)
    if interaction_picture:
        E, V = np.linalg.eigh(model.H)
        for i, t in enumerate(grid):
            U = (V * np.exp(1j * E * t)) @ V.conj().T
            out[i] = U @ out[i]
    return out


def qubit_mixed_analytics(beta0, c0, mu, Nbar, t):
    """Population, squared coherence and eigenvalues for the mixed-qubit picture.

    ``beta(t) = beta_eq + (beta0 - beta_eq) exp(-(mu/2)(N+1) t)`` and
    ``|c(t)|^2 = |c0|^2 exp(-mu t)``, exactly in the form used for the
    coherence comparison; :func:`qubit_master_analytics` gives the exact
    Lindblad solution for reference.
    """
    t = np.asarray(t, dtype=float)
    det0 = beta0 * (1 - beta0) - abs(c0) ** 2
    if not 0 <= beta0 <= 1 or det0 < -1e-12:
        raise ValueError("(beta0, c0) is not a valid qubit state")
    beta_eq = Nbar / (2 * Nbar + 1)
    beta = beta_eq + (beta0 - beta_eq) * np.exp(-0.5 * mu * (Nbar + 1) * t)
    c2 = abs(c0) ** 2 * np.exp(-mu * t)
    return (beta, c2, *_eigs(beta, c2))


def qubit_master_analytics(beta0, c0, mu, Nbar, t):
    """Exact solution of the thermal qubit master equation (``gamma_+ = gamma_- = mu``).

    Populations relax at ``mu (2N+1)`` and ``|c|^2`` decays at the same rate.
    """
    t = np.asarray(t, dtype=float)
    beta_eq = Nbar / (2 * Nbar + 1)
    rate = mu * (2 * Nbar + 1)
    beta = beta_eq + (beta0 - beta_eq) * np.exp(-rate * t)
    c2 = abs(c0) ** 2 * np.exp(-rate * t)
    return (beta, c2, *_eigs(beta, c2))


def _eigs(beta, c2):
    det = beta * (1 - beta) - c2
    root = np.sqrt(np.clip(1 - 4 * det, 0.0, 1.0))
    return 0.5 * (1 + root), 0.5 * (1 - root)
