"""Acceptance gate: one test per headline criterion, each printing PASS/FAIL."""
import time

import numpy as np

from mpemba import cli, collective, gauss, lindblad, merit, qops, spectral, unravel
from mpemba.partner import construct_partner, verify_mpemba

from conftest import MIXED_BLOCH, PURE_BLOCH

CROSSING_TABLE = {4: 0.70, 6: 0.50, 8: 0.41, 10: 0.34}


def test_chain_length_crossing_table(criterion, tmp_path):
    start = time.perf_counter()
    assert cli.main(["extreme", "--preset", "--out", str(tmp_path)]) == 0
    elapsed = time.perf_counter() - start
    rows = [l.split(",") for l in (tmp_path / "extreme.csv").read_text().splitlines()[1:]]
    got = {int(L): float(t) for L, t in rows}
    ok = all(abs(got[L] - ref) <= 0.05 for L, ref in CROSSING_TABLE.items()) and elapsed <= 900
    detail = ", ".join(f"L={L}: {got[L]:.3f} (ref {ref})" for L, ref in CROSSING_TABLE.items())
    criterion("chain-length crossing table", ok, f"{detail}; {elapsed:.0f}s")


def test_hot_qubit_partner(criterion):
    start = time.perf_counter()
    model = lindblad.davies_qubit(5, 1, 1, 10)
    rho = qops.bloch_to_rho(MIXED_BLOCH)
    p = construct_partner(rho, model.H, spectral.decompose(model), 10)
    grid = np.linspace(0, 3, 301)
    xf, _ = verify_mpemba(model, rho, p.rho_prime, "fneq", grid, 10)
    xt, _ = verify_mpemba(model, rho, p.rho_prime, "tracedist", grid, 10)
    diagonal = abs(p.rho_prime[0, 1]) < 1e-12
    hotter = merit.f_neq(p.rho_prime, model.H, 10) > merit.f_neq(rho, model.H, 10)
    elapsed = time.perf_counter() - start
    ok = (diagonal and abs(p.overlap_l2) <= 1e-8 and abs(p.overlap_l2_dagger) <= 1e-8 and hotter
          and xf is not None and xt is not None and elapsed < 30)
    criterion("hot qubit partner and crossings", ok,
              f"|Tr l2 rho'|={abs(p.overlap_l2):.1e}, gap={p.f_gap:.3f}, "
              f"t_F={xf}, t_D={xt}, {elapsed:.1f}s")


def test_zero_temperature_metric_split(criterion):
    model = lindblad.davies_qubit(1, 1, 1, 0)
    r = np.asarray(PURE_BLOCH) / np.linalg.norm(PURE_BLOCH)
    rho = qops.bloch_to_rho(r)
    p = construct_partner(rho, model.H, spectral.decompose(model), 0)
    grid = np.linspace(0, 5, 501)
    xt, _ = verify_mpemba(model, rho, p.rho_prime, "tracedist", grid, 0)
    excited = np.allclose(p.rho_prime, qops.projector(qops.UP), atol=1e-10)
    criterion("zero-T trace-distance crossing", excited and xt is not None,
              f"rho' excited={excited}, t_D={xt}")


def test_spectral_propagation_equivalence(criterion):
    grid = np.linspace(0, 5, 51)
    worst = 0.0
    for model, rho in ((lindblad.davies_qubit(5, 1, 1, 10), qops.bloch_to_rho(MIXED_BLOCH)),
                       (lindblad.collective_model(2, 5, 1, 1, 1),
                        qops.projector((qops.product_state("uu") + qops.dfs_state(2)) / np.sqrt(2)))):
        spec = spectral.decompose(model)
        exact = lindblad.evolve(model, rho, grid, "exact")
        for t, e in zip(grid, exact):
            worst = max(worst, np.max(np.abs(spectral.reconstruct(spec, rho, t) - e)))
    criterion("spectral reconstruction vs expm", worst <= 1e-7, f"max entry error {worst:.2e}")


def test_gibbs_stationarity(criterion):
    worst = 0.0
    for T in (0.5, 1.0, 10.0):
        model = lindblad.davies_qubit(5, 1, 1, T)
        worst = max(worst, np.max(np.abs(lindblad.liouvillian_apply(model, merit.gibbs_state(model.H, T)))))
    criterion("Gibbs stationarity", worst <= 1e-10, f"max |L[gibbs]| = {worst:.1e}")


def test_dark_state_mechanism(criterion):
    drift = 0.0
    grid = np.linspace(0, 2, 5)
    for L in (2, 4, 6):
        model = lindblad.collective_model(L, 5, 1, 0, 1)
        rho0 = qops.projector(qops.dfs_state(L))
        for r in lindblad.evolve(model, rho0, grid, "auto", dt=5e-3):
            drift = max(drift, np.max(np.abs(r - rho0)))
    ratios = []
    fit_grid = np.linspace(0, 4, 401)
    for L in (2, 4):
        model = lindblad.collective_model(L, 5, 1, 0.1, 1)
        feq = merit.free_energy_equilibrium(model.H, 1)
        up = collective.fneq_curve(model, qops.product_state("u" * L), fit_grid, 1)
        dfs = collective.fneq_curve(model, qops.dfs_state(L), fit_grid, 1)
        ratios.append(merit.fit_decay_rate(fit_grid, up.values, (0.5, 3), feq)
                      / merit.fit_decay_rate(fit_grid, dfs.values, (0.5, 3), feq))
    ok = drift <= 1e-12 and min(ratios) >= 2.5
    criterion("dark-state mechanism", ok,
              f"dfs drift {drift:.1e}, rate ratios " + ", ".join(f"{x:.2f}" for x in ratios))


def test_mcwf_consistency(criterion):
    start = time.perf_counter()
    count = 2000
    grid = np.linspace(0, 3, 31)
    r = np.asarray(PURE_BLOCH) / np.linalg.norm(PURE_BLOCH)
    cases = [(lindblad.davies_qubit(5, 1, 1, 0), qops.bloch_to_rho(r), 0.0),
             (lindblad.davies_qubit(5, 1, 1, 10), qops.bloch_to_rho(MIXED_BLOCH), 10.0)]
    worst_td, worst_z = 0.0, 0.0
    for model, rho, T in cases:
        s = unravel.ensemble_average(model, rho, grid, count, "survival", seed=2024)
        exact = lindblad.evolve(model, rho, grid)
        worst_td = max(worst_td, max(merit.trace_distance(a, b) for a, b in zip(s.mean_states, exact)))
        pe = rho[0, 0].real
        nbar = lindblad.bose_einstein(5, T)
        _, ps = unravel.survival_analytic(np.sqrt(1 - pe), np.sqrt(pe), 1, nbar, grid)
        dev = np.abs(s.mean.values - ps)
        z = np.where(s.stderr > 0, dev / np.where(s.stderr > 0, s.stderr, 1), np.where(dev > 1e-12, np.inf, 0))
        worst_z = max(worst_z, float(z.max()))
    elapsed = time.perf_counter() - start
    ok = worst_td <= 5 / np.sqrt(count) and worst_z <= 3 and elapsed <= 120
    criterion("MCWF consistency", ok,
              f"max trace distance {worst_td:.4f} (bound {5 / np.sqrt(count):.4f}), "
              f"max survival z {worst_z:.2f}, {elapsed:.1f}s")


def test_no_jump_oracle(criterion):
    model = lindblad.davies_qubit(5, 1, 1, 0)
    grid = np.linspace(0, 5, 101)
    a0, b0 = np.sqrt(0.4), np.sqrt(0.6)
    amp = unravel.no_jump_branch(model, np.array([b0, a0]), grid)
    a, b = unravel.no_jump_amplitudes(a0, b0, 1, grid)
    err = max(np.max(np.abs(amp[:, 1] - a)), np.max(np.abs(amp[:, 0] - b)))
    criterion("no-jump amplitudes", err <= 1e-8, f"max error {err:.1e}")


def test_holstein_primakoff_oracle(criterion):
    start = time.perf_counter()
    grid = np.linspace(0, 2, 41)
    devs = {N: collective.holstein_primakoff_check(collective.CoherentDecayParams(1.0, 5, N, 1), 30, grid)
            for N in (2, 4, 8)}
    elapsed = time.perf_counter() - start
    criterion("coherent decay oracle", max(devs.values()) <= 1e-6 and elapsed < 60,
              ", ".join(f"N={N}: {d:.1e}" for N, d in devs.items()) + f"; {elapsed:.1f}s")


def test_gaussian_physicality_and_signature(criterion):
    start = time.perf_counter()
    bath = gauss.BathSpec(200, 0.5, 1.5, 0.3, 0.5)
    H = gauss.build_star_model(1.0, bath)
    grid = np.linspace(0, 60, 241)
    curves, corr, worst_e, worst_nu = {}, {}, 0.0, 0.0
    for kind, val in (("coherent", 1.0), ("squeezed_vacuum", 1.0)):
        s0 = gauss.initial_state(kind, val, bath)
        states = gauss.evolve_gaussian(H, s0, grid)
        e0 = H.energy(s0)
        worst_e = max(worst_e, max(abs(H.energy(s) - e0) / abs(e0) for s in states))
        nu0 = gauss.symplectic_eigenvalues(s0.sigma)
        for s in states[::60]:
            nu = gauss.symplectic_eigenvalues(s.sigma)
            worst_nu = max(worst_nu, float(np.max(np.abs(nu - nu0) / nu0)))
        curves[kind] = merit.MeritCurve(grid, [gauss.gaussian_f_neq(s, 1.0, 0.5) for s in states])
        corr[kind] = np.trapezoid([gauss.correlation_blocks(s)[1] for s in states], grid)
    x = merit.crossing_time(curves["squeezed_vacuum"], curves["coherent"])
    elapsed = time.perf_counter() - start
    ok = (worst_e <= 1e-6 and worst_nu <= 1e-6 and x is not None and x < bath.recurrence_time
          and corr["squeezed_vacuum"] > corr["coherent"] and elapsed <= 300)
    criterion("Gaussian physicality and signature", ok,
              f"energy drift {worst_e:.1e}, symplectic drift {worst_nu:.1e}, crossing {x} "
              f"(recurrence {bath.recurrence_time:.0f}), corr squeezed/coherent "
              f"{corr['squeezed_vacuum']:.1f}/{corr['coherent']:.1f}, {elapsed:.0f}s")


def test_determinism(criterion, tmp_path, monkeypatch):
    runs = {
        "davies-qubit": [],
        "dfs": [],
        "coherences": [],
        "hp-check": [],
        "extreme": ["--L", "4,6", "--t_max", "1"],
        "trajectories": ["--trajectories", "400", "--t_max", "1"],
        "gaussian": ["--N_modes", "61", "--t_max", "20"],
    }
    differing = []
    for name, extra in runs.items():
        outs = []
        for k, threads in enumerate(("1", "3")):
            monkeypatch.setenv("MPEMBA_THREADS", threads)
            out = tmp_path / f"{name}-{k}"
            assert cli.main([name, "--preset", *extra, "--out", str(out)]) == 0
            outs.append(out)
        for f in outs[0].glob("*.csv"):
            if f.read_bytes() != (outs[1] / f.name).read_bytes():
                differing.append(f.name)
    criterion("byte-identical reruns", not differing,
              f"{len(runs)} experiments" + (f", differing: {differing}" if differing else ""))
