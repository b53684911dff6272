"""Named experiments behind the command line. Each returns CSV tables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import collective, gauss, merit, qops, unravel
from .errors import InvariantViolation
from .lindblad import bose_einstein, davies_qubit, evolve
from .partner import construct_partner, merit_curve
from .spectral import decompose


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    plot: list[tuple[int, int]] | None = None   # (x, y) column pairs to draw

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError(f"{self.name}: row of {len(row)} values for {len(self.columns)} columns")
        self.rows.append(list(row))

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def plot_script(self) -> str:
        pairs = self.plot or [(1, k) for k in range(2, len(self.columns) + 1)]
        fname = f"{self.name}.csv"
        parts = [f"'{fname}' using {x}:{y} with lines title '{self.columns[y - 1]}'"
                 for x, y in pairs]
        return ("set datafile separator ','\n"
                f"set xlabel '{self.columns[0]}'\n"
                "plot " + ", \\\n     ".join(parts) + "\n")


def _fmt(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.9g}"


def time_grid(t_max: float, dt: float) -> np.ndarray:
    n = int(round(t_max / dt))
    if n < 1 or abs(n * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ValueError(f"t_max={t_max} is not a multiple of dt={dt}")
    return np.linspace(0.0, t_max, n + 1)


def _crossing_col(x):
    return np.nan if x is None else x


def davies_qubit_experiment(c) -> list[Table]:
    model = davies_qubit(c["omega"], c["gamma_minus"], c["gamma_plus"], c["T"])
    rho = qops.bloch_to_rho(c["bloch"])
    spec = decompose(model)
    p = construct_partner(rho, model.H, spec, c["T"])
    if max(abs(p.overlap_l2), abs(p.overlap_l2_dagger)) > 1e-8:
        raise InvariantViolation("partner overlap with the slowest mode is not zero")
    grid = time_grid(c["t_max"], c["dt"])
    ref = merit.gibbs_state(model.H, c["T"])
    curves = {}
    crossings = {}
    for metric in ("fneq", "tracedist"):
        a = merit_curve(model, rho, grid, metric, c["T"], ref)
        b = merit_curve(model, p.rho_prime, grid, metric, c["T"], ref)
        curves[metric] = (a, b)
        crossings[metric] = merit.crossing_time(b, a)
    t = Table("davies-qubit", ["t", "fneq_rho", "fneq_rho_prime", "tracedist_rho",
                               "tracedist_rho_prime", "crossing_fneq", "crossing_tracedist"],
              plot=[(1, 2), (1, 3), (1, 4), (1, 5)])
    for i, ti in enumerate(grid):
        t.add(ti, curves["fneq"][0].values[i], curves["fneq"][1].values[i],
              curves["tracedist"][0].values[i], curves["tracedist"][1].values[i],
              _crossing_col(crossings["fneq"]), _crossing_col(crossings["tracedist"]))
    return [t]


def dfs_experiment(c) -> list[Table]:
    grid = time_grid(c["t_max"], c["dt"])
    up, dfs, x = collective.run_dfs_experiment(c["L"][0], c["Jz"], c["Gamma"], c["mu"], c["T"],
                                               grid, c["method"], c["rk4_dt"])
    t = Table("dfs", ["t", "fneq_all_up", "fneq_dfs", "crossing"], plot=[(1, 2), (1, 3)])
    for i, ti in enumerate(grid):
        t.add(ti, up.values[i], dfs.values[i], _crossing_col(x))
    return [t]


def extreme_experiment(c) -> list[Table]:
    grid = time_grid(c["t_max"], c["dt"])
    results = collective.run_extreme_sweep(c["L"], c["Jz"], c["Gamma"], c["mu"], c["T"],
                                           grid, c["rk4_dt"])
    table = Table("extreme", ["L", "t_c1"])
    cols = ["t"]
    for r in results:
        table.add(r.L, _crossing_col(r.t_c1))
        cols += [f"fneq_all_up_L{r.L}", f"fneq_half_up_L{r.L}"]
    curves = Table("extreme_curves", cols)
    for i, ti in enumerate(grid):
        row = [ti]
        for r in results:
            row += [r.curves[0].values[i], r.curves[1].values[i]]
        curves.add(*row)
    return [table, curves]


def _populations(rho):
    pe = float(rho[0, 0].real)
    return np.sqrt(max(1 - pe, 0.0)), np.sqrt(max(pe, 0.0))


def trajectories_experiment(c) -> list[Table]:
    model = davies_qubit(c["omega"], c["mu"], c["mu"], c["T"])
    Nbar = bose_einstein(c["omega"], c["T"])
    rho = qops.bloch_to_rho(c["bloch"])
    p = construct_partner(rho, model.H, decompose(model), c["T"])
    grid = time_grid(c["t_max"], c["dt"])
    obs = ("survival", "entropy", "fneq")
    stats = {}
    for key, state in (("rho", rho), ("prime", p.rho_prime)):
        stats[key] = unravel.ensemble_statistics(model, state, grid, c["trajectories"], obs,
                                                 seed=c["seed"], T=c["T"])
        # the ensemble mean must reproduce the master equation
        exact = evolve(model, state, grid)
        err = max(merit.trace_distance(a, b) for a, b in zip(stats[key]["survival"].mean_states, exact))
        if err > 5 / np.sqrt(c["trajectories"]):
            raise InvariantViolation(f"ensemble mean deviates from master equation by {err:.3g}")
    analytic = {k: unravel.survival_analytic(*_populations(s), c["mu"], Nbar, grid)[1]
                for k, s in (("rho", rho), ("prime", p.rho_prime))}
    sample = {k: unravel.mcwf_sample(model, s, grid, (c["seed"], 0))
              for k, s in (("rho", rho), ("prime", p.rho_prime))}
    cols = ["t"]
    for k in ("rho", "prime"):
        cols += [f"survival_{k}", f"survival_{k}_stderr", f"survival_{k}_analytic",
                 f"minus_TS_{k}", f"minus_TS_{k}_stderr", f"minus_TS_of_mean_{k}",
                 f"fneq_sample_{k}"]
    t = Table("trajectories", cols, plot=[(1, 2), (1, 4), (1, 9), (1, 11), (1, 5), (1, 12)])
    T = c["T"]
    ent_mean = {k: stats[k]["entropy"].entropy_of_mean() for k in stats}
    fs = {k: [merit.f_neq(r, model.H, T) for r in sample[k].states] for k in sample}
    for i, ti in enumerate(grid):
        row = [ti]
        for k in ("rho", "prime"):
            s = stats[k]
            row += [s["survival"].mean.values[i], s["survival"].stderr[i], analytic[k][i],
                    -T * s["entropy"].mean.values[i], T * s["entropy"].stderr[i],
                    -T * ent_mean[k][i], fs[k][i]]
        t.add(*row)
    return [t]


def coherences_experiment(c) -> list[Table]:
    model = davies_qubit(c["omega"], c["mu"], c["mu"], c["T"])
    Nbar = bose_einstein(c["omega"], c["T"])
    rho = qops.bloch_to_rho(c["bloch"])
    grid = time_grid(c["t_max"], c["dt"])
    pe = c["beta_prime"]
    states = {"rho": rho}
    for k, coh in (("rho1", c["c1"]), ("rho2", c["c2"])):
        states[k] = np.array([[pe, coh], [coh, 1 - pe]], dtype=complex)
        qops.check_density_matrix(states[k])
    curves = {k: merit_curve(model, s, grid, "fneq", c["T"]) for k, s in states.items()}
    cols = ["t", "fneq_rho", "fneq_rho1", "fneq_rho2"]
    an = {}
    for k in ("rho1", "rho2"):
        s = states[k]
        an[k] = (unravel.qubit_mixed_analytics(s[0, 0].real, s[0, 1], c["mu"], Nbar, grid),
                 unravel.qubit_master_analytics(s[0, 0].real, s[0, 1], c["mu"], Nbar, grid))
        cols += [f"beta_{k}", f"c2_{k}", f"lambda_plus_{k}", f"beta_master_{k}", f"c2_master_{k}"]
    t = Table("coherences", cols, plot=[(1, 2), (1, 3), (1, 4)])
    for i, ti in enumerate(grid):
        row = [ti, *(curves[k].values[i] for k in ("rho", "rho1", "rho2"))]
        for k in ("rho1", "rho2"):
            verb, master = an[k]
            row += [verb[0][i], verb[1][i], verb[2][i], master[0][i], master[1][i]]
        t.add(*row)
    return [t]


def gaussian_experiment(c) -> list[Table]:
    bath = gauss.BathSpec(c["N_modes"] - 1, c["omega_min"], c["omega_max"], c["coupling"], c["T"])
    H = gauss.build_star_model(c["omega"], bath)
    grid = time_grid(c["t_max"], c["dt"])
    if grid[-1] >= bath.recurrence_time:
        raise ValueError(f"t_max must stay below the bath recurrence time {bath.recurrence_time:.4g}")
    runs = {"coherent": gauss.initial_state("coherent", c["alpha"], bath),
            "squeezed": gauss.initial_state("squeezed_vacuum", c["s"], bath)}
    out = {}
    for k, s0 in runs.items():
        states = gauss.evolve_gaussian(H, s0, grid)
        e0 = H.energy(s0)
        drift = max(abs(H.energy(s) - e0) for s in states) / abs(e0)
        if drift > 1e-6:
            raise InvariantViolation(f"{k}: total energy drift {drift:.3g}")
        if min(s.physicality_margin() for s in (states[0], states[len(states) // 2], states[-1])) < -1e-8:
            raise InvariantViolation(f"{k}: covariance matrix became unphysical")
        out[k] = states
    t = Table("gaussian", ["t", "fneq_coherent", "fneq_squeezed", "corr_total_coherent",
                           "corr_total_squeezed", "energy_coherent", "energy_squeezed"],
              plot=[(1, 2), (1, 3)])
    for i, ti in enumerate(grid):
        co, sq = out["coherent"][i], out["squeezed"][i]
        t.add(ti, gauss.gaussian_f_neq(co, c["omega"], c["T"]), gauss.gaussian_f_neq(sq, c["omega"], c["T"]),
              gauss.correlation_blocks(co)[1], gauss.correlation_blocks(sq)[1],
              gauss.system_energy(co, c["omega"]), gauss.system_energy(sq, c["omega"]))
    tables = [t]
    for k in ("coherent", "squeezed"):
        hm = Table(f"gaussian_heatmap_{k}", ["t", "mode", "norm"], plot=[(1, 3)])
        stride = max(1, len(grid) // 100)
        for i in range(0, len(grid), stride):
            per_mode, _ = gauss.correlation_blocks(out[k][i])
            for m, v in enumerate(per_mode, start=1):
                hm.add(grid[i], m, v)
        tables.append(hm)
    return tables


def hp_check_experiment(c) -> list[Table]:
    grid = time_grid(c["t_max"], c["dt"])
    cols = ["t"]
    series = []
    for N in c["N"]:
        p = collective.CoherentDecayParams(c["alpha"], c["Jz"], N, c["gamma"])
        dev, sim, exact = collective.holstein_primakoff_check(p, c["ncut"], grid, return_series=True)
        if dev > 1e-6:
            raise InvariantViolation(f"N={N}: <a>(t) deviates from the closed form by {dev:.3g}")
        series.append((sim, exact))
        cols += [f"abs_a_sim_N{N}", f"abs_a_exact_N{N}", f"re_a_sim_N{N}", f"im_a_sim_N{N}"]
    t = Table("hp-check", cols)
    for i, ti in enumerate(grid):
        row = [ti]
        for sim, exact in series:
            row += [abs(sim[i]), abs(exact[i]), sim[i].real, sim[i].imag]
        t.add(*row)
    return [t]
