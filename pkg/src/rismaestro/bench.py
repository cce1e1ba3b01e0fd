"""Experiment suite: approximation validation, convergence, sweeps,
fairness, timing, plus the non-learned baselines. Results go to CSV with a
fixed column schema so downstream plotting stays decoupled.

Benchmark rows: `experiment, algorithm, seed, sweep_name, sweep_value,
sum_rate_bps_hz, jfi, wall_time_ms`. Validation rows: `pmax_dbm,
n_elements, approx_sum_rate, mc_sum_rate, mc_stderr`. Timing rows:
`algorithm, sweep (N), median_ms, sum_rate_ratio_pct`.
"""

from __future__ import annotations

import warnings
import zlib
from dataclasses import dataclass, replace
from time import perf_counter

import numpy as np

from . import mappo as mp
from .ao import alpha_from_schedule, ao_solve, bfs_ao_solve, enumerate_schedules
from .channel import ChannelStats, build_stats, drop_users
from .config import AoOptions, Scenario, dbm_to_watt
from .rate import (PrecodingState, approx_sum_rate, ergodic_sum_rate_mc,
                   ergodic_user_rates_mc, jfi, random_state)

BENCH_COLUMNS = ("experiment", "algorithm", "seed", "sweep_name",
                 "sweep_value", "sum_rate_bps_hz", "jfi", "wall_time_ms")
VALIDATION_COLUMNS = ("pmax_dbm", "n_elements", "approx_sum_rate",
                      "mc_sum_rate", "mc_stderr")
TIMING_COLUMNS = ("algorithm", "n_elements", "median_ms", "sum_rate_ratio_pct")

BASELINE_KINDS = ("random-precoding", "random-ris", "random-scheduling",
                  "round-robin")


@dataclass
class ExperimentSpec:
    """One experiment cell grid: sweep variable/values x algorithms x seeds."""

    experiment: str
    scenario: Scenario
    sweep_name: str = ""
    sweep_values: tuple = ()
    algorithms: tuple = ("bfs-ao",)
    seeds: tuple = (0,)
    avg_realizations: int = 300     # Monte-Carlo draws per evaluation
    checkpoint: str | None = None   # trained bundle for the learned algorithm

    def validate(self) -> None:
        if len(self.seeds) < 1:
            raise ValueError("need at least one seed")
        if self.sweep_values and not np.all(np.isfinite(
                [float(v) for v in self.sweep_values])):
            raise ValueError("sweep values must be finite")


def round_robin_schedule(K: int, U: int, interval: int) -> tuple[int, ...]:
    """Cyclic schedule: advance a pointer by U users per interval, wrapping."""
    start = (interval * U) % K
    return tuple(sorted((start + i) % K for i in range(U)))


def run_baseline(kind: str, stats: ChannelStats, U: int, sigma2: float,
                 P_max: float, opts: AoOptions, rng: np.random.Generator,
                 interval: int = 0) -> tuple[PrecodingState, float]:
    """Reference strategies sharing the alternating-solver machinery.

    random-precoding: G drawn once at full power, phases optimized.
    random-ris: phases drawn uniform, precoder optimized.
    random-scheduling: uniform schedule, full alternating optimization.
    round-robin: cyclic schedule for `interval`, full alternating optimization.
    """
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline kind {kind!r}")
    K = stats.K
    if kind in ("random-precoding", "random-ris"):
        best_obj, best_state = -np.inf, None
        schedules = enumerate_schedules(K, U)
        children = rng.spawn(len(schedules))
        part = AoOptions(tol=opts.tol, max_iters=opts.max_iters,
                         restarts=opts.restarts, mo_tol=opts.mo_tol,
                         mo_max_iters=opts.mo_max_iters,
                         bisect_tol=opts.bisect_tol,
                         update_g=(kind == "random-ris"),
                         update_phi=(kind == "random-precoding"))
        for schedule, child in zip(schedules, children):
            alpha = alpha_from_schedule(schedule, K)
            state, ws = ao_solve(stats, alpha, sigma2, P_max, part, rng=child)
            if ws.objective_trace[-1] > best_obj:
                best_obj, best_state = ws.objective_trace[-1], state
        return best_state, best_obj
    if kind == "random-scheduling":
        sched = tuple(sorted(rng.choice(K, size=U, replace=False).tolist()))
    else:
        sched = round_robin_schedule(K, U, interval)
    alpha = alpha_from_schedule(sched, K)
    state, ws = ao_solve(stats, alpha, sigma2, P_max, opts, rng=rng)
    return state, ws.objective_trace[-1]


def _write_csv(path: str, columns: tuple, rows: list[tuple]) -> None:
    with open(path, "w") as f:
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(f"{v:.10g}" if isinstance(v, float) else str(v)
                             for v in row) + "\n")


def validate_approximation(spec: ExperimentSpec, out_csv: str | None = None,
                           n_states: int = 10,
                           n_values: tuple = (8, 16)) -> list[tuple]:
    """Closed form vs Monte-Carlo over P_max and N, each point averaged
    across `n_states` independent random states.

    The same unit-power state templates are rescaled to every power, so the
    power sweep is monotone by construction.
    """
    spec.validate()
    scen = spec.scenario
    pmax_dbm = spec.sweep_values or (-5, 0, 5, 10, 15, 20, 25)
    rows = []
    for n_el in n_values:
        nx = int(np.ceil(np.sqrt(n_el)))
        while n_el % nx:
            nx += 1
        sys_n = replace(scen.system, Nx=nx, Ny=n_el // nx)
        stats = build_stats(sys_n, scen.geometry)
        rng = np.random.default_rng(spec.seeds[0])
        bases = [random_state(stats, sys_n.U, 1.0, rng)  # unit-power templates
                 for _ in range(n_states)]
        for p_dbm in pmax_dbm:
            p = dbm_to_watt(float(p_dbm))
            apx, mc, var = 0.0, 0.0, 0.0
            for si, base in enumerate(bases):
                state = PrecodingState(alpha=base.alpha, G=np.sqrt(p) * base.G,
                                       Phi=base.Phi)
                apx += approx_sum_rate(stats, state, sys_n.sigma2)
                m, se = ergodic_sum_rate_mc(
                    stats, state, sys_n.sigma2, spec.avg_realizations,
                    np.random.default_rng(spec.seeds[0] + 1000 + si))
                mc += m
                var += se ** 2
            rows.append((float(p_dbm), int(n_el), apx / n_states,
                         mc / n_states, float(np.sqrt(var)) / n_states))
    if out_csv:
        _write_csv(out_csv, VALIDATION_COLUMNS, rows)
    return rows


def _stats_for_sweep(scen: Scenario, sweep_name: str, value, seed: int
                     ) -> tuple[ChannelStats, Scenario]:
    """Rebuild stats for one sweep cell; users are re-dropped per seed.

    Sweep variables: pmax_dbm, rician_db (RIS-user links), n_elements,
    n_ris (extra surfaces placed on the ring through the existing ones
    around the BS/user midpoint), k_users, k_hat (actual users; the caller
    reconciles with the trained nominal K), nu (label only; the reward
    weight is a training-time property of the checkpoint). Rician factors
    are rebuilt as scalars from the scenario's mean value.
    """
    sys_cfg = scen.system
    geom = scen.geometry
    if sweep_name == "pmax_dbm":
        sys_cfg = replace(sys_cfg, P_max=dbm_to_watt(float(value)))
    elif sweep_name == "rician_db":
        kappa = 10.0 ** (float(value) / 10.0)
        geom = replace(geom,
                       rician_ris_user=np.full_like(geom.rician_ris_user, kappa))
    elif sweep_name == "n_elements":
        n_el = int(value)
        nx = int(np.ceil(np.sqrt(n_el)))
        while n_el % nx:
            nx += 1
        sys_cfg = replace(sys_cfg, Nx=nx, Ny=n_el // nx)
    elif sweep_name == "n_ris":
        l_new = int(value)
        base = np.asarray(geom.ris_pos, dtype=float)
        if l_new <= base.shape[0]:
            ris = base[:l_new]
        else:
            mid = 0.5 * (np.asarray(geom.bs_pos[:2])
                         + geom.user_pos[:, :2].mean(axis=0))
            radius = float(np.mean(np.linalg.norm(base[:, :2] - mid, axis=1)))
            height = float(np.mean(base[:, 2]))
            ang = np.arctan2(base[0, 1] - mid[1], base[0, 0] - mid[0])
            extra = []
            for i in range(base.shape[0], l_new):
                a = ang + 2.0 * np.pi * i / l_new
                extra.append([mid[0] + radius * np.cos(a),
                              mid[1] + radius * np.sin(a), height])
            ris = np.vstack([base, np.array(extra)])
        sys_cfg = replace(sys_cfg, L=l_new)
        geom = replace(geom, ris_pos=ris)
    elif sweep_name in ("k_users", "k_hat"):
        k_new = int(value)
        sys_cfg = replace(sys_cfg, K=k_new,
                          U=min(sys_cfg.U, max(1, k_new - 1)))
    elif sweep_name in ("nu", "", "iteration"):
        pass
    else:
        raise ValueError(f"unknown sweep variable {sweep_name!r}")
    center = geom.user_pos.mean(axis=0)
    radius = float(np.max(np.linalg.norm(geom.user_pos[:, :2] - center[None, :2],
                                         axis=1)))
    users = drop_users(center, max(radius, 1e-6), sys_cfg.K,
                       np.random.default_rng(seed))
    kappa = float(np.mean(scen.geometry.rician_ris_user)) \
        if sweep_name != "rician_db" else float(np.mean(geom.rician_ris_user))
    geom = replace(geom, user_pos=users,
                   rician_bs_ris=np.full(sys_cfg.L,
                                         float(np.mean(geom.rician_bs_ris))),
                   rician_ris_user=np.full((sys_cfg.K, sys_cfg.L), kappa))
    scen2 = replace(scen, system=sys_cfg, geometry=geom)
    return build_stats(sys_cfg, geom), scen2


def _evaluate_state(stats, state, sigma2, samples, seed) -> tuple[float, float]:
    rates = ergodic_user_rates_mc(stats, state, sigma2, samples,
                                  np.random.default_rng(seed))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return float(rates.sum()), jfi(rates)


def benchmark(spec: ExperimentSpec, out_csv: str | None = None) -> list[tuple]:
    """Per (algorithm, sweep value, seed): Monte-Carlo sum rate, fairness,
    wall time. Rows are emitted in deterministic sorted order."""
    spec.validate()
    rows = []
    bundle = mp.load_bundle(spec.checkpoint) if spec.checkpoint else None
    sweep_vals = spec.sweep_values or (0,)
    for value in sweep_vals:
        for seed in spec.seeds:
            stats, scen2 = _stats_for_sweep(spec.scenario, spec.sweep_name,
                                            value, seed)
            sigma2, P_max = scen2.system.sigma2, scen2.system.P_max
            for alg in spec.algorithms:
                cell = zlib.crc32(f"{spec.experiment}/{alg}/{seed}".encode())
                rng = np.random.default_rng(cell)
                eval_stats = stats
                t0 = perf_counter()
                if alg == "bfs-ao":
                    if spec.experiment == "convergence":
                        alpha = alpha_from_schedule(
                            enumerate_schedules(scen2.system.K,
                                                scen2.system.U)[0],
                            scen2.system.K)
                        state, ws = ao_solve(stats, alpha, sigma2, P_max,
                                             scen2.ao, rng=rng)
                        wall = (perf_counter() - t0) * 1e3
                        for i, obj in enumerate(ws.objective_trace):
                            rows.append((spec.experiment, alg, seed,
                                         "iteration", i, float(obj), 0.0,
                                         wall))
                        continue
                    state, _ = bfs_ao_solve(stats, scen2.system.U, sigma2,
                                            P_max, scen2.ao, rng=rng)
                elif alg == "mappo":
                    if bundle is None:
                        raise ValueError("mappo rows need spec.checkpoint")
                    if stats.K > bundle.K:
                        from .runtime import prescreen_users
                        eval_stats, _ = prescreen_users(
                            stats, np.zeros(stats.K, dtype=int), bundle.K, rng)
                        state = mp.greedy_state(bundle, eval_stats, P_max)
                    elif stats.K < bundle.K:
                        from .runtime import pad_virtual_users
                        eval_stats, mask = pad_virtual_users(stats, bundle.K)
                        state = mp.greedy_state(bundle, eval_stats, P_max,
                                                real_mask=mask)
                    else:
                        state = mp.greedy_state(bundle, stats, P_max)
                elif alg in BASELINE_KINDS:
                    state, _ = run_baseline(alg, stats, scen2.system.U,
                                            sigma2, P_max, scen2.ao, rng,
                                            interval=seed)
                else:
                    raise ValueError(f"unknown algorithm {alg!r}")
                wall = (perf_counter() - t0) * 1e3
                sr, fair = _evaluate_state(eval_stats, state, sigma2,
                                           spec.avg_realizations, seed + 7)
                rows.append((spec.experiment, alg, seed, spec.sweep_name,
                             value, sr, fair, wall))
    rows.sort(key=lambda r: (str(r[0]), str(r[1]), r[2], str(r[3]), float(r[4])))
    if out_csv:
        _write_csv(out_csv, BENCH_COLUMNS, rows)
    return rows


def time_algorithms(spec: ExperimentSpec, out_csv: str | None = None,
                    repetitions: int = 20, warmup: int = 3) -> list[tuple]:
    """Median wall time of one policy step, one full scheduling search, and
    the hybrid learned-scheduling + single-schedule solver, with sum-rate
    ratios against the exhaustive solver."""
    spec.validate()
    scen = spec.scenario
    stats = build_stats(scen.system, scen.geometry)
    sigma2, P_max = scen.system.sigma2, scen.system.P_max
    rng = np.random.default_rng(spec.seeds[0])
    if spec.checkpoint:
        bundle = mp.load_bundle(spec.checkpoint)
    else:
        bundle = mp.build_policies(scen.system, rng)
    bundle.freeze()

    o1, o2, o_ris = mp.build_observations(stats, bundle.last_alpha,
                                          bundle.last_G_raw, bundle.last_Phi)

    def run_mappo():
        cw, g, th = mp.execute_step(bundle, o1, o2, o_ris)
        state, _, _ = mp.decode_actions(cw, g, th, bundle.K, bundle.U,
                                        bundle.M, P_max, bundle.codebook)
        return state

    def run_bfs():
        state, _ = bfs_ao_solve(stats, scen.system.U, sigma2, P_max, scen.ao,
                                rng=np.random.default_rng(spec.seeds[0]))
        return state

    def run_ppo_ao():
        probs = mp.scheduling_probs(bundle, o1)
        alpha = alpha_from_schedule(bundle.codebook[int(np.argmax(probs))],
                                    bundle.K)
        state, _ = ao_solve(stats, alpha, sigma2, P_max, scen.ao,
                            rng=np.random.default_rng(spec.seeds[0]))
        return state

    entries = (("mappo", run_mappo), ("ppo-ao", run_ppo_ao), ("bfs-ao", run_bfs))
    medians, states = {}, {}
    for name, fn in entries:
        for _ in range(warmup):
            fn()
        times = []
        for _ in range(repetitions):
            t0 = perf_counter()
            states[name] = fn()
            times.append((perf_counter() - t0) * 1e3)
        medians[name] = float(np.median(times))

    sr = {name: _evaluate_state(stats, st, sigma2, spec.avg_realizations,
                                spec.seeds[0])[0]
          for name, st in states.items()}
    rows = [(name, stats.N, medians[name], 100.0 * sr[name] / sr["bfs-ao"])
            for name, _ in entries]
    if out_csv:
        _write_csv(out_csv, TIMING_COLUMNS, rows)
    return rows
