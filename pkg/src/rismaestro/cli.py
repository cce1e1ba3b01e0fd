"""Command-line front end for the benchmark harness.

Subcommands: validate-approx, solve-bfs-ao, train, evaluate, bench, time.
Every subcommand accepts --config (YAML), --seed, --out and the scale
presets --desk / --paper; train and evaluate use --checkpoint. Errors exit
nonzero after printing a single machine-readable line
`error: {"type": ..., "message": ...}` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import mappo as mp
from .ao import bfs_ao_solve
from .bench import ExperimentSpec, benchmark, time_algorithms, validate_approximation
from .channel import build_stats
from .config import Scenario, desk_scenario, load_scenario, paper_scenario
from .runtime import dynamic_loop


def _scenario(args) -> Scenario:
    preset = "paper" if args.paper else "desk"
    if args.config:
        return load_scenario(args.config, preset=preset)
    return paper_scenario() if args.paper else desk_scenario()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML scenario file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path")
    scale = p.add_mutually_exclusive_group()
    scale.add_argument("--desk", action="store_true",
                       help="desk-scale preset (default)")
    scale.add_argument("--paper", action="store_true",
                       help="full-scale preset")


def cmd_validate_approx(args) -> int:
    scen = _scenario(args)
    spec = ExperimentSpec(experiment="validation", scenario=scen,
                          seeds=(args.seed,), avg_realizations=10000)
    rows = validate_approximation(spec, out_csv=args.out)
    worst = max(abs(r[2] - r[3]) / max(r[3], 1e-12) for r in rows)
    print(f"validated {len(rows)} points, worst relative gap "
          f"{100 * worst:.2f}%")
    return 0


def cmd_solve_bfs_ao(args) -> int:
    scen = _scenario(args)
    stats = build_stats(scen.system, scen.geometry)
    state, table = bfs_ao_solve(stats, scen.system.U, scen.system.sigma2,
                                scen.system.P_max, scen.ao,
                                rng=np.random.default_rng(args.seed))
    best = max(table.values())
    print(f"best schedule {tuple(int(u) for u in state.scheduled)} "
          f"objective {best:.6f} bit/s/Hz")
    if args.out:
        with open(args.out, "w") as f:
            f.write("schedule,objective_bps_hz\n")
            for sched, obj in table.items():
                f.write("|".join(str(u) for u in sched) + f",{obj:.10g}\n")
    return 0


def cmd_train(args) -> int:
    scen = _scenario(args)
    stats = build_stats(scen.system, scen.geometry)
    bundle, log = mp.train(stats, scen.system, scen.mappo, seed=args.seed,
                           ao_opts=scen.ao)
    print(f"trained {scen.mappo.episodes} episodes; final eval sum rate "
          f"{log.sum_rate_eval[-1]:.4f} bit/s/Hz")
    if args.out:
        log.to_csv(args.out)
    if args.checkpoint:
        mp.save_bundle(bundle, args.checkpoint)
        print(f"checkpoint written to {args.checkpoint}")
    return 0


def cmd_evaluate(args) -> int:
    scen = _scenario(args)
    if not args.checkpoint:
        raise ValueError("evaluate requires --checkpoint")
    bundle = mp.load_bundle(args.checkpoint)
    stats = build_stats(scen.system, scen.geometry)
    trace = dynamic_loop(bundle, stats, steps=args.steps,
                         sigma2=scen.system.sigma2, P_max=scen.system.P_max,
                         rng=np.random.default_rng(args.seed))
    mean_sr = float(np.mean(trace.sum_rate_mc))
    print(f"{len(trace)} intervals, mean sum rate {mean_sr:.4f} bit/s/Hz")
    if args.out:
        trace.to_csv(args.out)
    return 0


def cmd_bench(args) -> int:
    scen = _scenario(args)
    algorithms = tuple(args.algorithms.split(","))
    sweep_values = tuple(float(v) for v in args.values.split(",")) \
        if args.values else ()
    spec = ExperimentSpec(experiment=args.experiment, scenario=scen,
                          sweep_name=args.sweep, sweep_values=sweep_values,
                          algorithms=algorithms, seeds=(args.seed,),
                          avg_realizations=args.realizations,
                          checkpoint=args.checkpoint)
    rows = benchmark(spec, out_csv=args.out)
    print(f"benchmark wrote {len(rows)} rows")
    return 0


def cmd_time(args) -> int:
    scen = _scenario(args)
    spec = ExperimentSpec(experiment="timing", scenario=scen,
                          seeds=(args.seed,), checkpoint=args.checkpoint,
                          avg_realizations=args.realizations)
    rows = time_algorithms(spec, out_csv=args.out)
    for name, n_el, med, ratio in rows:
        print(f"{name:10s} N={n_el:<4d} median {med:10.3f} ms  "
              f"sum-rate ratio {ratio:6.2f}%")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rismaestro",
        description="Scheduling / precoding / RIS-phase benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-approx",
                       help="closed form vs Monte-Carlo over P_max and N")
    _add_common(p)
    p.set_defaults(fn=cmd_validate_approx)

    p = sub.add_parser("solve-bfs-ao", help="run the exhaustive solver once")
    _add_common(p)
    p.set_defaults(fn=cmd_solve_bfs_ao)

    p = sub.add_parser("train", help="train the multi-agent policies")
    _add_common(p)
    p.add_argument("--checkpoint", help="write the trained bundle here")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="run the execution loop from a checkpoint")
    _add_common(p)
    p.add_argument("--checkpoint", required=False)
    p.add_argument("--steps", type=int, default=50)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("bench", help="sweep experiment to CSV")
    _add_common(p)
    p.add_argument("--experiment", default="sweep")
    p.add_argument("--sweep", default="pmax_dbm",
                   help="pmax_dbm | rician_db | n_elements | n_ris | "
                        "k_users | k_hat | nu | ''")
    p.add_argument("--values", default="",
                   help="comma-separated sweep values")
    p.add_argument("--algorithms", default="bfs-ao,random-scheduling")
    p.add_argument("--realizations", type=int, default=300)
    p.add_argument("--checkpoint", help="bundle for mappo rows")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("time", help="median runtimes and performance ratios")
    _add_common(p)
    p.add_argument("--checkpoint", help="bundle for the policy timings")
    p.add_argument("--realizations", type=int, default=2000)
    p.set_defaults(fn=cmd_time)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # noqa: BLE001 - the CLI contract wants one line
        payload = {"type": type(exc).__name__, "message": str(exc)}
        print(f"error: {json.dumps(payload)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
