"""Produce the benchmark CSVs the plotting frontend consumes: approximation
validation, a power sweep against the random-scheduling baseline, a solver
convergence trace, and the runtime comparison.

Run: python demos/05_benchmarks.py   (writes four CSVs into ./bench_out)
"""

import os

import rismaestro as rm
from rismaestro.bench import (ExperimentSpec, benchmark, time_algorithms,
                              validate_approximation)

os.makedirs("bench_out", exist_ok=True)
scen = rm.desk_scenario()

spec = ExperimentSpec(experiment="validation", scenario=scen, seeds=(0,),
                      avg_realizations=2000)
rows = validate_approximation(spec, out_csv="bench_out/validation.csv",
                              n_states=6)
worst = max(abs(r[2] - r[3]) / r[3] for r in rows)
print(f"validation.csv: {len(rows)} points, worst gap {100 * worst:.1f}%")

spec = ExperimentSpec(experiment="power_sweep", scenario=scen,
                      sweep_name="pmax_dbm",
                      sweep_values=(-5.0, 5.0, 10.0, 15.0, 25.0),
                      algorithms=("bfs-ao", "random-scheduling", "random-ris"),
                      seeds=(0, 1), avg_realizations=300)
rows = benchmark(spec, out_csv="bench_out/power_sweep.csv")
print(f"power_sweep.csv: {len(rows)} rows")

spec = ExperimentSpec(experiment="convergence", scenario=scen,
                      sweep_name="iteration", sweep_values=(0,),
                      algorithms=("bfs-ao",), seeds=(0, 1, 2),
                      avg_realizations=50)
rows = benchmark(spec, out_csv="bench_out/convergence.csv")
print(f"convergence.csv: {len(rows)} rows")

spec = ExperimentSpec(experiment="timing", scenario=scen, seeds=(0,),
                      avg_realizations=500)
rows = time_algorithms(spec, out_csv="bench_out/timing.csv")
for name, n_el, med, ratio in rows:
    print(f"timing: {name:8s} median {med:9.3f} ms  ratio {ratio:6.2f}%")
