"""Train the multi-agent policies on a fixed desk-scale deployment and
compare the learned greedy actions against the centralized solver.

A short run (40 episodes) already lands close; pass --full for the
150-episode schedule used by the acceptance suite.

Run: python demos/03_train_agents.py [--full]
"""

import sys

import numpy as np

import rismaestro as rm
from rismaestro import mappo
from rismaestro.config import MappoConfig

full = "--full" in sys.argv
scen = rm.desk_scenario()
stats = rm.build_stats(scen.system, scen.geometry)
sigma2, P_max = scen.system.sigma2, scen.system.P_max

episodes = 150 if full else 40
cfg = MappoConfig(episodes=episodes, steps=256, buffer=256, batch=128)
print(f"training {episodes} episodes x {cfg.steps} steps ...")
bundle, log = mappo.train(stats, scen.system, cfg, seed=0)

for ep in range(0, episodes, max(episodes // 10, 1)):
    print(f"  episode {ep:3d}: mean reward {log.mean_reward[ep]:.3f}  "
          f"greedy eval {log.sum_rate_eval[ep]:.3f}")

bundle.freeze()
state = mappo.greedy_state(bundle, stats, P_max)
mc_rl, _ = rm.ergodic_sum_rate_mc(stats, state, sigma2, 20_000,
                                  np.random.default_rng(5))

best, _ = rm.bfs_ao_solve(stats, scen.system.U, sigma2, P_max, scen.ao,
                          rng=np.random.default_rng(4))
mc_ao, _ = rm.ergodic_sum_rate_mc(stats, best, sigma2, 20_000,
                                  np.random.default_rng(5))
print(f"\nlearned policy: {mc_rl:.4f} bit/s/Hz")
print(f"exhaustive solver: {mc_ao:.4f} bit/s/Hz")
print(f"ratio: {100 * mc_rl / mc_ao:.1f}%")

mappo.save_bundle(bundle, "demo_bundle.ckpt")
print("checkpoint written to demo_bundle.ckpt")
