"""Walk through the channel model: statistical CSI from geometry, Rician
draws, and how the closed-form rate tracks Monte-Carlo.

Run: python demos/01_channel_and_rates.py
"""

import numpy as np

import rismaestro as rm

scen = rm.desk_scenario()
stats = rm.build_stats(scen.system, scen.geometry)

print("deployment:", f"M={scen.system.M} N={scen.system.N} L={scen.system.L}",
      f"K={scen.system.K} U={scen.system.U}")
print("BS-RIS path gains:", stats.beta_bs_ris)
print("RIS-user path gains (user 0):", stats.beta_ris_user[0])

# every LoS factor is a product of steering vectors: unit modulus, rank one
H0 = stats.los_bs_ris[0]
print("rank of LoS block 0:", np.linalg.matrix_rank(H0, tol=1e-9),
      "  |entries| =", np.abs(H0[0, :3]).round(12))

# one Rician draw vs the LoS mean
rng = np.random.default_rng(0)
sample = rm.sample_channels(stats, rng)
print("draw magnitude (link 0, element 0):", np.abs(sample.h_bs_ris[0, 0, 0]))

# Monte-Carlo vs closed form for a random joint decision
state = rm.random_state(stats, scen.system.U, scen.system.P_max, rng)
approx = rm.approx_sum_rate(stats, state, scen.system.sigma2)
mc, se = rm.ergodic_sum_rate_mc(stats, state, scen.system.sigma2, 20_000,
                                np.random.default_rng(1))
print(f"closed form {approx:.4f} bit/s/Hz vs Monte-Carlo {mc:.4f} (+-{se:.4f})")
print(f"relative gap {(abs(approx - mc) / mc) * 100:.1f}%")
