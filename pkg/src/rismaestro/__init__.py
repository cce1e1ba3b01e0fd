"""Joint user scheduling, BS precoding and distributed-RIS phase configuration.

Library layout (one module per subsystem):

* config   - dimensions, powers, geometry, YAML loading, desk/paper presets
* channel  - statistical CSI from geometry, Rician sampling, user drops
* rate     - SINR, Monte-Carlo ergodic rates, closed-form approximation, JFI
* manifold - Riemannian CG for unit-modulus quadratic programs
* ao       - alternating solver and the exhaustive scheduling search
* nets     - dense networks, Adam, policy heads, checkpoint format
* mappo    - multi-agent PPO: observations, actions, reward, training loop
* runtime  - coherence-interval execution loop, user scalability rules
* bench    - baselines, experiment suite, CSV emission
* cli      - subcommands wrapping the benchmark harness
"""

from .config import (AoOptions, Geometry, MappoConfig, Scenario, SystemConfig,
                     db_to_linear, dbm_to_watt, desk_scenario, load_scenario,
                     paper_scenario, watt_to_dbm)
from .channel import (ChannelSample, ChannelStats, build_stats, drop_users,
                      path_loss, sample_channels, sample_channels_batch,
                      steering_bs, steering_ris)
from .rate import (PrecodingState, approx_rates, approx_sum_rate,
                   ergodic_sum_rate_mc, ergodic_user_rates_mc, jfi, q_matrix,
                   random_state, sinr)
from .manifold import ManifoldProblem, RcgResult, rcg_unit_modulus
from .ao import (AoWorkspace, PartialResults, SolverFailure,
                 alpha_from_schedule, ao_solve, bfs_ao_solve,
                 enumerate_schedules, fp_surrogate, update_epsilon)

__version__ = "0.1.0"
