"""Coherence-interval execution loop with user-scalability rules.

Each interval the loop reads fresh statistical CSI (a perfect oracle stands
in for online estimation), reconciles the actual user count K_hat with the
trained nominal K (priority pre-screening when K_hat > K, zero-channel
virtual users when K_hat < K), builds local observations from the policies'
stored last-training action, executes the deterministic joint action, and
records achieved rates. Agents are stateless across intervals: observations
always derive from the stored action, which is what keeps the process free
of inter-agent signaling.

Priorities: after every interval the scheduled users drop to priority zero
and every other actual user gains one. Users arriving mid-stream start at
priority zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelStats
from .mappo import PolicyBundle, build_observations, decode_actions, forward
from .rate import ergodic_user_rates_mc, jfi


@dataclass
class PriorityState:
    """Nonnegative integer priorities, one per actual user."""

    priorities: np.ndarray

    @classmethod
    def zeros(cls, k_hat: int) -> "PriorityState":
        return cls(priorities=np.zeros(k_hat, dtype=int))

    def resize(self, k_hat: int) -> None:
        old = self.priorities
        if k_hat <= len(old):
            self.priorities = old[:k_hat].copy()
        else:
            self.priorities = np.concatenate(
                [old, np.zeros(k_hat - len(old), dtype=int)])


def prescreen_users(stats_actual: ChannelStats, priorities: np.ndarray, K: int,
                    rng: np.random.Generator) -> tuple[ChannelStats, np.ndarray]:
    """Keep the K highest-priority users; same-priority ties drawn uniformly.

    Returns (restricted stats, index map from restricted rows to actual users).
    """
    k_hat = stats_actual.K
    if k_hat <= K:
        raise ValueError("pre-screening needs more actual users than K; "
                         "pad with virtual users instead")
    priorities = np.asarray(priorities)
    order = []
    for p in np.sort(np.unique(priorities))[::-1]:
        tier = np.flatnonzero(priorities == p)
        order.extend(rng.permutation(tier).tolist())
    selected = np.sort(np.array(order[:K], dtype=int))
    return stats_actual.user_subset(selected), selected


def pad_virtual_users(stats_actual: ChannelStats, K: int
                      ) -> tuple[ChannelStats, np.ndarray]:
    """Append K - K_hat users with zero LoS vectors and zero path gains.

    Returns (padded stats, boolean mask of the real users).
    """
    k_hat = stats_actual.K
    mask = np.zeros(K, dtype=bool)
    mask[:k_hat] = True
    if k_hat == K:
        return stats_actual, mask
    if k_hat > K:
        raise ValueError("cannot pad when actual users exceed K")
    pad = K - k_hat
    padded = ChannelStats(
        M=stats_actual.M, N=stats_actual.N, L=stats_actual.L, K=K,
        los_bs_ris=stats_actual.los_bs_ris,
        los_ris_user=np.concatenate(
            [stats_actual.los_ris_user,
             np.zeros((pad, stats_actual.L, stats_actual.N), dtype=complex)]),
        beta_bs_ris=stats_actual.beta_bs_ris,
        beta_ris_user=np.concatenate(
            [stats_actual.beta_ris_user, np.zeros((pad, stats_actual.L))]),
        ric_bs_ris=stats_actual.ric_bs_ris,
        ric_ris_user=np.concatenate(
            [stats_actual.ric_ris_user, np.zeros((pad, stats_actual.L))]),
        theta_bs_dep=stats_actual.theta_bs_dep,
        bs_steering=stats_actual.bs_steering,
        bs_ris_stack=stats_actual.bs_ris_stack,
        ris_user_stack=np.concatenate(
            [stats_actual.ris_user_stack,
             np.zeros((pad, stats_actual.NL), dtype=complex)]),
    )
    return padded, mask


def mask_virtual_actions(probabilities: np.ndarray, real_mask: np.ndarray,
                         codebook: list[tuple[int, ...]]) -> int:
    """Highest-probability codeword whose users are all real."""
    valid = [i for i, cw in enumerate(codebook)
             if all(real_mask[u] for u in cw)]
    if not valid:
        raise ValueError("no codeword avoids the virtual users")
    valid = np.array(valid)
    return int(valid[np.argmax(probabilities[valid])])


def update_priorities(priorities: np.ndarray, scheduled: np.ndarray
                      ) -> np.ndarray:
    """Scheduled users reset to zero, everyone else gains one."""
    out = np.asarray(priorities).copy() + 1
    out[np.asarray(scheduled, dtype=int)] = 0
    return out


@dataclass
class RuntimeTrace:
    """Per-interval record of the execution loop (CSV-ready)."""

    interval: list = field(default_factory=list)
    scheduled_users: list = field(default_factory=list)  # actual-user indices
    sum_rate_mc: list = field(default_factory=list)
    jfi: list = field(default_factory=list)
    overhead_bits_saved: list = field(default_factory=list)

    COLUMNS = ("interval", "scheduled_users", "sum_rate_mc", "jfi",
               "overhead_bits_saved")

    def __len__(self) -> int:
        return len(self.interval)

    def to_csv(self, path: str) -> None:
        with open(path, "w") as f:
            f.write(",".join(self.COLUMNS) + "\n")
            for i in range(len(self.interval)):
                f.write(f"{self.interval[i]},{self.scheduled_users[i]},"
                        f"{self.sum_rate_mc[i]:.10g},{self.jfi[i]:.10g},"
                        f"{self.overhead_bits_saved[i]}\n")


def dynamic_loop(bundle: PolicyBundle, scenario_stream, steps: int,
                 sigma2: float, P_max: float, rng: np.random.Generator,
                 mc_samples: int = 300, symbol_bits: int = 16) -> RuntimeTrace:
    """Run `steps` coherence intervals of distributed execution.

    `scenario_stream` is a callable interval -> ChannelStats for the actual
    users (any K_hat) or a fixed ChannelStats. The trace reports the per
    interval Monte-Carlo rates of the decoded action and the signaling cost
    a centralized phase push would have incurred (symbol_bits * N * L).
    """
    bundle.freeze()
    trace = RuntimeTrace()
    prio: PriorityState | None = None

    for t in range(steps):
        stats_actual = scenario_stream(t) if callable(scenario_stream) \
            else scenario_stream
        k_hat = stats_actual.K
        if prio is None:
            prio = PriorityState.zeros(k_hat)
        else:
            prio.resize(k_hat)

        real_mask = np.ones(bundle.K, dtype=bool)
        if k_hat > bundle.K:
            stats, idx_map = prescreen_users(stats_actual, prio.priorities,
                                             bundle.K, rng)
        elif k_hat < bundle.K:
            stats, real_mask = pad_virtual_users(stats_actual, bundle.K)
            idx_map = np.arange(bundle.K)
        else:
            stats, idx_map = stats_actual, np.arange(bundle.K)

        o1, o2, o_ris = build_observations(stats, bundle.last_alpha,
                                           bundle.last_G_raw, bundle.last_Phi)
        probs, _ = forward(bundle.sched_net, bundle.norm_o1.normalize(o1))
        if np.all(real_mask):
            codeword = int(np.argmax(probs))
        else:
            codeword = mask_virtual_actions(probs, real_mask, bundle.codebook)
        g_reals, _ = forward(bundle.prec_net, bundle.norm_o2.normalize(o2))
        theta = np.stack([forward(bundle.ris_net,
                                  bundle.norm_ris.normalize(o))[0]
                          for o in o_ris])
        state, _, _ = decode_actions(codeword, g_reals, theta, bundle.K,
                                     bundle.U, bundle.M, P_max,
                                     bundle.codebook)

        rates = ergodic_user_rates_mc(stats, state, sigma2, mc_samples, rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            fair = jfi(rates[real_mask] if not np.all(real_mask) else rates)
        scheduled_actual = np.asarray(idx_map)[state.scheduled]

        trace.interval.append(t)
        trace.scheduled_users.append("|".join(str(int(u))
                                              for u in scheduled_actual))
        trace.sum_rate_mc.append(float(rates.sum()))
        trace.jfi.append(fair)
        trace.overhead_bits_saved.append(symbol_bits * bundle.N * bundle.L)

        prio.priorities = update_priorities(prio.priorities, scheduled_actual)

    return trace
