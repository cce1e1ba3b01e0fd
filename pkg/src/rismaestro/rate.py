"""Exact SINR / Monte-Carlo ergodic rates and the statistical-CSI closed form.

The joint decision variable is a `PrecodingState`: scheduling indicator
alpha, BS precoder G (one column per scheduled user, ascending user index),
and per-RIS reflection coefficients Phi. The closed-form path goes through
the per-user second-moment matrix Q_k of the composite channel, which
depends on Phi but not on G.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSample, ChannelStats, sample_channels_batch


@dataclass
class PrecodingState:
    """Scheduling vector, BS precoder and RIS phases.

    Column u of G serves the u-th scheduled user in ascending user index,
    i.e. user `scheduled[u]`.
    """

    alpha: np.ndarray   # (K,) 0/1
    G: np.ndarray       # (M, U) complex
    Phi: np.ndarray     # (L, N) complex unit-modulus reflection coefficients

    @property
    def scheduled(self) -> np.ndarray:
        return np.flatnonzero(self.alpha)

    @property
    def phi_flat(self) -> np.ndarray:
        """Reflection coefficients on the stacked NL grid (block order l)."""
        return self.Phi.reshape(-1)

    def power(self) -> float:
        return float(np.sum(np.abs(self.G) ** 2))

    def validate(self, U: int, P_max: float | None = None) -> None:
        if int(np.sum(self.alpha)) != U:
            raise ValueError("alpha must schedule exactly U users")
        if np.max(np.abs(np.abs(self.Phi) - 1.0)) > 1e-12:
            raise ValueError("RIS coefficients must be unit modulus")
        if P_max is not None and self.power() > P_max * (1.0 + 1e-9):
            raise ValueError("precoder exceeds the power budget")


def random_state(stats: ChannelStats, U: int, P_max: float,
                 rng: np.random.Generator,
                 alpha: np.ndarray | None = None) -> PrecodingState:
    """Random schedule (unless given), Gaussian precoder at full power, uniform phases."""
    if alpha is None:
        sched = rng.choice(stats.K, size=U, replace=False)
        alpha = np.zeros(stats.K, dtype=int)
        alpha[np.sort(sched)] = 1
    G = rng.standard_normal((stats.M, U)) + 1j * rng.standard_normal((stats.M, U))
    G *= np.sqrt(P_max) / np.linalg.norm(G)
    Phi = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(stats.L, stats.N)))
    return PrecodingState(alpha=alpha, G=G, Phi=Phi)


def composite_channels(sample: ChannelSample, Phi: np.ndarray) -> np.ndarray:
    """Effective BS->user rows sum_l h_{k,l}^H Phi_l H_l.

    Accepts a single sample (K,L,N)/(L,N,M) or a batch with a leading draw
    axis; returns (K, M) or (S, K, M) accordingly.
    """
    h, H = sample.h_ris_user, sample.h_bs_ris
    if h.ndim == 3:
        weighted = h.conj() * Phi[None, :, :]          # (K, L, N)
        return np.einsum("kln,lnm->km", weighted, H)
    weighted = h.conj() * Phi[None, None, :, :]        # (S, K, L, N)
    return np.einsum("skln,slnm->skm", weighted, H)


def sinr(sample: ChannelSample, state: PrecodingState, sigma2: float) -> np.ndarray:
    """Per-user SINR for one realization; zero for unscheduled users."""
    comp = composite_channels(sample, state.Phi)       # (K, M)
    sched = state.scheduled
    V = comp[sched] @ state.G                          # (U, U): V[u, n] = h_u^T g_n
    p = np.abs(V) ** 2
    out = np.zeros(len(state.alpha))
    for u in range(len(sched)):
        interference = np.sum(p[u]) - p[u, u]
        out[sched[u]] = p[u, u] / (sigma2 + interference)
    return out


def ergodic_sum_rate_mc(stats: ChannelStats, state: PrecodingState, sigma2: float,
                        samples: int, rng: np.random.Generator,
                        chunk: int = 20000) -> tuple[float, float]:
    """Monte-Carlo ergodic sum rate (bit/s/Hz) and its standard error."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        batch = sample_channels_batch(stats, n, rng)
        comp = composite_channels(batch, state.Phi)    # (n, K, M)
        V = comp[:, state.scheduled, :] @ state.G      # (n, U, U)
        p = np.abs(V) ** 2
        sig = np.einsum("suu->su", p)
        interference = p.sum(axis=2) - sig
        rates = np.log2(1.0 + sig / (sigma2 + interference)).sum(axis=1)
        total += rates.sum()
        total_sq += np.sum(rates ** 2)
        done += n
    mean = total / samples
    var = max(total_sq / samples - mean ** 2, 0.0)
    return mean, float(np.sqrt(var / samples))


def ergodic_user_rates_mc(stats: ChannelStats, state: PrecodingState, sigma2: float,
                          samples: int, rng: np.random.Generator) -> np.ndarray:
    """Per-user Monte-Carlo ergodic rates (bit/s/Hz)."""
    batch = sample_channels_batch(stats, samples, rng)
    comp = composite_channels(batch, state.Phi)
    sched = state.scheduled
    V = comp[:, sched, :] @ state.G
    p = np.abs(V) ** 2
    sig = np.einsum("suu->su", p)
    interference = p.sum(axis=2) - sig
    per_user = np.log2(1.0 + sig / (sigma2 + interference)).mean(axis=0)
    out = np.zeros(stats.K)
    out[sched] = per_user
    return out


def equivalent_los_rows(stats: ChannelStats, Phi: np.ndarray) -> np.ndarray:
    """Rows h_k^equ = (weighted h_k stack)^H blkdiag(Phi) (weighted H stack), (K, M)."""
    phi = Phi.reshape(-1)
    return (stats.ris_user_stack.conj() * phi[None, :]) @ stats.bs_ris_stack


def q_matrix(stats: ChannelStats, Phi: np.ndarray, k: int) -> np.ndarray:
    """Second moment E[(h_k^comp)^H h_k^comp] of user k's composite channel.

    Three statistical-CSI terms: the LoS x LoS rank-one part (the only
    Phi-dependent one), BS-side direction terms from the RIS-user scatter,
    and an identity term from the BS-RIS scatter.
    """
    h_equ = equivalent_los_rows(stats, Phi)[k]          # (M,)
    Q = np.outer(h_equ.conj(), h_equ)
    kl, ku = stats.ric_bs_ris, stats.ric_ris_user[k]
    bl, bu = stats.beta_bs_ris, stats.beta_ris_user[k]
    c_dir = kl * bl * bu * stats.N / ((kl + 1.0) * (ku + 1.0))
    for l in range(stats.L):
        a = stats.bs_steering[l]
        Q += c_dir[l] * np.outer(a, a.conj())
    c_eye = float(np.sum(bl * bu * stats.N / (kl + 1.0)))
    Q += c_eye * np.eye(stats.M)
    return Q


def _quadratic_forms(stats: ChannelStats, state: PrecodingState) -> np.ndarray:
    """q[k, u] = g_u^H Q_k g_u for every user k and scheduled column u."""
    sched = state.scheduled
    out = np.empty((stats.K, len(sched)))
    for k in range(stats.K):
        Q = q_matrix(stats, state.Phi, k)
        out[k] = np.real(np.einsum("mu,mn,nu->u", state.G.conj(), Q, state.G))
    return out


def approx_rates(stats: ChannelStats, state: PrecodingState,
                 sigma2: float) -> np.ndarray:
    """Closed-form per-user ergodic-rate approximation (bit/s/Hz)."""
    sched = state.scheduled
    out = np.zeros(stats.K)
    if len(sched) == 0:
        return out
    q = _quadratic_forms(stats, state)  # (K, U)
    for u, k in enumerate(sched):
        signal = q[k, u]
        interference = np.sum(q[k]) - signal
        out[k] = np.log2(1.0 + signal / (sigma2 + interference))
    return out


def approx_sum_rate(stats: ChannelStats, state: PrecodingState, sigma2: float) -> float:
    return float(np.sum(approx_rates(stats, state, sigma2)))


def jfi(rates: np.ndarray) -> float:
    """Jain's fairness index (sum r)^2 / (K sum r^2); 0 for all-zero rates."""
    rates = np.asarray(rates, dtype=float)
    denom = len(rates) * float(np.sum(rates ** 2))
    if denom == 0.0:
        warnings.warn("fairness index of an all-zero rate vector is undefined; "
                      "returning 0", RuntimeWarning)
        return 0.0
    return float(np.sum(rates)) ** 2 / denom
