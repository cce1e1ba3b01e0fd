"""Multi-agent PPO for joint scheduling, BS precoding and RIS phases.

Agents: a discrete scheduling actor over the C(K, U) codebook, a Gaussian
BS-precoding actor (2MU reals), one Gaussian RIS actor shared by all L RIS
agents (N phase reals each), and a centralized critic over the concatenated
scheduling + precoding observations (2KM + 2U^2 reals).

Observation recipe (all complex matrices flattened as concat(Re, Im),
row-major): the scheduling agent sees the K x M equivalent LoS channel under
the previous phases; the precoding agent sees the U x U product of the
scheduled users' equivalent channels with the previous raw precoder action;
RIS agent l sees the U x M per-surface product under its own previous
phases. Weighted LoS stacks are used throughout.

Training-time actions are sampled (stochastic behavior policy); execution
uses the argmax codeword and Gaussian means. Observation coordinates are
normalized by running mean/std statistics, frozen at evaluation.

Bundle checkpoint layout: four records in the dense-net format (scheduling,
precoding, RIS with log-std, critic), then uint32 dims (K, U, M, N, L),
then three normalizer blocks (uint32 dim, float64 count, mean, var) for the
scheduling / precoding / RIS observations, then the last executed action
(uint8 alpha[K]; float64 Re then Im of G raw, row-major; float64 Re then Im
of the L x N phase matrix, row-major).
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .ao import alpha_from_schedule, ao_solve, enumerate_schedules
from .channel import ChannelStats
from .config import AoOptions, MappoConfig, SystemConfig
from .nets import (LOG_STD_MAX, LOG_STD_MIN, AdamState, DenseNet, adam_step,
                   backward, categorical_logprob_sample, forward,
                   gaussian_logprob_sample, init_dense, read_net, write_net)
from .rate import PrecodingState, approx_rates, equivalent_los_rows, jfi

HIDDEN_SIZES = {  # fixed hyper-parameters of the four networks
    "sched": (64, 28),
    "prec": (16, 32),
    "ris": (32, 64),
    "critic": (64, 8),
}


class TrainingDiverged(RuntimeError):
    """Raised when the mean episode reward turns non-finite; carries the
    serialized last finite bundle in .checkpoint_bytes."""

    def __init__(self, message: str, checkpoint_bytes: bytes):
        super().__init__(message)
        self.checkpoint_bytes = checkpoint_bytes


@dataclass
class RunningNorm:
    """Per-coordinate running mean/std; identity until first update."""

    mean: np.ndarray
    var: np.ndarray
    count: float = 0.0
    frozen: bool = False

    @classmethod
    def for_dim(cls, dim: int) -> "RunningNorm":
        return cls(mean=np.zeros(dim), var=np.ones(dim))

    def update(self, batch: np.ndarray) -> None:
        if self.frozen:
            return
        batch = np.atleast_2d(batch)
        n = batch.shape[0]
        b_mean = batch.mean(axis=0)
        b_var = batch.var(axis=0)
        if self.count == 0:
            self.mean, self.var, self.count = b_mean, b_var, float(n)
            return
        tot = self.count + n
        delta = b_mean - self.mean
        m2 = self.var * self.count + b_var * n + delta ** 2 * self.count * n / tot
        self.mean = self.mean + delta * n / tot
        self.var = m2 / tot
        self.count = tot

    def normalize(self, x: np.ndarray) -> np.ndarray:
        if self.count == 0:
            return np.asarray(x, dtype=float)
        return (x - self.mean) / np.sqrt(self.var + 1e-8)


def _c2r(mat: np.ndarray) -> np.ndarray:
    """Flatten a complex matrix to reals: Re entries then Im entries."""
    return np.concatenate([mat.real.ravel(), mat.imag.ravel()])


def build_observations(stats: ChannelStats, alpha_prev: np.ndarray,
                       G_prev: np.ndarray, Phi_prev: np.ndarray
                       ) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Local observations (o1, o2, [o_ris per surface]) as real vectors."""
    sched = np.flatnonzero(alpha_prev)
    equiv = equivalent_los_rows(stats, Phi_prev)        # (K, M)
    o1 = _c2r(equiv)
    o2 = _c2r(equiv[sched] @ G_prev)                    # (U, U)
    o_ris = []
    N = stats.N
    for l in range(stats.L):
        blk = slice(l * N, (l + 1) * N)
        h_l = stats.ris_user_stack[sched, blk]          # (U, N) weighted rows
        H_l = stats.bs_ris_stack[blk]                   # (N, M) weighted block
        o = (h_l.conj() * Phi_prev[l][None, :]) @ H_l   # (U, M)
        o_ris.append(_c2r(o))
    return o1, o2, o_ris


def decode_actions(codeword: int, g_reals: np.ndarray, theta: np.ndarray,
                   K: int, U: int, M: int, P_max: float,
                   codebook: list[tuple[int, ...]]
                   ) -> tuple[PrecodingState, np.ndarray, bool]:
    """Joint action -> (state with the power-scaled precoder, raw complex G,
    degenerate-G flag). The raw G feeds the next observation; the scaled G
    meets the power budget with equality."""
    if not (0 <= codeword < len(codebook)):
        raise ValueError(f"codeword {codeword} outside the codebook")
    alpha = alpha_from_schedule(codebook[codeword], K)
    g_reals = np.asarray(g_reals, dtype=float)
    G_raw = (g_reals[:M * U].reshape(M, U, order="F")
             + 1j * g_reals[M * U:].reshape(M, U, order="F"))
    norm = np.linalg.norm(G_raw)
    degenerate = norm == 0.0
    G = np.zeros_like(G_raw) if degenerate else np.sqrt(P_max) * G_raw / norm
    Phi = np.exp(1j * np.asarray(theta, dtype=float))
    return PrecodingState(alpha=alpha, G=G, Phi=Phi), G_raw, degenerate


def shared_reward(stats: ChannelStats, state: PrecodingState, sigma2: float,
                  nu: float) -> tuple[float, np.ndarray]:
    """(1 - nu) * sum-rate + nu * fairness index, on the closed-form rates."""
    rates = approx_rates(stats, state, sigma2)
    r = (1.0 - nu) * float(rates.sum())
    if nu != 0.0:
        r += nu * jfi(rates)
    return r, rates


def compute_gae(rewards: np.ndarray, values: np.ndarray, gamma: float,
                lam: float) -> np.ndarray:
    """Exponentially weighted TD residuals, truncated at the episode end."""
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    T = len(rewards)
    if len(values) != T + 1:
        raise ValueError("values must have length T+1 (bootstrap included)")
    adv = np.zeros(T)
    acc = 0.0
    for t in range(T - 1, -1, -1):
        delta = rewards[t] + gamma * values[t + 1] - values[t]
        acc = delta + gamma * lam * acc
        adv[t] = acc
    return adv


@dataclass
class PolicyBundle:
    """The four networks plus normalizers and the last executed raw action."""

    K: int
    U: int
    M: int
    N: int
    L: int
    codebook: list[tuple[int, ...]]
    sched_net: DenseNet
    prec_net: DenseNet
    prec_log_std: np.ndarray
    ris_net: DenseNet
    ris_log_std: np.ndarray
    critic_net: DenseNet
    norm_o1: RunningNorm
    norm_o2: RunningNorm
    norm_ris: RunningNorm
    last_alpha: np.ndarray = None
    last_G_raw: np.ndarray = None
    last_Phi: np.ndarray = None

    def freeze(self) -> None:
        for n in (self.norm_o1, self.norm_o2, self.norm_ris):
            n.frozen = True

    def flat_params(self) -> dict[str, list[np.ndarray]]:
        return {
            "sched": self.sched_net.params(),
            "prec": self.prec_net.params() + [self.prec_log_std],
            "ris": self.ris_net.params() + [self.ris_log_std],
            "critic": self.critic_net.params(),
        }


def build_policies(system: SystemConfig, rng: np.random.Generator) -> PolicyBundle:
    K, U, M, N, L = system.K, system.U, system.M, system.N, system.L
    codebook = enumerate_schedules(K, U)
    h = HIDDEN_SIZES
    sched = init_dense([2 * K * M, *h["sched"], len(codebook)], "softmax", rng)
    prec = init_dense([2 * U * U, *h["prec"], 2 * M * U], "linear", rng)
    ris = init_dense([2 * M * U, *h["ris"], N], "linear", rng)
    critic = init_dense([2 * K * M + 2 * U * U, *h["critic"], 1], "linear", rng,
                        out_gain=1.0)
    bundle = PolicyBundle(
        K=K, U=U, M=M, N=N, L=L, codebook=codebook,
        sched_net=sched,
        prec_net=prec, prec_log_std=np.full(2 * M * U, np.log(0.5)),
        ris_net=ris, ris_log_std=np.full(N, np.log(0.5)),
        critic_net=critic,
        norm_o1=RunningNorm.for_dim(2 * K * M),
        norm_o2=RunningNorm.for_dim(2 * U * U),
        norm_ris=RunningNorm.for_dim(2 * M * U),
        last_alpha=alpha_from_schedule(codebook[0], K),
        # neutral nonzero placeholder: a zero raw precoder would zero the
        # precoding observation and decode to the degenerate zero action
        last_G_raw=np.full((M, U), (1.0 + 1.0j) / np.sqrt(2.0 * M * U)),
        last_Phi=np.ones((L, N), dtype=complex),
    )
    return bundle


def execute_step(bundle: PolicyBundle, o1: np.ndarray, o2: np.ndarray,
                 o_ris: list[np.ndarray]
                 ) -> tuple[int, np.ndarray, np.ndarray]:
    """Deterministic joint action from local observations only: argmax
    codeword (lowest index on ties) and Gaussian means."""
    probs, _ = forward(bundle.sched_net, bundle.norm_o1.normalize(o1))
    codeword = int(np.argmax(probs))
    g_reals, _ = forward(bundle.prec_net, bundle.norm_o2.normalize(o2))
    theta = np.stack([forward(bundle.ris_net, bundle.norm_ris.normalize(o))[0]
                      for o in o_ris])
    return codeword, g_reals, theta


def scheduling_probs(bundle: PolicyBundle, o1: np.ndarray) -> np.ndarray:
    probs, _ = forward(bundle.sched_net, bundle.norm_o1.normalize(o1))
    return probs


@dataclass
class EpisodeBuffer:
    """Normalized observations, actions, behavior log-probs, rewards, values."""

    o1: list = field(default_factory=list)
    o2: list = field(default_factory=list)
    o_ris: list = field(default_factory=list)       # (L, dim) per step
    a_sched: list = field(default_factory=list)
    a_prec: list = field(default_factory=list)
    a_ris: list = field(default_factory=list)       # (L, N) per step
    logp_sched: list = field(default_factory=list)
    logp_prec: list = field(default_factory=list)
    logp_ris: list = field(default_factory=list)    # (L,) per step
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rewards)

    def clear(self) -> None:
        for v in self.__dict__.values():
            v.clear()


@dataclass
class TrainingLog:
    episode: list = field(default_factory=list)
    mean_reward: list = field(default_factory=list)
    sum_rate_eval: list = field(default_factory=list)
    jfi_eval: list = field(default_factory=list)
    actor_loss_sched: list = field(default_factory=list)
    actor_loss_prec: list = field(default_factory=list)
    actor_loss_ris: list = field(default_factory=list)
    critic_loss: list = field(default_factory=list)

    COLUMNS = ("episode", "mean_reward", "sum_rate_eval", "jfi_eval",
               "actor_loss_sched", "actor_loss_prec", "actor_loss_ris",
               "critic_loss")

    def to_csv(self, path: str) -> None:
        with open(path, "w") as f:
            f.write(",".join(self.COLUMNS) + "\n")
            for i in range(len(self.episode)):
                row = [self.episode[i], self.mean_reward[i],
                       self.sum_rate_eval[i], self.jfi_eval[i],
                       self.actor_loss_sched[i], self.actor_loss_prec[i],
                       self.actor_loss_ris[i], self.critic_loss[i]]
                f.write(",".join(f"{v:.10g}" if isinstance(v, float) else str(v)
                                 for v in row) + "\n")


def _clip_mask(ratio: np.ndarray, adv: np.ndarray, clip: float) -> np.ndarray:
    """Per-sample coefficient d(surrogate)/d(logp): adv*ratio where the
    unclipped branch is active, zero where the clipped constant wins."""
    clipped_out = ((adv > 0) & (ratio > 1.0 + clip)) | \
                  ((adv < 0) & (ratio < 1.0 - clip))
    return np.where(clipped_out, 0.0, adv * ratio)


def _surrogate(ratio: np.ndarray, adv: np.ndarray, clip: float) -> np.ndarray:
    return np.minimum(ratio * adv, np.clip(ratio, 1.0 - clip, 1.0 + clip) * adv)


def actor_update_categorical(net: DenseNet, adam: AdamState, obs: np.ndarray,
                             actions: np.ndarray, logp_old: np.ndarray,
                             adv: np.ndarray, clip: float,
                             ent_coef: float) -> float:
    """One clipped-surrogate ascent step; returns the (negated) objective."""
    probs, cache = forward(net, obs)
    B, n_act = probs.shape
    p_a = np.maximum(probs[np.arange(B), actions], 1e-300)
    logp_new = np.log(p_a)
    ratio = np.exp(logp_new - logp_old)
    coef = _clip_mask(ratio, adv, clip)
    logp_all = np.log(np.maximum(probs, 1e-300))
    ent = -np.sum(probs * logp_all, axis=1)

    dJ_dp = np.zeros_like(probs)
    dJ_dp[np.arange(B), actions] = coef / p_a
    # entropy gradient wrt probs is -(log p + 1); the softmax Jacobian inside
    # backward() turns it into -p (log p + H)
    dJ_dp += ent_coef * (-(logp_all + 1.0))
    dLoss_dp = -dJ_dp / B
    grads = backward(net, cache, dLoss_dp)
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise FloatingPointError("non-finite actor gradient")
    adam_step(adam, net.params(), grads)
    J = float(np.mean(_surrogate(ratio, adv, clip) + ent_coef * ent))
    return -J


def actor_update_gaussian(net: DenseNet, log_std: np.ndarray, adam: AdamState,
                          obs: np.ndarray, actions: np.ndarray,
                          logp_old: np.ndarray, adv: np.ndarray, clip: float,
                          ent_coef: float) -> float:
    """Clipped-surrogate step for a Gaussian head with shared log-std."""
    mean, cache = forward(net, obs)
    B, d = mean.shape
    std = np.exp(log_std)
    z = (actions - mean) / std
    logp_new = (-0.5 * np.sum(z ** 2, axis=1) - np.sum(log_std)
                - 0.5 * d * np.log(2.0 * np.pi))
    ratio = np.exp(logp_new - logp_old)
    coef = _clip_mask(ratio, adv, clip)

    dJ_dmean = coef[:, None] * z / std          # d logp / d mean = z / std
    dJ_dlogstd = np.sum(coef[:, None] * (z ** 2 - 1.0), axis=0) \
        + ent_coef * B  # entropy gradient wrt log-std is 1 per dim
    grads = backward(net, cache, -dJ_dmean / B)
    grads.append(-dJ_dlogstd / B)
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise FloatingPointError("non-finite actor gradient")
    adam_step(adam, net.params() + [log_std], grads)
    np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX, out=log_std)
    ent = float(np.sum(log_std) + 0.5 * d * (1.0 + np.log(2.0 * np.pi)))
    J = float(np.mean(_surrogate(ratio, adv, clip)) + ent_coef * ent)
    return -J


def critic_update(net: DenseNet, adam: AdamState, obs: np.ndarray,
                  targets: np.ndarray) -> float:
    """One gradient-descent step on the mean squared target error."""
    v, cache = forward(net, obs)
    v = v[:, 0]
    err = v - targets
    loss = float(np.mean(err ** 2))
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite critic loss")
    dv = (2.0 * err / len(err))[:, None]
    grads = backward(net, cache, dv)
    adam_step(adam, net.params(), grads)
    return loss


def _serialize_bundle(bundle: PolicyBundle) -> bytes:
    buf = io.BytesIO()
    write_net(buf, bundle.sched_net)
    write_net(buf, bundle.prec_net, bundle.prec_log_std)
    write_net(buf, bundle.ris_net, bundle.ris_log_std)
    write_net(buf, bundle.critic_net)
    buf.write(struct.pack("<5I", bundle.K, bundle.U, bundle.M, bundle.N, bundle.L))
    for norm in (bundle.norm_o1, bundle.norm_o2, bundle.norm_ris):
        buf.write(struct.pack("<I", len(norm.mean)))
        buf.write(struct.pack("<d", norm.count))
        buf.write(np.ascontiguousarray(norm.mean, dtype="<f8").tobytes())
        buf.write(np.ascontiguousarray(norm.var, dtype="<f8").tobytes())
    buf.write(np.asarray(bundle.last_alpha, dtype=np.uint8).tobytes())
    for arr in (bundle.last_G_raw, bundle.last_Phi):
        buf.write(np.ascontiguousarray(arr.real, dtype="<f8").tobytes())
        buf.write(np.ascontiguousarray(arr.imag, dtype="<f8").tobytes())
    return buf.getvalue()


def save_bundle(bundle: PolicyBundle, path: str) -> None:
    with open(path, "wb") as f:
        f.write(_serialize_bundle(bundle))


def load_bundle(path_or_bytes) -> PolicyBundle:
    if isinstance(path_or_bytes, (bytes, bytearray)):
        f = io.BytesIO(path_or_bytes)
    else:
        f = open(path_or_bytes, "rb")
    try:
        sched, _ = read_net(f, "softmax")
        prec, prec_ls = read_net(f, "linear")
        ris, ris_ls = read_net(f, "linear")
        critic, _ = read_net(f, "linear")
        K, U, M, N, L = struct.unpack("<5I", f.read(20))
        norms = []
        for _ in range(3):
            (dim,) = struct.unpack("<I", f.read(4))
            (count,) = struct.unpack("<d", f.read(8))
            mean = np.frombuffer(f.read(8 * dim), dtype="<f8").copy()
            var = np.frombuffer(f.read(8 * dim), dtype="<f8").copy()
            norms.append(RunningNorm(mean=mean, var=var, count=count))
        alpha = np.frombuffer(f.read(K), dtype=np.uint8).astype(int)
        G_re = np.frombuffer(f.read(8 * M * U), dtype="<f8").reshape(M, U)
        G_im = np.frombuffer(f.read(8 * M * U), dtype="<f8").reshape(M, U)
        P_re = np.frombuffer(f.read(8 * L * N), dtype="<f8").reshape(L, N)
        P_im = np.frombuffer(f.read(8 * L * N), dtype="<f8").reshape(L, N)
    finally:
        f.close()
    return PolicyBundle(
        K=K, U=U, M=M, N=N, L=L, codebook=enumerate_schedules(K, U),
        sched_net=sched, prec_net=prec, prec_log_std=prec_ls,
        ris_net=ris, ris_log_std=ris_ls, critic_net=critic,
        norm_o1=norms[0], norm_o2=norms[1], norm_ris=norms[2],
        last_alpha=alpha, last_G_raw=G_re + 1j * G_im, last_Phi=P_re + 1j * P_im,
    )


def train(stats_source, system: SystemConfig, config: MappoConfig, seed: int,
          ao_opts: AoOptions | None = None
          ) -> tuple[PolicyBundle, TrainingLog]:
    """Run the full training loop; returns the bundle and per-episode log.

    `stats_source` is either a fixed ChannelStats or a callable
    (episode, rng) -> ChannelStats for re-dropped users.
    """
    config.validate()
    rng = np.random.default_rng(seed)
    net_rng, env_rng, shuffle_rng = rng.spawn(3)
    bundle = build_policies(system, net_rng)
    sigma2, P_max, nu = system.sigma2, system.P_max, config.nu
    ao_opts = ao_opts or AoOptions()
    init_opts = AoOptions(max_iters=1, restarts=1, mo_tol=ao_opts.mo_tol,
                          mo_max_iters=ao_opts.mo_max_iters)

    adam = {name: AdamState.for_params(params, lr=config.lr)
            for name, params in bundle.flat_params().items()}
    log = TrainingLog()
    buf = EpisodeBuffer()
    last_good = _serialize_bundle(bundle)

    for ep in range(config.episodes):
        stats = stats_source(ep, env_rng) if callable(stats_source) else stats_source

        # warm start: one alternating-solver iteration on a random schedule
        schedule = tuple(sorted(env_rng.choice(system.K, size=system.U,
                                               replace=False).tolist()))
        alpha0 = alpha_from_schedule(schedule, system.K)
        init_state, _ = ao_solve(stats, alpha0, sigma2, P_max, init_opts,
                                 rng=env_rng)
        alpha_prev, G_prev, Phi_prev = alpha0, init_state.G, init_state.Phi

        buf.clear()
        for _ in range(config.steps):
            o1, o2, o_ris = build_observations(stats, alpha_prev, G_prev, Phi_prev)
            bundle.norm_o1.update(o1)
            bundle.norm_o2.update(o2)
            bundle.norm_ris.update(np.stack(o_ris))
            n1 = bundle.norm_o1.normalize(o1)
            n2 = bundle.norm_o2.normalize(o2)
            nr = np.stack([bundle.norm_ris.normalize(o) for o in o_ris])

            probs, _ = forward(bundle.sched_net, n1)
            a_s, lp_s, _ = categorical_logprob_sample(probs, env_rng)
            mean_p, _ = forward(bundle.prec_net, n2)
            a_p, lp_p, _ = gaussian_logprob_sample(mean_p, bundle.prec_log_std,
                                                   env_rng)
            a_r = np.empty((system.L, system.N))
            lp_r = np.empty(system.L)
            for l in range(system.L):
                mean_r, _ = forward(bundle.ris_net, nr[l])
                a_r[l], lp_r[l], _ = gaussian_logprob_sample(
                    mean_r, bundle.ris_log_std, env_rng)

            state, G_raw, _ = decode_actions(a_s, a_p, a_r, system.K, system.U,
                                             system.M, P_max, bundle.codebook)
            r, _ = shared_reward(stats, state, sigma2, nu)
            v, _ = forward(bundle.critic_net, np.concatenate([n1, n2]))

            buf.o1.append(n1)
            buf.o2.append(n2)
            buf.o_ris.append(nr)
            buf.a_sched.append(a_s)
            buf.a_prec.append(a_p)
            buf.a_ris.append(a_r)
            buf.logp_sched.append(lp_s)
            buf.logp_prec.append(lp_p)
            buf.logp_ris.append(lp_r)
            buf.rewards.append(r)
            buf.values.append(float(v[0]))

            alpha_prev, G_prev, Phi_prev = state.alpha, G_raw, state.Phi

        # bootstrap value for the non-terminal continuing task
        o1, o2, _ = build_observations(stats, alpha_prev, G_prev, Phi_prev)
        n1 = bundle.norm_o1.normalize(o1)
        n2 = bundle.norm_o2.normalize(o2)
        v_T, _ = forward(bundle.critic_net, np.concatenate([n1, n2]))
        values = np.array(buf.values + [float(v_T[0])])
        rewards = np.array(buf.rewards)

        mean_reward = float(rewards.mean())
        if not np.isfinite(mean_reward):
            raise TrainingDiverged(
                f"mean reward became non-finite in episode {ep}", last_good)

        adv = compute_gae(rewards, values, config.discount, config.gae)
        adv_norm = (adv - adv.mean()) / (adv.std() + 1e-8)
        targets = adv + values[:-1]

        O1 = np.stack(buf.o1)
        O2 = np.stack(buf.o2)
        ORIS = np.stack(buf.o_ris)              # (T, L, dim)
        AS = np.array(buf.a_sched)
        AP = np.stack(buf.a_prec)
        AR = np.stack(buf.a_ris)                # (T, L, N)
        LS = np.array(buf.logp_sched)
        LP = np.array(buf.logp_prec)
        LR = np.stack(buf.logp_ris)             # (T, L)
        CRIT_IN = np.concatenate([O1, O2], axis=1)

        losses = {"sched": [], "prec": [], "ris": [], "critic": []}
        T = config.steps
        for _ in range(config.reuse):
            perm = shuffle_rng.permutation(T)
            for start in range(0, T, config.batch):
                mb = perm[start:start + config.batch]
                losses["sched"].append(actor_update_categorical(
                    bundle.sched_net, adam["sched"], O1[mb], AS[mb], LS[mb],
                    adv_norm[mb], config.clip, config.entropy))
                losses["prec"].append(actor_update_gaussian(
                    bundle.prec_net, bundle.prec_log_std, adam["prec"],
                    O2[mb], AP[mb], LP[mb], adv_norm[mb], config.clip,
                    config.entropy))
                L = system.L
                ris_obs = ORIS[mb].reshape(-1, ORIS.shape[2])
                ris_act = AR[mb].reshape(-1, system.N)
                ris_lp = LR[mb].reshape(-1)
                ris_adv = np.repeat(adv_norm[mb], L)
                losses["ris"].append(actor_update_gaussian(
                    bundle.ris_net, bundle.ris_log_std, adam["ris"],
                    ris_obs, ris_act, ris_lp, ris_adv, config.clip,
                    config.entropy))
                losses["critic"].append(critic_update(
                    bundle.critic_net, adam["critic"], CRIT_IN[mb],
                    targets[mb]))

        bundle.last_alpha = alpha_prev
        bundle.last_G_raw = G_prev
        bundle.last_Phi = Phi_prev

        sr_eval, jfi_eval = evaluate_policy(bundle, stats, sigma2, P_max)
        log.episode.append(ep)
        log.mean_reward.append(mean_reward)
        log.sum_rate_eval.append(sr_eval)
        log.jfi_eval.append(jfi_eval)
        log.actor_loss_sched.append(float(np.mean(losses["sched"])))
        log.actor_loss_prec.append(float(np.mean(losses["prec"])))
        log.actor_loss_ris.append(float(np.mean(losses["ris"])))
        log.critic_loss.append(float(np.mean(losses["critic"])))
        last_good = _serialize_bundle(bundle)

    buf.clear()
    return bundle, log


def greedy_state(bundle: PolicyBundle, stats: ChannelStats, P_max: float,
                 alpha_prev: np.ndarray | None = None,
                 G_prev: np.ndarray | None = None,
                 Phi_prev: np.ndarray | None = None,
                 real_mask: np.ndarray | None = None) -> PrecodingState:
    """Decode the deterministic action taken from the stored (or given)
    previous action, without updating normalizers. A real-user mask
    restricts the scheduling argmax to codewords of real users."""
    alpha_prev = bundle.last_alpha if alpha_prev is None else alpha_prev
    G_prev = bundle.last_G_raw if G_prev is None else G_prev
    Phi_prev = bundle.last_Phi if Phi_prev is None else Phi_prev
    o1, o2, o_ris = build_observations(stats, alpha_prev, G_prev, Phi_prev)
    cw, g_reals, theta = execute_step(bundle, o1, o2, o_ris)
    if real_mask is not None and not np.all(real_mask):
        from .runtime import mask_virtual_actions
        cw = mask_virtual_actions(scheduling_probs(bundle, o1), real_mask,
                                  bundle.codebook)
    state, _, _ = decode_actions(cw, g_reals, theta, bundle.K, bundle.U,
                                 bundle.M, P_max, bundle.codebook)
    return state


def evaluate_policy(bundle: PolicyBundle, stats: ChannelStats, sigma2: float,
                    P_max: float) -> tuple[float, float]:
    """Closed-form sum rate and fairness of the greedy policy."""
    state = greedy_state(bundle, stats, P_max)
    rates = approx_rates(stats, state, sigma2)
    import warnings as _w
    with _w.catch_warnings():
        _w.simplefilter("ignore", RuntimeWarning)
        return float(rates.sum()), jfi(rates)
