"""Centralized benchmark solver: exhaustive scheduling search around
alternating fractional-programming updates for the BS precoder and
Riemannian optimization for the RIS phases.

One outer iteration runs: SINR-style auxiliaries -> closed-form scalar/vector
auxiliaries -> precoder update with a bisected power multiplier -> second
auxiliary family -> unit-modulus quadratic program solved by RCG. Every
sub-step maximizes a surrogate that is tight at the current point, so the
closed-form sum-rate objective never decreases; a runtime check enforces
this (it would expose a wrong update formula immediately).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from .channel import ChannelStats
from .config import AoOptions
from .manifold import ManifoldProblem, rcg_unit_modulus
from .rate import PrecodingState, approx_sum_rate, equivalent_los_rows, q_matrix, random_state

_DENOM_FLOOR = 1e-30  # division safety for the all-zero precoder edge


class SolverFailure(RuntimeError):
    """A sub-step could not complete; carries diagnostics in args."""


class PartialResults(RuntimeError):
    """Scheduling search ran out of budget; .completed maps schedule -> objective."""

    def __init__(self, message: str, completed: dict):
        super().__init__(message)
        self.completed = completed


def enumerate_schedules(K: int, U: int) -> list[tuple[int, ...]]:
    """All C(K, U) user subsets as sorted tuples in lexicographic order.

    This list doubles as the discrete scheduling codebook (0-based users).
    """
    if not (1 <= U < K):
        raise ValueError(f"need 1 <= U < K, got U={U}, K={K}")
    return list(itertools.combinations(range(K), U))


def alpha_from_schedule(schedule: tuple[int, ...], K: int) -> np.ndarray:
    alpha = np.zeros(K, dtype=int)
    alpha[list(schedule)] = 1
    return alpha


def direction_weights(stats: ChannelStats) -> tuple[np.ndarray, np.ndarray]:
    """Per-user weights of the BS-direction and identity terms of Q_k.

    Returns (A, B): A[k, l] scales a_BS(theta_l) a_BS(theta_l)^H inside Q_k,
    B[k]^2 scales the identity term.
    """
    kl = stats.ric_bs_ris[None, :]
    bl = stats.beta_bs_ris[None, :]
    bu = stats.beta_ris_user
    ku = stats.ric_ris_user
    A = np.sqrt(kl * bl * bu * stats.N / ((kl + 1.0) * (ku + 1.0)))
    B = np.sqrt(np.sum(bl * bu * stats.N / (kl + 1.0), axis=1))
    return A, B


@dataclass
class AoWorkspace:
    """Auxiliary variables and the objective trace of one AO run."""

    epsilon: np.ndarray = None
    eta: np.ndarray = None
    gamma: np.ndarray = None
    mu: np.ndarray = None
    x: np.ndarray = None
    y: np.ndarray = None
    z: np.ndarray = None
    lambda_dual: float = 0.0
    objective_trace: list = field(default_factory=list)


def _q_stack(stats: ChannelStats, Phi: np.ndarray) -> np.ndarray:
    return np.stack([q_matrix(stats, Phi, k) for k in range(stats.K)])


def _gram(Q: np.ndarray, G: np.ndarray) -> np.ndarray:
    """gram[k, u] = g_u^H Q_k g_u (real)."""
    return np.real(np.einsum("mu,kmn,nu->ku", G.conj(), Q, G))


def _denominators(gram: np.ndarray, sigma2: float) -> tuple[np.ndarray, np.ndarray]:
    """(C, D): full denominators and leave-own-column-out denominators."""
    tot = gram.sum(axis=1)
    C = sigma2 + tot
    return np.maximum(C, _DENOM_FLOOR), tot


def update_epsilon(stats: ChannelStats, state: PrecodingState, sigma2: float,
                   Q: np.ndarray | None = None) -> np.ndarray:
    """SINR-style auxiliaries: own-signal over noise-plus-other-users (per user)."""
    if Q is None:
        Q = _q_stack(stats, state.Phi)
    sched = state.scheduled
    gram = _gram(Q, state.G)
    eps = np.zeros(stats.K)
    for u, k in enumerate(sched):
        own = gram[k, u]
        other = gram[k].sum() - own
        eps[k] = own / max(sigma2 + other, _DENOM_FLOOR)
    return eps


def fp_surrogate(stats: ChannelStats, state: PrecodingState, sigma2: float,
                 eps: np.ndarray, Q: np.ndarray | None = None) -> float:
    """Dual-transform objective in bits; equals the sum-rate approximation
    when evaluated at the optimal auxiliaries."""
    if Q is None:
        Q = _q_stack(stats, state.Phi)
    sched = state.scheduled
    gram = _gram(Q, state.G)
    total = 0.0
    for u, k in enumerate(sched):
        C_k = max(sigma2 + gram[k].sum(), _DENOM_FLOOR)
        total += np.log(1.0 + eps[k]) - eps[k] + (1.0 + eps[k]) * gram[k, u] / C_k
    return float(total / np.log(2.0))


def update_active_aux(stats: ChannelStats, state: PrecodingState, sigma2: float,
                      eps: np.ndarray, Q: np.ndarray | None = None
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form quadratic-transform auxiliaries for the precoder step."""
    if Q is None:
        Q = _q_stack(stats, state.Phi)
    A, B = direction_weights(stats)
    h_equ = equivalent_los_rows(stats, state.Phi)
    sched = state.scheduled
    gram = _gram(Q, state.G)
    eta = np.zeros(stats.K, dtype=complex)
    gamma = np.zeros((stats.K, stats.L), dtype=complex)
    mu = np.zeros((stats.M, stats.K), dtype=complex)
    for u, k in enumerate(sched):
        C_k = max(sigma2 + gram[k].sum(), _DENOM_FLOOR)
        s = np.sqrt(1.0 + eps[k])
        g = state.G[:, u]
        eta[k] = s * (h_equ[k] @ g) / C_k
        gamma[k] = s * A[k] * (stats.bs_steering.conj() @ g) / C_k
        mu[:, k] = s * B[k] * g / C_k
    return eta, gamma, mu


def update_precoder(stats: ChannelStats, state: PrecodingState, sigma2: float,
                    P_max: float, eps: np.ndarray, eta: np.ndarray,
                    gamma: np.ndarray, mu: np.ndarray,
                    Q: np.ndarray | None = None,
                    bisect_tol: float = 1e-10) -> tuple[np.ndarray, float]:
    """Closed-form precoder columns with the power multiplier found by bisection.

    Returns (G, lambda). The weighted matrix inside the matrix inverse is the
    per-user second-moment matrix; the direction sum runs over the RIS index.
    """
    if Q is None:
        Q = _q_stack(stats, state.Phi)
    A, B = direction_weights(stats)
    h_equ = equivalent_los_rows(stats, state.Phi)
    sched = state.scheduled
    U_cnt = len(sched)

    S = np.zeros(stats.K)
    for k in sched:
        S[k] = np.abs(eta[k]) ** 2 + np.sum(np.abs(gamma[k]) ** 2) \
            + np.sum(np.abs(mu[:, k]) ** 2)
    A_mat = np.einsum("k,kmn->mn", S, Q)

    b = np.zeros((stats.M, U_cnt), dtype=complex)
    for u, k in enumerate(sched):
        b[:, u] = np.sqrt(1.0 + eps[k]) * (
            eta[k] * h_equ[k].conj()
            + stats.bs_steering.T @ (A[k] * gamma[k])
            + B[k] * mu[:, k])

    if not np.any(np.abs(b) > 0):
        return np.zeros((stats.M, U_cnt), dtype=complex), 0.0

    d, V = np.linalg.eigh(A_mat)
    d = np.maximum(d, 0.0)
    beta = V.conj().T @ b                             # (M, U)
    b2 = np.abs(beta) ** 2

    def power(lam: float) -> float:
        denom = d[:, None] + lam
        if np.any((denom <= 1e-300) & (b2 > 0)):
            return np.inf
        denom = np.maximum(denom, 1e-300)
        return float(np.sum(b2 / denom ** 2))

    def solve(lam: float) -> np.ndarray:
        denom = np.maximum(d[:, None] + lam, 1e-300)
        return V @ (beta / denom)

    if power(0.0) <= P_max:
        return solve(0.0), 0.0

    hi = 1.0
    doublings = 0
    while power(hi) > P_max:
        hi *= 2.0
        doublings += 1
        if hi > 2.0 ** 60:
            raise SolverFailure("power multiplier bisection failed to bracket",
                                {"P_max": P_max, "power_at_cap": power(hi / 2.0),
                                 "doublings": doublings})
    lo = hi / 2.0 if doublings > 0 else 0.0
    for _ in range(300):
        interval_ok = (hi - lo) <= bisect_tol * (1.0 + hi)
        slack_ok = hi * (P_max - power(hi)) <= 0.5e-6 * P_max
        if interval_ok and slack_ok:
            break
        mid = 0.5 * (lo + hi)
        if power(mid) > P_max:
            lo = mid
        else:
            hi = mid
    else:
        raise SolverFailure("power multiplier bisection did not converge",
                            {"lo": lo, "hi": hi, "power": power(hi)})
    return solve(hi), hi


def _ris_coupling(stats: ChannelStats, G: np.ndarray, sched: np.ndarray,
                  h_equ_unused=None) -> np.ndarray:
    """a[i, k, :] = diag(conj h_k stack) (weighted H stack) g_i, both indices
    running over scheduled users (columns of G / rows of the user stack)."""
    HG = stats.bs_ris_stack @ G                       # (NL, U)
    hconj = stats.ris_user_stack[sched].conj()        # (U, NL)
    return HG.T[:, None, :] * hconj[None, :, :]       # (U_i, U_k, NL)


def update_passive_aux(stats: ChannelStats, state: PrecodingState, sigma2: float,
                       eps: np.ndarray, Q: np.ndarray | None = None
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form auxiliaries for the phase step (same denominators,
    first family expressed through the stacked phase vector)."""
    if Q is None:
        Q = _q_stack(stats, state.Phi)
    A, B = direction_weights(stats)
    sched = state.scheduled
    gram = _gram(Q, state.G)
    theta = state.phi_flat.conj()
    coup = _ris_coupling(stats, state.G, sched)
    x = np.zeros(stats.K, dtype=complex)
    y = np.zeros((stats.K, stats.L), dtype=complex)
    z = np.zeros((stats.M, stats.K), dtype=complex)
    for u, k in enumerate(sched):
        C_k = max(sigma2 + gram[k].sum(), _DENOM_FLOOR)
        s = np.sqrt(1.0 + eps[k])
        g = state.G[:, u]
        x[k] = s * (theta.conj() @ coup[u, u]) / C_k
        y[k] = s * A[k] * (stats.bs_steering.conj() @ g) / C_k
        z[:, k] = s * B[k] * g / C_k
    return x, y, z


def build_quadratic(stats: ChannelStats, state: PrecodingState, sigma2: float,
                    eps: np.ndarray, x: np.ndarray, y: np.ndarray,
                    z: np.ndarray) -> ManifoldProblem:
    """Unit-modulus quadratic program for the stacked phase vector."""
    sched = state.scheduled
    NL = stats.NL
    coup = _ris_coupling(stats, state.G, sched)
    Umat = np.zeros((NL, NL), dtype=complex)
    v = np.zeros(NL, dtype=complex)
    for uk, k in enumerate(sched):
        T_k = np.abs(x[k]) ** 2 + np.sum(np.abs(y[k]) ** 2) \
            + np.sum(np.abs(z[:, k]) ** 2)
        if T_k > 0:
            for un in range(len(sched)):
                a = coup[un, uk]
                Umat += T_k * np.outer(a, a.conj())
        v += np.sqrt(1.0 + eps[k]) * np.conj(x[k]) * coup[uk, uk]
    Umat = 0.5 * (Umat + Umat.conj().T)
    return ManifoldProblem(Umat=Umat, v=v, theta0=state.phi_flat.conj())


def _check_nondecreasing(prev: float, new: float, step: str) -> None:
    if new < prev - 1e-9 * (1.0 + abs(prev)):
        raise SolverFailure(f"objective decreased across the {step} step",
                            {"before": prev, "after": new})


def ao_solve(stats: ChannelStats, alpha: np.ndarray, sigma2: float, P_max: float,
             opts: AoOptions | None = None,
             init: tuple[np.ndarray, np.ndarray] | None = None,
             rng: np.random.Generator | None = None
             ) -> tuple[PrecodingState, AoWorkspace]:
    """Alternating updates for a fixed schedule until the relative objective
    change drops below opts.tol or opts.max_iters is reached.

    The returned workspace carries the (nondecreasing) objective trace; the
    trace records the sum-rate approximation after every full iteration.
    """
    opts = opts or AoOptions()
    alpha = np.asarray(alpha, dtype=int)
    U_cnt = int(alpha.sum())
    if U_cnt < 1:
        raise ValueError("schedule must select at least one user")

    if init is not None:
        G0, Phi0 = init
        state = PrecodingState(alpha=alpha, G=G0.copy(), Phi=Phi0.copy())
    else:
        rng = rng or np.random.default_rng(0)
        rs = random_state(stats, U_cnt, P_max, rng, alpha=alpha)
        state = PrecodingState(alpha=alpha, G=rs.G, Phi=rs.Phi)

    ws = AoWorkspace()
    Q = _q_stack(stats, state.Phi)
    ws.objective_trace.append(approx_sum_rate(stats, state, sigma2))

    for _ in range(opts.max_iters):
        eps = update_epsilon(stats, state, sigma2, Q)
        ws.epsilon = eps
        # the fixed-auxiliary surrogate is the quantity each sub-step
        # maximizes; the true objective is only guaranteed monotone across
        # full iterations (the auxiliaries go stale within one)
        surr = fp_surrogate(stats, state, sigma2, eps, Q)

        if opts.update_g:
            eta, gamma, mu = update_active_aux(stats, state, sigma2, eps, Q)
            ws.eta, ws.gamma, ws.mu = eta, gamma, mu
            G_new, lam = update_precoder(stats, state, sigma2, P_max, eps,
                                         eta, gamma, mu, Q,
                                         bisect_tol=opts.bisect_tol)
            ws.lambda_dual = lam
            state = PrecodingState(alpha=alpha, G=G_new, Phi=state.Phi)
            new_surr = fp_surrogate(stats, state, sigma2, eps, Q)
            _check_nondecreasing(surr, new_surr, "precoder")
            surr = new_surr

        if opts.update_phi:
            x, y, z = update_passive_aux(stats, state, sigma2, eps, Q)
            ws.x, ws.y, ws.z = x, y, z
            problem = build_quadratic(stats, state, sigma2, eps, x, y, z)
            res = rcg_unit_modulus(problem, tol=opts.mo_tol,
                                   max_iters=opts.mo_max_iters)
            Phi_new = res.theta.conj().reshape(stats.L, stats.N)
            Phi_new = Phi_new / np.abs(Phi_new)
            state = PrecodingState(alpha=alpha, G=state.G, Phi=Phi_new)
            Q = _q_stack(stats, state.Phi)
            new_surr = fp_surrogate(stats, state, sigma2, eps, Q)
            _check_nondecreasing(surr, new_surr, "phase")

        prev = ws.objective_trace[-1]
        obj = approx_sum_rate(stats, state, sigma2)
        _check_nondecreasing(prev, obj, "full-iteration")
        ws.objective_trace.append(obj)
        if abs(obj - prev) < opts.tol * max(abs(prev), 1e-12):
            break

    return state, ws


def bfs_ao_solve(stats: ChannelStats, U: int, sigma2: float, P_max: float,
                 opts: AoOptions | None = None,
                 rng: np.random.Generator | None = None,
                 budget_s: float | None = None
                 ) -> tuple[PrecodingState, dict]:
    """Exhaustive search over schedules; each schedule solved by ao_solve with
    opts.restarts random initializations. Ties go to the lexicographically
    lowest schedule. Returns (best state, per-schedule objective table)."""
    opts = opts or AoOptions()
    rng = rng or np.random.default_rng(0)
    schedules = enumerate_schedules(stats.K, U)
    children = rng.spawn(len(schedules) * opts.restarts)
    started = perf_counter()

    table: dict[tuple[int, ...], float] = {}
    best_obj = -np.inf
    best_state = None
    for si, schedule in enumerate(schedules):
        if budget_s is not None and perf_counter() - started > budget_s:
            raise PartialResults(
                f"budget of {budget_s}s exceeded after {si} schedules", table)
        alpha = alpha_from_schedule(schedule, stats.K)
        sched_obj = -np.inf
        sched_state = None
        for r in range(opts.restarts):
            state, ws = ao_solve(stats, alpha, sigma2, P_max, opts,
                                 rng=children[si * opts.restarts + r])
            if ws.objective_trace[-1] > sched_obj:
                sched_obj = ws.objective_trace[-1]
                sched_state = state
        table[schedule] = sched_obj
        if sched_obj > best_obj:  # strict: ties keep the lowest schedule
            best_obj = sched_obj
            best_state = sched_state
    return best_state, table
