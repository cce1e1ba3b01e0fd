import numpy as np
import pytest

from rismaestro import (AoOptions, PrecodingState, alpha_from_schedule,
                        ao_solve, approx_sum_rate, bfs_ao_solve,
                        enumerate_schedules, fp_surrogate, q_matrix,
                        random_state, update_epsilon)
from rismaestro.ao import (PartialResults, build_quadratic, direction_weights,
                           update_active_aux, update_passive_aux,
                           update_precoder)
from rismaestro.rate import equivalent_los_rows


def test_enumerate_schedules_4_choose_2():
    assert enumerate_schedules(4, 2) == [(0, 1), (0, 2), (0, 3),
                                         (1, 2), (1, 3), (2, 3)]


def test_enumerate_schedules_2_choose_1():
    assert enumerate_schedules(2, 1) == [(0,), (1,)]


def test_enumerate_schedules_8_choose_2_count():
    # matches the full-scale scheduling head output width
    assert len(enumerate_schedules(8, 2)) == 28


def test_enumerate_schedules_rejects_bad_u():
    with pytest.raises(ValueError):
        enumerate_schedules(4, 4)
    with pytest.raises(ValueError):
        enumerate_schedules(4, 0)


# --- independent surrogate evaluators (oracles) -----------------------------

def _active_surrogate(stats, state, sigma2, eps, eta, gamma, mu):
    A, B = direction_weights(stats)
    h_equ = equivalent_los_rows(stats, state.Phi)
    Q = [q_matrix(stats, state.Phi, k) for k in range(stats.K)]
    total = 0.0
    for u, k in enumerate(state.scheduled):
        C_k = sigma2 + sum(
            np.real(state.G[:, n].conj() @ Q[k] @ state.G[:, n])
            for n in range(len(state.scheduled)))
        s = np.sqrt(1.0 + eps[k])
        g = state.G[:, u]
        total += 2 * s * np.real(np.conj(eta[k]) * (h_equ[k] @ g)) \
            - abs(eta[k]) ** 2 * C_k
        for i in range(stats.L):
            total += 2 * s * A[k, i] * np.real(
                np.conj(gamma[k, i]) * (stats.bs_steering[i].conj() @ g)) \
                - abs(gamma[k, i]) ** 2 * C_k
        total += 2 * s * B[k] * np.real(mu[:, k].conj() @ g) \
            - np.sum(np.abs(mu[:, k]) ** 2) * C_k
    return total


def _ris_vec(stats, k, g):
    return stats.ris_user_stack[k].conj() * (stats.bs_ris_stack @ g)


def _phase_surrogate(stats, state, sigma2, eps, x, y, z, theta):
    """Phase-side surrogate at an arbitrary stacked phase vector theta."""
    A, B = direction_weights(stats)
    Phi = theta.conj().reshape(stats.L, stats.N)
    Q = [q_matrix(stats, Phi, k) for k in range(stats.K)]
    total = 0.0
    for u, k in enumerate(state.scheduled):
        C_k = sigma2 + sum(
            np.real(state.G[:, n].conj() @ Q[k] @ state.G[:, n])
            for n in range(len(state.scheduled)))
        s = np.sqrt(1.0 + eps[k])
        g = state.G[:, u]
        a_kk = _ris_vec(stats, k, g)
        total += 2 * s * np.real(np.conj(x[k]) * (theta.conj() @ a_kk)) \
            - abs(x[k]) ** 2 * C_k
        for i in range(stats.L):
            total += 2 * s * A[k, i] * np.real(
                np.conj(y[k, i]) * (stats.bs_steering[i].conj() @ g)) \
                - abs(y[k, i]) ** 2 * C_k
        total += 2 * s * B[k] * np.real(z[:, k].conj() @ g) \
            - np.sum(np.abs(z[:, k]) ** 2) * C_k
    return total


def test_epsilon_trivial_cases(desk, desk_stats, rng):
    state = random_state(desk_stats, desk.system.U, desk.system.P_max, rng)
    eps = update_epsilon(desk_stats, state, desk.system.sigma2)
    assert np.all(eps >= 0.0)
    assert np.all(eps[state.alpha == 0] == 0.0)


def test_epsilon_single_user_is_sinr(desk, desk_stats, rng):
    alpha = np.array([0, 1, 0, 0])
    state = random_state(desk_stats, 1, desk.system.P_max, rng, alpha=alpha)
    eps = update_epsilon(desk_stats, state, desk.system.sigma2)
    Q = q_matrix(desk_stats, state.Phi, 1)
    expected = np.real(state.G[:, 0].conj() @ Q @ state.G[:, 0]) / desk.system.sigma2
    assert eps[1] == pytest.approx(expected, rel=1e-12)


def test_active_aux_zero_precoder(desk, desk_stats, rng):
    state = random_state(desk_stats, desk.system.U, desk.system.P_max, rng)
    state = PrecodingState(alpha=state.alpha, G=np.zeros_like(state.G),
                           Phi=state.Phi)
    eps = update_epsilon(desk_stats, state, desk.system.sigma2)
    eta, gamma, mu = update_active_aux(desk_stats, state, desk.system.sigma2, eps)
    assert np.all(eta == 0) and np.all(gamma == 0) and np.all(mu == 0)


def test_active_aux_stationarity_fd(desk, desk_stats, rng):
    sigma2 = desk.system.sigma2
    state = random_state(desk_stats, desk.system.U, desk.system.P_max, rng)
    eps = update_epsilon(desk_stats, state, sigma2)
    eta, gamma, mu = update_active_aux(desk_stats, state, sigma2, eps)
    f0_args = (desk_stats, state, sigma2, eps)
    h = 1e-6

    def fd(setter):
        plus = [eta.copy(), gamma.copy(), mu.copy()]
        minus = [eta.copy(), gamma.copy(), mu.copy()]
        setter(plus, +h)
        setter(minus, -h)
        return (_active_surrogate(*f0_args, *plus) - _active_surrogate(*f0_args, *minus)) / (2 * h)

    k = int(state.scheduled[0])
    for delta in (1.0, 1j):
        assert abs(fd(lambda a, s, d=delta, k=k: a[0].__setitem__(
            k, a[0][k] + s * d))) < 1e-6
        assert abs(fd(lambda a, s, d=delta, k=k: a[1].__setitem__(
            (k, 1), a[1][k, 1] + s * d))) < 1e-6
        assert abs(fd(lambda a, s, d=delta, k=k: a[2].__setitem__(
            (2, k), a[2][2, k] + s * d))) < 1e-6


def test_passive_aux_theta_identity(desk, desk_stats, rng):
    # theta^H a_kk must equal the equivalent-channel product exactly
    state = random_state(desk_stats, desk.system.U, desk.system.P_max, rng)
    h_equ = equivalent_los_rows(desk_stats, state.Phi)
    theta = state.phi_flat.conj()
    for u, k in enumerate(state.scheduled):
        a_kk = _ris_vec(desk_stats, k, state.G[:, u])
        lhs = theta.conj() @ a_kk
        rhs = h_equ[k] @ state.G[:, u]
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(rhs))


def test_passive_aux_stationarity_fd(desk, desk_stats, rng):
    sigma2 = desk.system.sigma2
    state = random_state(desk_stats, desk.system.U, desk.system.P_max, rng)
    eps = update_epsilon(desk_stats, state, sigma2)
    x, y, z = update_passive_aux(desk_stats, state, sigma2, eps)
    theta = state.phi_flat.conj()
    h = 1e-6
    k = int(state.scheduled[0])

    def val(xx, yy, zz):
        return _phase_surrogate(desk_stats, state, sigma2, eps, xx, yy, zz, theta)

    for delta in (1.0, 1j):
        xp, xm = x.copy(), x.copy()
        xp[k] += h * delta
        xm[k] -= h * delta
        assert abs(val(xp, y, z) - val(xm, y, z)) / (2 * h) < 1e-6
        yp, ym = y.copy(), y.copy()
        yp[k, 0] += h * delta
        ym[k, 0] -= h * delta
        assert abs(val(x, yp, z) - val(x, ym, z)) / (2 * h) < 1e-6
        zp, zm = z.copy(), z.copy()
        zp[1, k] += h * delta
        zm[1, k] -= h * delta
        assert abs(val(x, y, zp) - val(x, y, zm)) / (2 * h) < 1e-6


def test_passive_aux_zero_for_unscheduled(desk, desk_stats, rng):
    state = random_state(desk_stats, desk.system.U, desk.system.P_max, rng)
    eps = update_epsilon(desk_stats, state, desk.system.sigma2)
    x, y, z = update_passive_aux(desk_stats, state, desk.system.sigma2, eps)
    off = state.alpha == 0
    assert np.all(x[off] == 0) and np.all(y[off] == 0)
    assert np.all(z[:, off] == 0)


def test_precoder_power_and_slackness(desk, desk_stats, rng):
    sigma2, P_max = desk.system.sigma2, desk.system.P_max
    for trial in range(10):
        state = random_state(desk_stats, desk.system.U, P_max,
                             np.random.default_rng(trial))
        eps = update_epsilon(desk_stats, state, sigma2)
        eta, gamma, mu = update_active_aux(desk_stats, state, sigma2, eps)
        G, lam = update_precoder(desk_stats, state, sigma2, P_max, eps,
                                 eta, gamma, mu)
        power = float(np.sum(np.abs(G) ** 2))
        assert power <= P_max * (1 + 1e-9)
        assert lam >= 0.0
        assert lam * (P_max - power) <= 1e-6 * P_max


def test_precoder_unconstrained_lambda_zero(desk, desk_stats, rng):
    # a huge budget leaves the unconstrained maximizer feasible
    sigma2 = desk.system.sigma2
    state = random_state(desk_stats, desk.system.U, desk.system.P_max, rng)
    eps = update_epsilon(desk_stats, state, sigma2)
    eta, gamma, mu = update_active_aux(desk_stats, state, sigma2, eps)
    _, lam = update_precoder(desk_stats, state, sigma2, 1e12, eps,
                             eta, gamma, mu)
    assert lam == 0.0


def test_precoder_beats_random_search(desk, desk_stats):
    # single user, phases fixed: converged active-only solve must dominate
    # 100 random power-feasible precoders
    sigma2, P_max = desk.system.sigma2, desk.system.P_max
    alpha = np.array([1, 0, 0, 0])
    opts = AoOptions(update_phi=False, max_iters=60)
    state, ws = ao_solve(desk_stats, alpha, sigma2, P_max, opts,
                         rng=np.random.default_rng(0))
    best = ws.objective_trace[-1]
    rng = np.random.default_rng(99)
    for _ in range(100):
        G = rng.standard_normal((desk.system.M, 1)) \
            + 1j * rng.standard_normal((desk.system.M, 1))
        G *= np.sqrt(P_max * rng.uniform() ** 0.5) / np.linalg.norm(G)
        cand = PrecodingState(alpha=alpha, G=G, Phi=state.Phi)
        assert approx_sum_rate(desk_stats, cand, sigma2) <= best + 1e-9


def test_build_quadratic_zero_aux(desk, desk_stats, rng):
    state = random_state(desk_stats, desk.system.U, desk.system.P_max, rng)
    eps = np.zeros(desk_stats.K)
    x = np.zeros(desk_stats.K, dtype=complex)
    y = np.zeros((desk_stats.K, desk_stats.L), dtype=complex)
    z = np.zeros((desk_stats.M, desk_stats.K), dtype=complex)
    prob = build_quadratic(desk_stats, state, desk.system.sigma2, eps, x, y, z)
    assert np.all(prob.Umat == 0) and np.all(prob.v == 0)


def test_build_quadratic_psd_and_hermitian(desk, desk_stats, rng):
    sigma2 = desk.system.sigma2
    state = random_state(desk_stats, desk.system.U, desk.system.P_max, rng)
    eps = update_epsilon(desk_stats, state, sigma2)
    x, y, z = update_passive_aux(desk_stats, state, sigma2, eps)
    prob = build_quadratic(desk_stats, state, sigma2, eps, x, y, z)
    np.testing.assert_allclose(prob.Umat, prob.Umat.conj().T, atol=1e-18)
    w = np.linalg.eigvalsh(prob.Umat)
    assert w.min() >= -1e-9 * max(np.trace(prob.Umat).real, 1e-30)


def test_build_quadratic_objective_identity(desk, desk_stats, rng):
    # difference of the phase-side surrogate between two theta points must
    # match the (negated) quadratic-model difference
    sigma2 = desk.system.sigma2
    state = random_state(desk_stats, desk.system.U, desk.system.P_max, rng)
    eps = update_epsilon(desk_stats, state, sigma2)
    x, y, z = update_passive_aux(desk_stats, state, sigma2, eps)
    prob = build_quadratic(desk_stats, state, sigma2, eps, x, y, z)

    theta_a = state.phi_flat.conj()
    theta_b = np.exp(1j * rng.uniform(0, 2 * np.pi, desk_stats.NL))
    f_a = _phase_surrogate(desk_stats, state, sigma2, eps, x, y, z, theta_a)
    f_b = _phase_surrogate(desk_stats, state, sigma2, eps, x, y, z, theta_b)
    q_a = prob.objective(theta_a)
    q_b = prob.objective(theta_b)
    scale = max(abs(f_a - f_b), 1e-30)
    assert abs((f_a - f_b) + (q_a - q_b)) < 1e-8 * scale


def test_fp_tightness(desk, desk_stats):
    # dual-transform surrogate at the optimal auxiliaries equals the
    # closed-form objective
    sigma2 = desk.system.sigma2
    for trial in range(10):
        state = random_state(desk_stats, desk.system.U, desk.system.P_max,
                             np.random.default_rng(200 + trial))
        eps = update_epsilon(desk_stats, state, sigma2)
        lhs = fp_surrogate(desk_stats, state, sigma2, eps)
        rhs = approx_sum_rate(desk_stats, state, sigma2)
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(rhs))


def test_ao_solve_monotone_trace(desk, desk_stats):
    sigma2, P_max = desk.system.sigma2, desk.system.P_max
    for trial in range(10):
        rng = np.random.default_rng(300 + trial)
        sched = tuple(sorted(rng.choice(4, size=2, replace=False).tolist()))
        alpha = alpha_from_schedule(sched, 4)
        _, ws = ao_solve(desk_stats, alpha, sigma2, P_max, desk.ao, rng=rng)
        tr = np.array(ws.objective_trace)
        assert np.all(np.diff(tr) >= -1e-9)


def test_ao_solve_single_iteration_valid(desk, desk_stats):
    opts = AoOptions(max_iters=1)
    alpha = alpha_from_schedule((0, 1), 4)
    state, ws = ao_solve(desk_stats, alpha, desk.system.sigma2,
                         desk.system.P_max, opts, rng=np.random.default_rng(1))
    assert len(ws.objective_trace) == 2
    state.validate(desk.system.U, desk.system.P_max)


def test_ao_solve_output_feasible(desk, desk_stats):
    alpha = alpha_from_schedule((1, 3), 4)
    state, ws = ao_solve(desk_stats, alpha, desk.system.sigma2,
                         desk.system.P_max, desk.ao,
                         rng=np.random.default_rng(2))
    assert state.power() <= desk.system.P_max * (1 + 1e-9)
    assert np.max(np.abs(np.abs(state.Phi) - 1.0)) <= 1e-12


def test_bfs_argmax_contract(desk, desk_stats):
    state, table = bfs_ao_solve(desk_stats, 2, desk.system.sigma2,
                                desk.system.P_max, desk.ao,
                                rng=np.random.default_rng(5))
    best_sched = tuple(int(u) for u in state.scheduled)
    assert table[best_sched] == max(table.values())
    assert len(table) == 6


def test_bfs_three_users_single_slot(desk):
    import dataclasses
    from rismaestro import build_stats
    sys3 = dataclasses.replace(desk.system, K=3, U=1)
    geom = dataclasses.replace(
        desk.geometry, user_pos=desk.geometry.user_pos[:3],
        rician_ris_user=desk.geometry.rician_ris_user[:3])
    stats = build_stats(sys3, geom)
    _, table = bfs_ao_solve(stats, 1, sys3.sigma2, sys3.P_max, desk.ao,
                            rng=np.random.default_rng(6))
    assert len(table) == 3


def test_bfs_deterministic_rerun(desk, desk_stats):
    a_state, a_table = bfs_ao_solve(desk_stats, 2, desk.system.sigma2,
                                    desk.system.P_max, desk.ao,
                                    rng=np.random.default_rng(77))
    b_state, b_table = bfs_ao_solve(desk_stats, 2, desk.system.sigma2,
                                    desk.system.P_max, desk.ao,
                                    rng=np.random.default_rng(77))
    assert a_table == b_table
    assert tuple(a_state.scheduled) == tuple(b_state.scheduled)
    np.testing.assert_array_equal(a_state.G, b_state.G)


def test_bfs_budget_exceeded(desk, desk_stats):
    with pytest.raises(PartialResults) as err:
        bfs_ao_solve(desk_stats, 2, desk.system.sigma2, desk.system.P_max,
                     desk.ao, rng=np.random.default_rng(8), budget_s=0.0)
    assert isinstance(err.value.completed, dict)
