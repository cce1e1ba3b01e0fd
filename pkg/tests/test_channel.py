import numpy as np
import pytest

from rismaestro import (build_stats, desk_scenario, drop_users, path_loss,
                        sample_channels, sample_channels_batch, steering_bs,
                        steering_ris)
from rismaestro.config import load_scenario


def test_path_loss_reference_point():
    assert path_loss(1.0, 2.2, 1e-3, 1.0) == pytest.approx(1e-3)


def test_path_loss_identity_at_reference():
    for xi in (1.0, 2.2, 3.7):
        assert path_loss(2.5, xi, 7e-4, 2.5) == pytest.approx(7e-4)


def test_path_loss_ten_meters():
    # independent high-precision evaluation of beta0 * 10^(-2.2)
    expected = 1e-3 * 10.0 ** (-2.2)
    assert expected == pytest.approx(6.309573444801933e-06, rel=1e-12)
    assert path_loss(10.0, 2.2, 1e-3, 1.0) == pytest.approx(expected, rel=1e-12)


def test_path_loss_rejects_bad_distance():
    with pytest.raises(ValueError):
        path_loss(0.0, 2.2, 1e-3, 1.0)
    with pytest.raises(ValueError):
        path_loss(-1.0, 2.2, 1e-3, 1.0)


def test_steering_bs_broadside():
    np.testing.assert_allclose(steering_bs(0.0, 4), np.ones(4))


def test_steering_bs_endfire_half_wavelength():
    v = steering_bs(np.pi / 2, 2, 0.5)
    np.testing.assert_allclose(v, [1.0, -1.0], atol=1e-12)


def test_steering_unit_modulus(rng):
    for _ in range(20):
        theta = rng.uniform(-np.pi, np.pi)
        v = steering_bs(theta, 8, 0.5)
        np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)
        w = steering_ris(rng.uniform(-np.pi / 2, np.pi / 2),
                         rng.uniform(-np.pi, np.pi), 4, 4, 0.5)
        np.testing.assert_allclose(np.abs(w), 1.0, atol=1e-12)


def test_steering_ris_all_ones_case():
    # sin(phi)=0 kills the p term, cos(theta)=0 kills the q term
    v = steering_ris(0.0, np.pi / 2, 3, 5)
    np.testing.assert_allclose(v, np.ones(15), atol=1e-12)


def test_steering_ris_single_element():
    np.testing.assert_allclose(steering_ris(0.7, -1.1, 1, 1), [1.0])


def test_steering_ris_p_major_flattening():
    phi, theta = 0.4, 1.1
    v = steering_ris(phi, theta, 3, 2, 0.5)
    for p in range(3):
        for q in range(2):
            expected = np.exp(1j * 2 * np.pi * 0.5 *
                              (p * np.sin(phi) * np.sin(theta) + q * np.cos(theta)))
            assert v[p * 2 + q] == pytest.approx(expected)


def test_build_stats_rank_one_blocks(desk_stats):
    for l in range(desk_stats.L):
        H = desk_stats.los_bs_ris[l]
        assert np.linalg.matrix_rank(H, tol=1e-9) == 1
        # unit-modulus entries make the squared Frobenius norm N*M
        assert np.linalg.norm(H) ** 2 == pytest.approx(desk_stats.N * desk_stats.M)


def test_build_stats_gram_identity(desk_stats):
    # H_l^H H_l = N a_BS a_BS^H for the unweighted LoS blocks
    for l in range(desk_stats.L):
        H = desk_stats.los_bs_ris[l]
        a = desk_stats.bs_steering[l]
        np.testing.assert_allclose(H.conj().T @ H,
                                   desk_stats.N * np.outer(a, a.conj()),
                                   atol=1e-10)


def test_build_stats_stacked_weights(desk, desk_stats):
    s = desk_stats
    for k in range(s.K):
        for l in range(s.L):
            w = np.sqrt(s.beta_ris_user[k, l] * s.ric_ris_user[k, l]
                        / (s.ric_ris_user[k, l] + 1.0))
            blk = s.ris_user_stack[k, l * s.N:(l + 1) * s.N]
            np.testing.assert_allclose(blk, w * s.los_ris_user[k, l], atol=1e-15)
    for l in range(s.L):
        w = np.sqrt(s.beta_bs_ris[l] * s.ric_bs_ris[l] / (s.ric_bs_ris[l] + 1.0))
        np.testing.assert_allclose(s.bs_ris_stack[l * s.N:(l + 1) * s.N],
                                   w * s.los_bs_ris[l], atol=1e-15)


def test_build_stats_rejects_coincident_positions(desk):
    import dataclasses
    geom = dataclasses.replace(desk.geometry,
                               user_pos=desk.geometry.user_pos.copy())
    geom.user_pos[0] = desk.geometry.ris_pos[0]
    with pytest.raises(ValueError):
        build_stats(desk.system, geom)


def test_sampler_large_rician_limit(desk):
    import dataclasses
    geom = dataclasses.replace(
        desk.geometry,
        rician_bs_ris=np.full(desk.system.L, 1e12),
        rician_ris_user=np.full((desk.system.K, desk.system.L), 1e12))
    stats = build_stats(desk.system, geom)
    s = sample_channels(stats, np.random.default_rng(0))
    for l in range(stats.L):
        np.testing.assert_allclose(
            s.h_bs_ris[l],
            np.sqrt(stats.beta_bs_ris[l]) * stats.los_bs_ris[l], rtol=2e-6)


def test_sampler_first_moment(desk_stats):
    # sample mean over 1e5 draws matches the weighted LoS within 3 standard errors
    S = 100_000
    batch = sample_channels_batch(desk_stats, S, np.random.default_rng(42))
    l = 0
    mean = batch.h_bs_ris[:, l].mean(axis=0)
    kappa = desk_stats.ric_bs_ris[l]
    beta = desk_stats.beta_bs_ris[l]
    expected = np.sqrt(beta * kappa / (kappa + 1)) * desk_stats.los_bs_ris[l]
    # per-entry std of the complex mean estimate
    se = np.sqrt(beta / (kappa + 1) / S)
    assert np.max(np.abs(mean - expected)) < 3.0 * se * np.sqrt(2)


def test_sampler_nlos_variance(desk_stats):
    S = 100_000
    batch = sample_channels_batch(desk_stats, S, np.random.default_rng(43))
    k, l = 1, 1
    kappa = desk_stats.ric_ris_user[k, l]
    beta = desk_stats.beta_ris_user[k, l]
    mean_th = np.sqrt(beta * kappa / (kappa + 1)) * desk_stats.los_ris_user[k, l]
    dev = batch.h_ris_user[:, k, l] - mean_th
    var = np.mean(np.abs(dev) ** 2, axis=0)
    expected = beta / (kappa + 1)
    # variance estimator std ~ expected / sqrt(S)
    assert np.max(np.abs(var - expected)) < 4.0 * expected / np.sqrt(S) * 3


def test_sampler_deterministic(desk_stats):
    a = sample_channels(desk_stats, np.random.default_rng(7))
    b = sample_channels(desk_stats, np.random.default_rng(7))
    np.testing.assert_array_equal(a.h_bs_ris, b.h_bs_ris)
    np.testing.assert_array_equal(a.h_ris_user, b.h_ris_user)


def test_drop_users_inside_disc(rng):
    center = np.array([60.0, 60.0, 0.0])
    pts = drop_users(center, 6.0, 500, rng)
    d = np.linalg.norm(pts[:, :2] - center[None, :2], axis=1)
    assert np.all(d <= 6.0)
    assert np.all(pts[:, 2] == 0.0)


def test_drop_users_zero_radius(rng):
    pts = drop_users(np.array([1.0, 2.0, 0.0]), 0.0, 10, rng)
    np.testing.assert_allclose(pts[:, 0], 1.0)
    np.testing.assert_allclose(pts[:, 1], 2.0)


def test_drop_users_mean(rng):
    # disc-uniform mean is the center; std of the mean ~ r/2/sqrt(n)
    n = 100_000
    pts = drop_users(np.array([5.0, -3.0, 0.0]), 2.0, n, rng)
    se = 2.0 / 2.0 / np.sqrt(n)
    assert abs(pts[:, 0].mean() - 5.0) < 3 * se
    assert abs(pts[:, 1].mean() + 3.0) < 3 * se


def test_config_file_roundtrip(tmp_path):
    cfg = """
system: {M: 3, Nx: 2, Ny: 2, L: 2, K: 5, U: 2, Pmax_dBm: 20.0, noise_dBm: -80.0}
channel: {beta0: 2.0e-3, xi_bs_ris: 2.0, xi_ris_user: 3.0, rician_dB: 3.0}
geometry:
  bs: [0, 0, 10]
  ris: [[10, 0, 5], [0, 10, 5]]
  user_center: [12, 12, 0]
  user_radius: 2.0
ao: {tol: 1.0e-5, max_iters: 50, restarts: 2}
mo: {tol: 1.0e-7, max_iters: 300}
bisect: {tol: 1.0e-11}
mappo: {episodes: 10, steps: 32, batch: 16, nu: 0.25}
"""
    p = tmp_path / "scen.yaml"
    p.write_text(cfg)
    scen = load_scenario(str(p))
    assert scen.system.M == 3 and scen.system.K == 5 and scen.system.N == 4
    assert scen.system.P_max == pytest.approx(0.1)
    assert scen.system.sigma2 == pytest.approx(1e-11)
    assert scen.system.beta0 == pytest.approx(2e-3)
    assert scen.geometry.rician_bs_ris[0] == pytest.approx(10 ** 0.3)
    assert scen.geometry.user_pos.shape == (5, 3)
    assert scen.ao.tol == 1e-5 and scen.ao.restarts == 2
    assert scen.ao.mo_tol == 1e-7 and scen.ao.mo_max_iters == 300
    assert scen.ao.bisect_tol == 1e-11
    assert scen.mappo.episodes == 10 and scen.mappo.nu == 0.25
    assert scen.mappo.buffer == 32
