"""Statistical CSI construction and Rician channel sampling.

Conventions fixed repo-wide:

* RIS grid flattening is p-major: element (p, q), p in [0, Nx), q in [0, Ny),
  lands at flat index n = p * Ny + q.
* Stacked NL-vectors/matrices order the RIS blocks l = 0 .. L-1.
* Angles from 3-D geometry: for a unit direction vector u = (ux, uy, uz),
  azimuth = atan2(uy, ux) (horizontal plane, from +x) and
  elevation = asin(uz) (from the horizontal plane). The BS is a uniform
  linear array whose departure angle toward RIS l is the azimuth of the
  BS->RIS direction. Any consistent convention works; this one is the
  documented choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Geometry, SystemConfig


def path_loss(d: float, xi: float, beta0: float, d0: float) -> float:
    """Distance-power-law gain beta0 * (d / d0)^(-xi), linear scale."""
    if d <= 0 or d0 <= 0:
        raise ValueError(f"distances must be positive, got d={d}, d0={d0}")
    return beta0 * (d / d0) ** (-xi)


def steering_bs(theta: float, M: int, dB_over_lambda: float = 0.5) -> np.ndarray:
    """BS array response; entry m = exp(j 2 pi dB/lambda m sin(theta))."""
    if M < 1:
        raise ValueError("M must be >= 1")
    m = np.arange(M)
    return np.exp(1j * 2.0 * np.pi * dB_over_lambda * m * np.sin(theta))


def steering_ris(phi: float, theta: float, Nx: int, Ny: int,
                 dR_over_lambda: float = 0.5) -> np.ndarray:
    """RIS array response on the p-major flattened (p, q) grid.

    Entry (p, q) = exp(j 2 pi dR/lambda (p sin(phi) sin(theta) + q cos(theta))).
    """
    if Nx < 1 or Ny < 1:
        raise ValueError("Nx and Ny must be >= 1")
    p = np.arange(Nx)[:, None]
    q = np.arange(Ny)[None, :]
    phase = 2.0 * np.pi * dR_over_lambda * (p * np.sin(phi) * np.sin(theta)
                                            + q * np.cos(theta))
    return np.exp(1j * phase).reshape(-1)


def _angles_from(src: np.ndarray, dst: np.ndarray) -> tuple[float, float]:
    """(elevation, azimuth) of the unit direction src -> dst."""
    d = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    r = np.linalg.norm(d)
    if r <= 0:
        raise ValueError("coincident positions give an undefined direction")
    u = d / r
    return float(np.arcsin(np.clip(u[2], -1.0, 1.0))), float(np.arctan2(u[1], u[0]))


@dataclass
class ChannelStats:
    """Per-link statistical CSI plus the stacked weighted forms.

    `los_bs_ris[l]` and `los_ris_user[k, l]` are the unit-modulus LoS
    factors. `bs_ris_stack` (NL x M) and `ris_user_stack[k]` (NL,) carry the
    sqrt(beta * kappa / (kappa + 1)) weights of the stacked definitions and
    are what the closed-form rate machinery consumes.
    """

    M: int
    N: int
    L: int
    K: int
    los_bs_ris: np.ndarray        # (L, N, M) complex, unit modulus
    los_ris_user: np.ndarray      # (K, L, N) complex, unit modulus
    beta_bs_ris: np.ndarray       # (L,)
    beta_ris_user: np.ndarray     # (K, L)
    ric_bs_ris: np.ndarray        # (L,) linear Rician factors
    ric_ris_user: np.ndarray      # (K, L)
    theta_bs_dep: np.ndarray      # (L,) BS departure angles
    bs_steering: np.ndarray       # (L, M) a_BS(theta_l^D)
    bs_ris_stack: np.ndarray      # (NL, M) weighted LoS stack
    ris_user_stack: np.ndarray    # (K, NL) weighted LoS stacks (one row per user)

    @property
    def NL(self) -> int:
        return self.N * self.L

    def user_subset(self, idx: np.ndarray) -> "ChannelStats":
        """Stats restricted to the given user rows (used by pre-screening)."""
        idx = np.asarray(idx, dtype=int)
        return ChannelStats(
            M=self.M, N=self.N, L=self.L, K=len(idx),
            los_bs_ris=self.los_bs_ris,
            los_ris_user=self.los_ris_user[idx],
            beta_bs_ris=self.beta_bs_ris,
            beta_ris_user=self.beta_ris_user[idx],
            ric_bs_ris=self.ric_bs_ris,
            ric_ris_user=self.ric_ris_user[idx],
            theta_bs_dep=self.theta_bs_dep,
            bs_steering=self.bs_steering,
            bs_ris_stack=self.bs_ris_stack,
            ris_user_stack=self.ris_user_stack[idx],
        )


@dataclass
class ChannelSample:
    """One instantaneous Rician realization of every link."""

    h_bs_ris: np.ndarray    # (L, N, M)
    h_ris_user: np.ndarray  # (K, L, N)


def build_stats(cfg: SystemConfig, geom: Geometry) -> ChannelStats:
    """Statistical CSI from geometry: LoS factors, path gains, stacked forms."""
    cfg.validate()
    geom.validate()
    N, M, L, K = cfg.N, cfg.M, cfg.L, cfg.K

    los_bs_ris = np.empty((L, N, M), dtype=complex)
    beta_bs_ris = np.empty(L)
    theta_dep = np.empty(L)
    bs_steer = np.empty((L, M), dtype=complex)
    for l in range(L):
        d = np.linalg.norm(geom.ris_pos[l] - geom.bs_pos)
        beta_bs_ris[l] = path_loss(d, cfg.xi_bs_ris, cfg.beta0, cfg.d0)
        elev_a, azim_a = _angles_from(geom.ris_pos[l], geom.bs_pos)
        _, theta_d = _angles_from(geom.bs_pos, geom.ris_pos[l])
        theta_dep[l] = theta_d
        a_ris = steering_ris(elev_a, azim_a, cfg.Nx, cfg.Ny, cfg.dR_over_lambda)
        a_bs = steering_bs(theta_d, M, cfg.dB_over_lambda)
        bs_steer[l] = a_bs
        los_bs_ris[l] = np.outer(a_ris, a_bs.conj())

    los_ris_user = np.empty((K, L, N), dtype=complex)
    beta_ris_user = np.empty((K, L))
    for k in range(K):
        for l in range(L):
            d = np.linalg.norm(geom.user_pos[k] - geom.ris_pos[l])
            beta_ris_user[k, l] = path_loss(d, cfg.xi_ris_user, cfg.beta0, cfg.d0)
            elev_d, azim_d = _angles_from(geom.ris_pos[l], geom.user_pos[k])
            los_ris_user[k, l] = steering_ris(elev_d, azim_d, cfg.Nx, cfg.Ny,
                                              cfg.dR_over_lambda)

    ric_l = np.asarray(geom.rician_bs_ris, dtype=float)
    ric_kl = np.asarray(geom.rician_ris_user, dtype=float)

    w_bs = np.sqrt(beta_bs_ris * ric_l / (ric_l + 1.0))          # (L,)
    bs_stack = (w_bs[:, None, None] * los_bs_ris).reshape(L * N, M)
    w_ru = np.sqrt(beta_ris_user * ric_kl / (ric_kl + 1.0))      # (K, L)
    ris_user_stack = (w_ru[:, :, None] * los_ris_user).reshape(K, L * N)

    return ChannelStats(
        M=M, N=N, L=L, K=K,
        los_bs_ris=los_bs_ris, los_ris_user=los_ris_user,
        beta_bs_ris=beta_bs_ris, beta_ris_user=beta_ris_user,
        ric_bs_ris=ric_l, ric_ris_user=ric_kl,
        theta_bs_dep=theta_dep, bs_steering=bs_steer,
        bs_ris_stack=bs_stack, ris_user_stack=ris_user_stack,
    )


def _crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    """i.i.d. circular complex standard normal entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channels(stats: ChannelStats, rng: np.random.Generator) -> ChannelSample:
    """Draw one Rician realization of all BS-RIS and RIS-user links."""
    batch = sample_channels_batch(stats, 1, rng)
    return ChannelSample(h_bs_ris=batch.h_bs_ris[0], h_ris_user=batch.h_ris_user[0])


def sample_channels_batch(stats: ChannelStats, n: int,
                          rng: np.random.Generator) -> ChannelSample:
    """Vectorized sampler: leading axis of both arrays is the draw index."""
    kl = stats.ric_bs_ris[:, None, None]
    h_bs = np.sqrt(stats.beta_bs_ris)[:, None, None] * (
        np.sqrt(kl / (kl + 1.0)) * stats.los_bs_ris[None, :, :, :]
        + np.sqrt(1.0 / (kl + 1.0)) * _crandn(rng, n, stats.L, stats.N, stats.M))
    ku = stats.ric_ris_user[:, :, None]
    h_ru = np.sqrt(stats.beta_ris_user)[:, :, None] * (
        np.sqrt(ku / (ku + 1.0)) * stats.los_ris_user[None, :, :, :]
        + np.sqrt(1.0 / (ku + 1.0)) * _crandn(rng, n, stats.K, stats.L, stats.N))
    return ChannelSample(h_bs_ris=h_bs, h_ris_user=h_ru)


def drop_users(center: np.ndarray, radius: float, K: int,
               rng: np.random.Generator) -> np.ndarray:
    """K i.i.d. uniform points in the horizontal disc around `center`, z = 0."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    r = radius * np.sqrt(rng.uniform(size=K))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=K)
    pts = np.zeros((K, 3))
    pts[:, 0] = center[0] + r * np.cos(ang)
    pts[:, 1] = center[1] + r * np.sin(ang)
    return pts
