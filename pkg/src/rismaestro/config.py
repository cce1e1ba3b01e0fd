"""System dimensions, powers, geometry and solver options.

Everything downstream works in linear units (watts, linear Rician factors).
dBm and dB values appear only at the configuration boundary: YAML files and
the CLI use `Pmax_dBm`, `noise_dBm` and `rician_dB`, converted here.

Config file keys (YAML):
    system.M, system.Nx, system.Ny, system.L, system.K, system.U,
    system.Pmax_dBm, system.noise_dBm
    channel.beta0, channel.d0, channel.xi_bs_ris, channel.xi_ris_user,
    channel.rician_dB, channel.dR_over_lambda, channel.dB_over_lambda
    geometry.bs, geometry.ris, geometry.users | geometry.user_center +
    geometry.user_radius, geometry.drop_seed
    ao.tol, ao.max_iters, ao.restarts, mo.tol, mo.max_iters, bisect.tol
    mappo.episodes, mappo.steps, mappo.buffer, mappo.batch, mappo.reuse,
    mappo.discount, mappo.gae, mappo.clip, mappo.entropy, mappo.lr, mappo.nu
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import yaml


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watt_to_dbm(x_w: float) -> float:
    return 10.0 * np.log10(x_w) + 30.0


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass
class SystemConfig:
    """Dimensions, powers and channel constants of one deployment."""

    M: int = 4                  # BS antennas
    Nx: int = 4                 # RIS element rows
    Ny: int = 2                 # RIS element columns
    L: int = 2                  # number of RISs
    K: int = 4                  # nominal user count
    U: int = 2                  # scheduled users per interval
    P_max: float = dbm_to_watt(10.0)    # max BS transmit power [W]
    sigma2: float = dbm_to_watt(-90.0)  # noise power [W]
    beta0: float = 1e-3         # path gain at reference distance
    d0: float = 1.0             # reference distance [m]
    xi_bs_ris: float = 2.2      # BS-RIS path-loss exponent
    xi_ris_user: float = 2.8    # RIS-user path-loss exponent
    dR_over_lambda: float = 0.5  # RIS element spacing in wavelengths
    dB_over_lambda: float = 0.5  # BS antenna spacing in wavelengths

    @property
    def N(self) -> int:
        return self.Nx * self.Ny

    def validate(self) -> None:
        if self.M < 1 or self.Nx < 1 or self.Ny < 1 or self.L < 1:
            raise ValueError("M, Nx, Ny, L must all be >= 1")
        if not (1 <= self.U < self.K):
            raise ValueError(f"need 1 <= U < K, got U={self.U}, K={self.K}")
        if self.P_max <= 0 or self.sigma2 <= 0 or self.beta0 <= 0:
            raise ValueError("P_max, sigma2 and beta0 must be positive")


@dataclass
class Geometry:
    """3-D positions and per-link Rician factors (linear)."""

    bs_pos: np.ndarray                  # (3,)
    ris_pos: np.ndarray                 # (L, 3)
    user_pos: np.ndarray                # (K, 3)
    rician_bs_ris: np.ndarray           # (L,) linear
    rician_ris_user: np.ndarray         # (K, L) linear

    def validate(self) -> None:
        for arr in (self.bs_pos, self.ris_pos, self.user_pos):
            if not np.all(np.isfinite(arr)):
                raise ValueError("geometry positions must be finite")
        if np.any(self.rician_bs_ris < 0) or np.any(self.rician_ris_user < 0):
            raise ValueError("Rician factors must be >= 0")


@dataclass
class AoOptions:
    """Alternating-optimization solver knobs (config keys `ao.*`, `mo.*`, `bisect.*`)."""

    tol: float = 1e-4           # relative objective change stopping rule
    max_iters: int = 100
    restarts: int = 1           # random restarts per schedule
    mo_tol: float = 1e-6        # Riemannian gradient-norm tolerance
    mo_max_iters: int = 200
    bisect_tol: float = 1e-10
    update_g: bool = True       # baselines fix one block by switching these off
    update_phi: bool = True


@dataclass
class MappoConfig:
    """Training hyper-parameters (config keys `mappo.*`)."""

    episodes: int = 600
    steps: int = 1024           # steps per episode T; also the buffer size
    buffer: int = 1024
    batch: int = 128
    reuse: int = 10             # passes over the buffer per episode
    discount: float = 0.45
    gae: float = 0.45
    clip: float = 0.3
    entropy: float = 0.01
    lr: float = 3e-4
    nu: float = 0.0             # fairness weight in the shared reward

    def validate(self) -> None:
        if not (0.0 <= self.discount < 1.0 and 0.0 <= self.gae < 1.0):
            raise ValueError("discount and gae must lie in [0, 1)")
        if self.clip <= 0:
            raise ValueError("clip must be positive")
        if not (0.0 <= self.nu <= 1.0):
            raise ValueError("nu must lie in [0, 1]")
        if self.buffer != self.steps:
            raise ValueError("buffer size must equal steps per episode")


@dataclass
class Scenario:
    """A fully specified deployment: config + geometry + solver/training options."""

    system: SystemConfig
    geometry: Geometry
    ao: AoOptions = field(default_factory=AoOptions)
    mappo: MappoConfig = field(default_factory=MappoConfig)


def _rician_arrays(cfg: SystemConfig, rician_db: float) -> tuple[np.ndarray, np.ndarray]:
    kappa = db_to_linear(rician_db)
    return (np.full(cfg.L, kappa), np.full((cfg.K, cfg.L), kappa))


def desk_scenario(drop_seed: int = 0) -> Scenario:
    """Compact desk-scale deployment (M=4, N=8, L=2, K=4, U=2).

    Geometry is shrunk relative to the full-scale layout so that desk SINRs
    land in a regime where precoding and phase choices matter.
    """
    sys_cfg = SystemConfig()
    rng = np.random.default_rng(drop_seed)
    from .channel import drop_users  # local import to avoid a cycle

    users = drop_users(np.array([18.0, 18.0, 0.0]), 3.0, sys_cfg.K, rng)
    ric_l, ric_kl = _rician_arrays(sys_cfg, 6.0)
    geom = Geometry(
        bs_pos=np.array([0.0, 0.0, 10.0]),
        ris_pos=np.array([[15.0, 6.0, 5.0], [6.0, 15.0, 5.0]]),
        user_pos=users,
        rician_bs_ris=ric_l,
        rician_ris_user=ric_kl,
    )
    mappo = MappoConfig(episodes=150, steps=256, buffer=256)
    return Scenario(system=sys_cfg, geometry=geom, mappo=mappo)


def paper_scenario(drop_seed: int = 0) -> Scenario:
    """Full-scale deployment (M=8, N=64, L=2, K=8, U=2). Not CI-gated."""
    sys_cfg = SystemConfig(M=8, Nx=8, Ny=8, L=2, K=8, U=2)
    rng = np.random.default_rng(drop_seed)
    from .channel import drop_users

    users = drop_users(np.array([60.0, 60.0, 0.0]), 6.0, sys_cfg.K, rng)
    ric_l, ric_kl = _rician_arrays(sys_cfg, 6.0)
    geom = Geometry(
        bs_pos=np.array([0.0, 0.0, 30.0]),
        ris_pos=np.array([[50.0, 20.0, 10.0], [20.0, 50.0, 10.0]]),
        user_pos=users,
        rician_bs_ris=ric_l,
        rician_ris_user=ric_kl,
    )
    return Scenario(system=sys_cfg, geometry=geom)


def load_scenario(path: str, preset: str | None = None) -> Scenario:
    """Build a Scenario from a YAML file, optionally starting from a preset.

    File keys override preset values; omitted sections keep the preset/default.
    """
    with open(path) as f:
        raw = yaml.safe_load(f) or {}
    return scenario_from_dict(raw, preset=preset)


def scenario_from_dict(raw: dict, preset: str | None = None) -> Scenario:
    base = {"desk": desk_scenario, "paper": paper_scenario, None: desk_scenario}[preset]()
    sys_d = raw.get("system", {})
    ch_d = raw.get("channel", {})

    sys_kwargs = {}
    for key in ("M", "Nx", "Ny", "L", "K", "U"):
        if key in sys_d:
            sys_kwargs[key] = int(sys_d[key])
    if "Pmax_dBm" in sys_d:
        sys_kwargs["P_max"] = dbm_to_watt(float(sys_d["Pmax_dBm"]))
    if "noise_dBm" in sys_d:
        sys_kwargs["sigma2"] = dbm_to_watt(float(sys_d["noise_dBm"]))
    for key in ("beta0", "d0", "xi_bs_ris", "xi_ris_user",
                "dR_over_lambda", "dB_over_lambda"):
        if key in ch_d:
            sys_kwargs[key] = float(ch_d[key])
    sys_cfg = replace(base.system, **sys_kwargs)
    sys_cfg.validate()

    geom = _geometry_from_dict(raw.get("geometry", {}), sys_cfg, base.geometry,
                               rician_db=ch_d.get("rician_dB"))
    geom.validate()

    ao = base.ao
    ao_d = raw.get("ao", {})
    if ao_d:
        known = {"tol": float, "max_iters": int, "restarts": int}
        bad = set(ao_d) - set(known)
        if bad:
            raise ValueError(f"unknown ao option(s): {sorted(bad)}")
        ao = replace(ao, **{k: known[k](v) for k, v in ao_d.items()})
    mo_d = raw.get("mo", {})
    if mo_d:
        ao = replace(ao, mo_tol=float(mo_d.get("tol", ao.mo_tol)),
                     mo_max_iters=int(mo_d.get("max_iters", ao.mo_max_iters)))
    bi_d = raw.get("bisect", {})
    if bi_d:
        ao = replace(ao, bisect_tol=float(bi_d.get("tol", ao.bisect_tol)))

    mp_d = raw.get("mappo", {})
    mp_map = {"episodes": int, "steps": int, "buffer": int, "batch": int,
              "reuse": int, "discount": float, "gae": float, "clip": float,
              "entropy": float, "lr": float, "nu": float}
    mp_kwargs = {k: mp_map[k](v) for k, v in mp_d.items() if k in mp_map}
    if "steps" in mp_kwargs and "buffer" not in mp_kwargs:
        mp_kwargs["buffer"] = mp_kwargs["steps"]
    mappo = replace(base.mappo, **mp_kwargs)
    mappo.validate()

    return Scenario(system=sys_cfg, geometry=geom, ao=ao, mappo=mappo)


def _geometry_from_dict(geo_d: dict, sys_cfg: SystemConfig, base: Geometry,
                        rician_db=None) -> Geometry:
    from .channel import drop_users

    bs = np.asarray(geo_d.get("bs", base.bs_pos), dtype=float)
    ris = np.asarray(geo_d.get("ris", base.ris_pos), dtype=float).reshape(-1, 3)
    if ris.shape[0] != sys_cfg.L:
        raise ValueError(f"geometry.ris must list {sys_cfg.L} positions")

    if "users" in geo_d:
        users = np.asarray(geo_d["users"], dtype=float).reshape(-1, 3)
    elif "user_center" in geo_d or "user_radius" in geo_d:
        center = np.asarray(geo_d.get("user_center", [18.0, 18.0, 0.0]), dtype=float)
        radius = float(geo_d.get("user_radius", 3.0))
        rng = np.random.default_rng(int(geo_d.get("drop_seed", 0)))
        users = drop_users(center, radius, sys_cfg.K, rng)
    else:
        users = base.user_pos
    if users.shape[0] != sys_cfg.K:
        raise ValueError(f"geometry must provide {sys_cfg.K} user positions")

    if rician_db is not None:
        ric_l, ric_kl = _rician_arrays(sys_cfg, float(rician_db))
    else:
        ric_l = np.resize(np.asarray(base.rician_bs_ris, dtype=float), sys_cfg.L)
        ric_kl = np.full((sys_cfg.K, sys_cfg.L), float(np.mean(base.rician_ris_user)))
    if "rician_bs_ris_dB" in geo_d:
        ric_l = db_to_linear(np.asarray(geo_d["rician_bs_ris_dB"], dtype=float))
        ric_l = np.broadcast_to(ric_l, (sys_cfg.L,)).copy()
    if "rician_ris_user_dB" in geo_d:
        ric_kl = db_to_linear(np.asarray(geo_d["rician_ris_user_dB"], dtype=float))
        ric_kl = np.broadcast_to(ric_kl, (sys_cfg.K, sys_cfg.L)).copy()

    return Geometry(bs_pos=bs, ris_pos=ris, user_pos=users,
                    rician_bs_ris=ric_l, rician_ris_user=ric_kl)
