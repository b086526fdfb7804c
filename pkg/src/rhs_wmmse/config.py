"""System configuration, validation and scenario construction.

Configs are JSON objects whose keys mirror :class:`SystemConfig` fields; any
absent key takes the default below.  Nested ``"solver"`` and ``"sweep"``
objects override individual solver options and sweep grids.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import (
    AbsorptionModel,
    ChannelSet,
    SubbandPlan,
    UserLocation,
    build_channels,
    subband_centers,
)
from .em_coupling import (
    ArrayGeometry,
    CouplingConfig,
    CouplingMatrix,
    build_coupling,
)
from .exceptions import ConfigError, RHSError
from .rhs_operator import FeedConfig, build_feed_matrix, init_hologram_hdma
from .wmmse import SolverOptions

ALL_SCHEMES = ("CA-Joint", "CA-Joint-Jac", "CU-Joint", "Holo+WMMSE",
               "Uniform+WMMSE", "Holo+ZF", "Uniform+ZF")
ZF_SCHEMES = ("Holo+ZF", "Uniform+ZF")

DEFAULT_SWEEP = {
    "pbs": [2.0, 5.0, 10.0, 20.0],
    "xi_fs": [0.0, 0.01, 0.02, 0.05, 0.1],
    "rhs_size": [8, 16, 32, 64],
}


@dataclass(frozen=True)
class SystemConfig:
    # band
    f_c: float = 28e9
    B: float = 1e9
    U: int = 8
    # array
    N: int = 32
    d: float = 2.68e-3
    L: int = 4
    feeder_spacing: float = 10.70e-3
    orientation: tuple = (0.0, 0.0, 1.0)
    n_eff: float = float(np.sqrt(3.0))
    # users
    user_r: tuple = (3.0, 4.5, 6.0, 7.5)
    user_theta_deg: tuple = (75.0, 85.0, 95.0, 105.0)
    kappa_abs: float = 0.1
    user_jitter_m: float = 0.0
    user_jitter_deg: float = 0.0
    # power
    P_BS_list: tuple = (2.0, 5.0, 10.0, 20.0)
    P_BS: float = 10.0
    P_RHS: float = 50.0
    eta: float = 1.0
    sigma2: float = 1.0
    # coupling
    xi_fs: float = 0.02
    xi_wg: float = 0.02
    alpha_wg: float = 0.15
    beta_wg: float = 1.0
    rho_plus: float = 1.0
    rho_minus: float = 1.0
    distance_mode: str = "index"
    # design
    uniform_level: float = 0.5
    solver: dict = field(default_factory=dict)
    schemes: tuple = ALL_SCHEMES
    seeds: tuple = (0,)
    sweep: dict = field(default_factory=dict)
    workers: int = 1

    @property
    def K(self) -> int:
        return len(self.user_r)

    def solver_options(self, **overrides) -> SolverOptions:
        opts = dict(self.solver)
        opts.update(overrides)
        return SolverOptions(**opts)

    def sweep_values(self, axis: str) -> list:
        return list(self.sweep.get(axis, DEFAULT_SWEEP[axis]))

    def replace(self, **changes) -> "SystemConfig":
        return validate_config(dataclasses.replace(self, **changes))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, val in out.items():
            if isinstance(val, tuple):
                out[key] = list(val)
        return out

    def hash(self) -> str:
        """Short sha256 of the canonical JSON form (execution settings excluded)."""
        data = self.to_dict()
        data.pop("workers")
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_TUPLE_FIELDS = {"orientation", "user_r", "user_theta_deg", "P_BS_list", "schemes", "seeds"}


def _positive(cfg, name):
    val = getattr(cfg, name)
    if not (isinstance(val, (int, float)) and val > 0):
        raise ConfigError(f"must be positive, got {val!r}", name)


def validate_config(cfg: SystemConfig) -> SystemConfig:
    for name in ("f_c", "B", "d", "feeder_spacing", "P_BS", "P_RHS", "eta",
                 "sigma2", "n_eff"):
        _positive(cfg, name)
    for name in ("U", "N", "L", "workers"):
        val = getattr(cfg, name)
        if not isinstance(val, int) or isinstance(val, bool) or val < 1:
            raise ConfigError(f"must be an integer >= 1, got {val!r}", name)
    if cfg.f_c <= cfg.B / 2:
        raise ConfigError("carrier must exceed half the bandwidth", "f_c")
    if cfg.n_eff < 1:
        raise ConfigError("must be >= 1", "n_eff")
    if len(cfg.user_r) == 0:
        raise ConfigError("at least one user is required", "user_r")
    if len(cfg.user_r) != len(cfg.user_theta_deg):
        raise ConfigError("must have one angle per user", "user_theta_deg")
    if any(r <= 0 for r in cfg.user_r):
        raise ConfigError("user distances must be positive", "user_r")
    if any(p <= 0 for p in cfg.P_BS_list):
        raise ConfigError("powers must be positive", "P_BS_list")
    for name in ("kappa_abs", "xi_fs", "xi_wg", "alpha_wg", "user_jitter_m",
                 "user_jitter_deg", "rho_plus", "rho_minus"):
        if getattr(cfg, name) < 0:
            raise ConfigError("must be >= 0", name)
    if not 0.0 <= cfg.uniform_level <= 1.0:
        raise ConfigError("must lie in [0, 1]", "uniform_level")
    if cfg.distance_mode not in ("index", "physical"):
        raise ConfigError("must be 'index' or 'physical'", "distance_mode")
    if len(cfg.orientation) != 3 or not any(cfg.orientation):
        raise ConfigError("must be a nonzero 3-vector", "orientation")
    unknown = [s for s in cfg.schemes if s not in ALL_SCHEMES]
    if unknown:
        raise ConfigError(f"unknown scheme(s) {unknown}", "schemes")
    if any(s in ZF_SCHEMES for s in cfg.schemes) and cfg.K > cfg.L:
        raise ConfigError(f"ZF requires K <= L (K={cfg.K}, L={cfg.L})", "K")
    for axis, vals in cfg.sweep.items():
        if axis not in DEFAULT_SWEEP:
            raise ConfigError(f"unknown sweep axis {axis!r}", "sweep")
        if not vals:
            raise ConfigError(f"empty value list for {axis}", "sweep")
    try:
        cfg.solver_options()
    except TypeError as exc:
        raise ConfigError(str(exc), "solver") from None
    except RHSError as exc:
        raise ConfigError(str(exc), "solver") from None
    return cfg


def config_from_dict(data: dict) -> SystemConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    known = {f.name for f in dataclasses.fields(SystemConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", unknown[0])
    kwargs = {}
    for key, val in data.items():
        if key in _TUPLE_FIELDS:
            if not isinstance(val, (list, tuple)):
                raise ConfigError("must be a list", key)
            val = tuple(val)
        kwargs[key] = val
    try:
        cfg = SystemConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    try:
        return validate_config(cfg)
    except TypeError as exc:
        raise ConfigError(f"wrong type ({exc})") from None


def load_config(path=None) -> SystemConfig:
    """Read a JSON config; ``None`` or an empty file gives all defaults."""
    if path is None:
        return validate_config(SystemConfig())
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    if not text.strip():
        return validate_config(SystemConfig())
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# Scenario construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SystemModel:
    """Physical ingredients shared by all schemes for one (config, seed)."""

    config: SystemConfig
    geometry: ArrayGeometry
    plan: SubbandPlan
    channels: ChannelSet
    F: np.ndarray
    coupling: CouplingMatrix
    m_hdma: np.ndarray
    seed: int = 0


def user_locations(cfg: SystemConfig, seed: int = 0) -> list[UserLocation]:
    r = np.asarray(cfg.user_r, dtype=float)
    theta = np.asarray(cfg.user_theta_deg, dtype=float)
    if cfg.user_jitter_m > 0 or cfg.user_jitter_deg > 0:
        rng = np.random.default_rng(seed)
        r = r + cfg.user_jitter_m * rng.uniform(-1, 1, r.shape)
        theta = theta + cfg.user_jitter_deg * rng.uniform(-1, 1, theta.shape)
        r = np.maximum(r, 1e-3)
    return [UserLocation.from_degrees(ri, ti) for ri, ti in zip(r, theta)]


def build_system(cfg: SystemConfig, seed: int = 0) -> SystemModel:
    geometry = ArrayGeometry.ula(cfg.N, cfg.d, cfg.L, cfg.feeder_spacing, cfg.orientation)
    plan = subband_centers(cfg.f_c, cfg.B, cfg.U)
    users = user_locations(cfg, seed)
    channels = build_channels(geometry, users, plan, AbsorptionModel(cfg.kappa_abs),
                              cfg.sigma2)
    feed = FeedConfig(cfg.n_eff)
    F = build_feed_matrix(geometry, feed, plan.centers)
    coupling = build_coupling(geometry, plan.centers, CouplingConfig(
        rho_plus=cfg.rho_plus, rho_minus=cfg.rho_minus, alpha_wg=cfg.alpha_wg,
        beta_wg=cfg.beta_wg, target_xi_fs=cfg.xi_fs, target_xi_wg=cfg.xi_wg,
        distance_mode=cfg.distance_mode))
    m0 = init_hologram_hdma(geometry, [u.theta for u in users], feed, cfg.f_c).m
    return SystemModel(cfg, geometry, plan, channels, F, coupling, m0, seed)
