"""Comparison schemes: ZF precoding, fixed holograms and coupling-unaware design.

Every scheme reports its metrics under the true coupling of the system model,
whatever coupling it assumed while designing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import SystemModel
from .exceptions import InvalidArgumentError, RankDeficiencyError
from .rhs_operator import HologramState, coupled_operator, rhs_power
from .wmmse import (
    IterationRecord,
    PrecoderSet,
    Scenario,
    SolverOptions,
    SolverTrace,
    bcd_solve,
    effective_channels,
    objectives,
    sinr,
    total_power,
)

__all__ = ["Scheme", "SCHEMES", "RunMetrics", "zf_precoders", "uniform_hologram",
           "run_scheme"]


@dataclass(frozen=True)
class Scheme:
    tag: str
    design_coupling: str      # "true" | "zero"
    hologram_mode: str        # "fixed-HDMA" | "fixed-uniform" | "optimized"
    precoder_mode: str        # "wmmse" | "zf"
    variant: str = "freeze"


SCHEMES = {
    "CA-Joint": Scheme("CA-Joint", "true", "optimized", "wmmse", "freeze"),
    "CA-Joint-Jac": Scheme("CA-Joint-Jac", "true", "optimized", "wmmse", "jacobian"),
    "CU-Joint": Scheme("CU-Joint", "zero", "optimized", "wmmse", "freeze"),
    "Holo+WMMSE": Scheme("Holo+WMMSE", "true", "fixed-HDMA", "wmmse"),
    "Uniform+WMMSE": Scheme("Uniform+WMMSE", "true", "fixed-uniform", "wmmse"),
    "Holo+ZF": Scheme("Holo+ZF", "true", "fixed-HDMA", "zf"),
    "Uniform+ZF": Scheme("Uniform+ZF", "true", "fixed-uniform", "zf"),
}


@dataclass(frozen=True)
class RunMetrics:
    sum_rate_bps: float
    sum_se_bpshz: float
    J: float
    rhs_power: float
    iterations: int
    wall_ms: float


def uniform_hologram(N: int, level: float = 0.5) -> HologramState:
    if not 0.0 <= level <= 1.0:
        raise InvalidArgumentError("uniform level must lie in [0, 1]")
    return HologramState(np.full(N, float(level)))


def zf_precoders(Hbar, P_BS: float, rcond: float = 1e-10) -> PrecoderSet:
    """Subband-wise ZF with unit-direction columns and power ``P_BS/(U K)`` each."""
    Hbar = np.asarray(Hbar)
    U, K, L = Hbar.shape
    if K > L:
        raise RankDeficiencyError(f"ZF needs K <= L, got K={K}, L={L}")
    V = np.empty((U, L, K), dtype=complex)
    for u in range(U):
        H = Hbar[u]
        s = np.linalg.svd(H, compute_uv=False)
        if s[0] == 0 or s[-1] <= rcond * s[0]:
            raise RankDeficiencyError(f"effective channel of subband {u} is rank deficient")
        W = np.conj(H.T) @ np.linalg.inv(H @ np.conj(H.T))
        V[u] = W / np.linalg.norm(W, axis=0, keepdims=True)
    V *= np.sqrt(P_BS / (U * K))
    return PrecoderSet(V, total_power(V))


def _fixed_hologram(scheme: Scheme, system: SystemModel) -> np.ndarray:
    if scheme.hologram_mode == "fixed-uniform":
        return uniform_hologram(system.geometry.N, system.config.uniform_level).m
    return system.m_hdma.copy()


def build_scenario(scheme: Scheme, system: SystemModel, P_BS: float | None = None) -> Scenario:
    cfg = system.config
    Xi_true = system.coupling.total
    Xi_design = Xi_true if scheme.design_coupling == "true" else np.zeros_like(Xi_true)
    return Scenario(
        channels=system.channels, F=system.F, Xi=Xi_design,
        P_BS=cfg.P_BS if P_BS is None else P_BS,
        m0=_fixed_hologram(scheme, system), P_RHS=cfg.P_RHS, eta=cfg.eta,
        Xi_eval=None if scheme.design_coupling == "true" else Xi_true,
    )


def _zf_run(scenario: Scenario, options: SolverOptions) -> tuple[np.ndarray, PrecoderSet, SolverTrace]:
    t0 = time.perf_counter()
    op = coupled_operator(scenario.m0, scenario.eval_coupling, scenario.F, options.margin)
    Hbar = effective_channels(scenario.channels.h, op.M)
    pre = zf_precoders(Hbar, scenario.P_BS)
    gamma = sinr(Hbar, pre.V, scenario.channels.sigma2)
    rate, J = objectives(gamma, scenario.B_g)
    power = rhs_power(op.M, pre.V, scenario.eta)
    wall = 1e3 * (time.perf_counter() - t0)
    trace = SolverTrace()
    # one-shot design: the same point is reported at every iteration index
    for it in range(options.max_iter + 1):
        trace.append(IterationRecord(it, rate, rate / scenario.B_g, J, power, 0.0, 0.0,
                                     0.0, 0, False, wall, pre.total_power))
    return scenario.m0, pre, trace


def run_scheme(scheme: Scheme | str, system: SystemModel, options: SolverOptions | None = None,
               P_BS: float | None = None) -> tuple[RunMetrics, SolverTrace, np.ndarray, PrecoderSet]:
    """Design with the scheme's assumptions, report under the true coupling."""
    if isinstance(scheme, str):
        if scheme not in SCHEMES:
            raise InvalidArgumentError(f"unknown scheme {scheme!r}")
        scheme = SCHEMES[scheme]
    base = options or system.config.solver_options()
    scenario = build_scenario(scheme, system, P_BS)
    if scheme.precoder_mode == "zf":
        m, pre, trace = _zf_run(scenario, base)
        iterations = 0
    else:
        opts = SolverOptions(**{**base.__dict__,
                                "variant": scheme.variant,
                                "update_hologram": scheme.hologram_mode == "optimized"})
        holo, pre, trace = bcd_solve(scenario, opts)
        m = holo.m
        iterations = len(trace) - 1
    last = trace.final
    metrics = RunMetrics(last.sum_rate_bps, last.sum_se_bpshz, last.J, last.rhs_power,
                         iterations, last.wall_ms)
    return metrics, trace, m, pre
