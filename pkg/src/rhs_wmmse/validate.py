"""Self-check suite run by ``rhs-wmmse validate``.

Each check compares an implementation against an independent oracle (finite
differences, closed forms, direct operator evaluation) and reports the
observed error next to its bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig, build_system
from .em_coupling import coupling_strength, green_field, green_field_terms, wavenumber
from .rhs_operator import (
    coupled_operator,
    make_surrogate,
    operator_jacobian,
    surrogate_operator,
)
from .wmmse import (
    effective_channels,
    hologram_qcqp_jacobian_assemble,
    hologram_qp_freeze_assemble,
    matched_filter_precoders,
    mmse_update,
    mse,
    precoder_qp_assemble,
    precoder_update,
    sinr,
)

FAULTS = ("jacobian_sign",)


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    observed: float
    bound: float
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.module}.{self.name}: observed {self.observed:.3e} (bound {self.bound:.1e})"


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def text(self) -> str:
        return "\n".join(c.line() for c in self.checks)


def _check(module, name, observed, bound, upper=True) -> CheckResult:
    ok = bool(np.isfinite(observed)) and (observed <= bound if upper else observed >= bound)
    return CheckResult(module, name, float(observed), float(bound), ok)


def _random_direction(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _green_checks(cfg, rng, n=200):
    f = cfg.f_c
    k = wavenumber(f)
    worst_t, worst_axial, worst_broad = 0.0, 0.0, 0.0
    for _ in range(n):
        src = rng.uniform(-0.05, 0.05, 3)
        e = _random_direction(rng)
        R = rng.uniform(1e-3, 0.2)
        # transversality of the radiating part
        obs = src + R * _random_direction(rng)
        rad, _ = green_field_terms(src, obs, e, f)
        R_hat = (obs - src) / np.linalg.norm(obs - src)
        worst_t = max(worst_t, abs(np.dot(rad, R_hat)) / max(np.linalg.norm(rad), 1e-300))
        pref = np.exp(-1j * k * R) / (4 * np.pi * R)
        # axial: only the near term survives, with factor 2
        H = green_field(src, src + R * e, e, f)
        ref = pref * 2.0 * (1.0 / R**2 - 1j * k / R)
        worst_axial = max(worst_axial, abs(np.dot(e, H) - ref) / abs(ref))
        # broadside: radiating k^2 plus near term with factor -1
        perp = np.cross(e, _random_direction(rng))
        perp /= np.linalg.norm(perp)
        H = green_field(src, src + R * perp, e, f)
        ref = pref * (k**2 - (1.0 / R**2 - 1j * k / R))
        worst_broad = max(worst_broad, abs(np.dot(e, H) - ref) / abs(ref))
    return [
        _check("em_coupling", "green_transversality", worst_t, 1e-12),
        _check("em_coupling", "green_axial_closed_form", worst_axial, 1e-12),
        _check("em_coupling", "green_broadside_closed_form", worst_broad, 1e-12),
    ]


def _random_hologram(rng, N, lo=0.2, hi=0.8):
    return rng.uniform(lo, hi, N)


def run_validate(cfg: SystemConfig | None = None, fault: str | None = None,
                 seed: int = 0) -> ValidationReport:
    """Run every check; ``fault`` injects a known defect to exercise the suite."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    cfg = cfg or SystemConfig()
    rng = np.random.default_rng(seed)
    system = build_system(cfg, seed)
    checks = _green_checks(cfg, rng)

    cp = system.coupling
    rel = max(abs(cp.xi_fs.max() - cfg.xi_fs) / max(cfg.xi_fs, 1e-300) if cfg.xi_fs else cp.xi_fs.max(),
              abs(cp.xi_wg.max() - cfg.xi_wg) / max(cfg.xi_wg, 1e-300) if cfg.xi_wg else cp.xi_wg.max())
    checks.append(_check("em_coupling", "strength_targets", rel, 1e-12))
    checks.append(_check("em_coupling", "strength_recomputed",
                         float(np.max(np.abs(coupling_strength(cp.total - cp.wg) - cp.xi_fs))), 1e-12))

    Xi, F = cp.total, system.F
    N = cfg.N

    # Jacobian vs central differences
    worst = 0.0
    h = 1e-6
    for _ in range(5):
        m = _random_hologram(rng, N)
        op = coupled_operator(m, Xi, F)
        for n in rng.choice(N, size=min(4, N), replace=False):
            J = operator_jacobian(op, Xi, F, int(n))
            if fault == "jacobian_sign":
                J = -J
            mp, mm = m.copy(), m.copy()
            mp[n] += h
            mm[n] -= h
            fd = (coupled_operator(mp, Xi, F).M - coupled_operator(mm, Xi, F).M) / (2 * h)
            worst = max(worst, np.linalg.norm(J - fd) / np.linalg.norm(fd))
    checks.append(_check("rhs_operator", "jacobian_finite_difference", worst, 1e-6))

    # second-order tangency of the surrogate
    ratios = []
    for _ in range(5):
        m = _random_hologram(rng, N)
        op = coupled_operator(m, Xi, F)
        sur = make_surrogate(op, Xi, F)
        d = rng.normal(size=N)
        d /= np.linalg.norm(d)
        errs = []
        for eps in (0.05, 0.025):
            exact = coupled_operator(m + eps * d, Xi, F).M
            errs.append(np.linalg.norm(exact - surrogate_operator(sur, eps * d)))
        ratios.append(errs[0] / errs[1])
    dev = max(abs(r - 4.0) for r in ratios)
    checks.append(_check("rhs_operator", "surrogate_second_order", dev, 0.5))

    # WMMSE identity and MSE closed form
    m = system.m_hdma
    op = coupled_operator(m, Xi, F)
    Hbar = effective_channels(system.channels.h, op.M)
    sigma2 = system.channels.sigma2
    worst_id = 0.0
    for _ in range(20):
        V = (rng.normal(size=(cfg.U, cfg.L, cfg.K)) + 1j * rng.normal(size=(cfg.U, cfg.L, cfg.K)))
        V *= np.sqrt(cfg.P_BS / np.sum(np.abs(V) ** 2))
        eq = mmse_update(Hbar, V, sigma2)
        gamma = sinr(Hbar, V, sigma2)
        value = eq.w * mse(Hbar, V, sigma2, eq.g) - np.log(eq.w)
        worst_id = max(worst_id, float(np.max(np.abs(value - (1.0 - np.log1p(gamma))))))
    checks.append(_check("wmmse_solver", "wmmse_identity", worst_id, 1e-10))

    # KKT slackness of the precoder update
    V = matched_filter_precoders(Hbar, cfg.P_BS)
    eq = mmse_update(Hbar, V, sigma2)
    A, B = precoder_qp_assemble(Hbar, eq)
    pre, lam = precoder_update(A, B, cfg.P_BS)
    slack = lam * abs(pre.total_power - cfg.P_BS) / (cfg.P_BS * max(1.0, lam))
    checks.append(_check("wmmse_solver", "kkt_slackness", slack, 1e-6))
    checks.append(_check("wmmse_solver", "power_budget",
                         max(0.0, pre.total_power / cfg.P_BS - 1.0), 1e-6))
    min_eig_A = max(0.0, *(-np.linalg.eigvalsh(A[u])[0] / max(np.linalg.norm(A[u], 2), 1e-300)
                                 for u in range(cfg.U)))
    checks.append(_check("wmmse_solver", "precoder_A_psd", min_eig_A, 1e-10))

    # hologram assemblies: PSD and power form
    V = pre.V
    psd, power_err = 0.0, 0.0
    for qp in (hologram_qp_freeze_assemble(system.channels, op, F, eq, V),
               hologram_qcqp_jacobian_assemble(system.channels, op, Xi, F, eq, V)):
        mats = [qp.Q] + list(qp.R)
        for Mx in mats:
            norm = np.linalg.norm(Mx, 2)
            if norm > 0:
                psd = max(psd, -np.linalg.eigvalsh(Mx)[0] / norm)
    qp = hologram_qp_freeze_assemble(system.channels, op, F, eq, V)
    for _ in range(5):
        x = rng.uniform(0, 1, N)
        for u in range(cfg.U):
            direct = np.linalg.norm(op.C[u] @ (x[:, None] * F[u]) @ V[u]) ** 2
            power_err = max(power_err, abs(x @ qp.R[u] @ x - direct) / direct)
    checks.append(_check("wmmse_solver", "hologram_psd", psd, 1e-9))
    checks.append(_check("wmmse_solver", "freeze_power_form", power_err, 1e-9))
    return ValidationReport(checks)
