"""WMMSE block-coordinate descent for joint hologram/precoder design.

Conventions
-----------
Channels ``h`` are (U, K, N), coupled operators ``M`` are (U, N, L), precoders
``V`` are (U, L, K) with column ``V[u, :, k] = v_{k,u}``.  Effective channels
``Hbar = h @ M`` are (U, K, L).  The receiver estimates ``s_hat = conj(g) * y``
so that the MMSE equalizer is ``g = hbar v_k / (sum_i |hbar v_i|^2 + sigma^2)``
and the MSE reads ``|g|^2 T - 2 Re(conj(g) hbar v_k) + 1``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import ChannelSet
from .exceptions import (
    IllConditionedCouplingError,
    InvalidArgumentError,
    NumericFailure,
)
from .rhs_operator import (
    DEFAULT_MARGIN,
    CoupledOperator,
    HologramState,
    coupled_operator,
    make_surrogate,
    rhs_power,
)

FEAS_TOL = 1e-9


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 100
    stop_threshold: float = 1e-4
    step_size: float = 0.05          # trust radius on |dm|_inf per outer iteration
    inner_iters: int = 50
    bisection_tol: float = 1e-8
    variant: str = "freeze"          # or "jacobian"
    monotone_safeguard: bool = True
    update_hologram: bool = True
    rhs_in_precoder: bool = True
    margin: float = DEFAULT_MARGIN
    max_backtracks: int = 20

    def __post_init__(self):
        if self.variant not in ("freeze", "jacobian"):
            raise InvalidArgumentError("variant must be 'freeze' or 'jacobian'")
        for name in ("max_iter", "stop_threshold", "step_size", "inner_iters",
                     "bisection_tol"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive")


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    V: np.ndarray
    total_power: float
    lam: float = 0.0
    mu: float = 0.0   # dual of the RHS power cap, 0 when inactive


@dataclass(frozen=True, eq=False)
class EqualizerState:
    g: np.ndarray
    w: np.ndarray
    e: np.ndarray


@dataclass(frozen=True, eq=False)
class HologramQP:
    """Convex QP in ``x``, where the hologram is ``m = anchor + x``.

    Objective ``x^T Q x - 2 Re(q)^T x + const`` equals the weighted WMSE
    ``sum w e - ln w``; the RHS power model is ``sum_u x^T R_u x + 2 b_u^T x + c_u``
    (before the efficiency factor).
    """

    Q: np.ndarray
    q: np.ndarray
    R: np.ndarray
    b: np.ndarray
    c: np.ndarray
    anchor: np.ndarray
    mode: str
    const: float = 0.0

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q @ x - 2.0 * self.q.real @ x + self.const)

    def gradient(self, x) -> np.ndarray:
        return 2.0 * self.Q @ x - 2.0 * self.q.real

    def power(self, x, eta: float = 1.0) -> float:
        x = np.asarray(x, dtype=float)
        quad = np.einsum("n,unk,k->", x, self.R, x)
        return float(eta * (quad + 2.0 * np.sum(self.b @ x) + np.sum(self.c)))


@dataclass
class IterationRecord:
    iteration: int
    sum_rate_bps: float
    sum_se_bpshz: float
    J: float
    rhs_power: float
    lam: float
    mu: float
    step_norm: float
    backtracks: int
    restored: bool
    wall_ms: float
    bs_power: float = 0.0


@dataclass
class SolverTrace:
    records: list = field(default_factory=list)

    def append(self, rec: IterationRecord):
        self.records.append(rec)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def __len__(self):
        return len(self.records)

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything the solver needs.

    ``Xi`` is the coupling assumed during design, ``Xi_eval`` the one used to
    report metrics (defaults to ``Xi``).
    """

    channels: ChannelSet
    F: np.ndarray
    Xi: np.ndarray
    P_BS: float
    m0: np.ndarray
    P_RHS: float | None = None
    eta: float = 1.0
    Xi_eval: np.ndarray | None = None
    V0: np.ndarray | None = None

    @property
    def B_g(self) -> float:
        return self.channels.plan.B_g

    @property
    def eval_coupling(self) -> np.ndarray:
        return self.Xi if self.Xi_eval is None else self.Xi_eval


# ---------------------------------------------------------------------------
# Rates and MMSE
# ---------------------------------------------------------------------------

def effective_channels(h, M) -> np.ndarray:
    return np.asarray(h) @ np.asarray(M)


def _link_gains(Hbar, V) -> np.ndarray:
    """``S[u, k, i] = hbar_{k,u} v_{i,u}``."""
    return np.asarray(Hbar) @ np.asarray(V)


def sinr(Hbar, V, sigma2) -> np.ndarray:
    """SINR per (u, k)."""
    S = np.abs(_link_gains(Hbar, V)) ** 2
    signal = np.diagonal(S, axis1=1, axis2=2)
    interference = S.sum(axis=2) - signal
    return signal / (sigma2 + interference)


def objectives(gamma, B_g: float) -> tuple[float, float]:
    """Sum rate in bit/s and surrogate ``J = sum(1 - ln(1 + gamma))``."""
    gamma = np.asarray(gamma, dtype=float)
    sum_rate = float(B_g * np.sum(np.log2(1.0 + gamma)))
    J = float(np.sum(1.0 - np.log1p(gamma)))
    return sum_rate, J


def mmse_update(Hbar, V, sigma2) -> EqualizerState:
    """Closed-form MMSE equalizers, errors and weights."""
    S = _link_gains(Hbar, V)
    P = np.abs(S) ** 2
    diag = np.diagonal(S, axis1=1, axis2=2)
    total = P.sum(axis=2) + sigma2
    g = diag / total
    # (sigma^2 + interference) / total avoids cancellation in 1 - |s|^2/total
    e = (total - np.abs(diag) ** 2) / total
    return EqualizerState(g=g, w=1.0 / e, e=e)


def mse(Hbar, V, sigma2, g) -> np.ndarray:
    """MSE for an arbitrary equalizer ``g`` (shape (U, K))."""
    S = _link_gains(Hbar, V)
    total = np.sum(np.abs(S) ** 2, axis=2) + sigma2
    diag = np.diagonal(S, axis1=1, axis2=2)
    return np.abs(g) ** 2 * total - 2.0 * np.real(np.conj(g) * diag) + 1.0


def wmmse_objective(Hbar, V, sigma2, eq: EqualizerState) -> float:
    """``sum w e(g) - ln w`` with the equalizer/weights held fixed."""
    e = mse(Hbar, V, sigma2, eq.g)
    return float(np.sum(eq.w * e - np.log(eq.w)))


# ---------------------------------------------------------------------------
# Precoder block
# ---------------------------------------------------------------------------

def precoder_qp_assemble(Hbar, eq: EqualizerState) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic ``A_u`` (U, L, L) and linear ``B_u`` (U, L, K) terms."""
    Hbar = np.asarray(Hbar)
    HH = np.conj(np.swapaxes(Hbar, 1, 2))                  # columns h_tilde
    c = eq.w * np.abs(eq.g) ** 2
    A = HH @ (c[:, :, None] * Hbar)
    A = 0.5 * (A + np.conj(np.swapaxes(A, 1, 2)))
    B = HH * (eq.w * eq.g)[:, None, :]
    return A, B


def total_power(V) -> float:
    return float(np.sum(np.abs(V) ** 2))


class _EigenSolve:
    """Diagonalized ``(A_u + lam I)^{-1} B_u`` for fast power evaluation."""

    def __init__(self, A, B):
        vals, vecs = np.linalg.eigh(A)
        self.vals = np.clip(vals, 0.0, None)
        self.vecs = vecs
        self.proj = np.conj(np.swapaxes(vecs, 1, 2)) @ B
        self.weight = np.sum(np.abs(self.proj) ** 2, axis=2)
        scale = self.vals.max(initial=0.0)
        self.null = self.vals <= 1e-13 * scale if scale > 0 else np.ones_like(self.vals, bool)

    def power(self, lam: float) -> float:
        if lam > 0:
            return float(np.sum(self.weight / (self.vals + lam) ** 2))
        active = ~self.null
        residual = self.weight[self.null].sum()
        if residual > 1e-20 * max(self.weight.sum(), 1e-300):
            return np.inf
        return float(np.sum(self.weight[active] / self.vals[active] ** 2))

    def precoders(self, lam: float) -> np.ndarray:
        denom = self.vals + lam
        inv = np.zeros_like(denom)
        ok = denom > 0 if lam == 0 else np.ones_like(denom, bool)
        if lam == 0:
            ok &= ~self.null
        inv[ok] = 1.0 / denom[ok]
        return self.vecs @ (inv[:, :, None] * self.proj)


def _bisect_lambda(solver: _EigenSolve, P_BS: float, tol: float) -> float:
    if solver.power(0.0) <= P_BS:
        return 0.0
    lo, hi = 0.0, 1.0
    doublings = 0
    while solver.power(hi) > P_BS:
        lo, hi = hi, 2.0 * hi
        doublings += 1
        if doublings > 200:
            raise NumericFailure("power bisection failed to bracket lambda")
    for _ in range(2000):
        # power tolerance alone leaves lam loose when lam << eig(A); also close the bracket
        if P_BS - solver.power(hi) <= tol * P_BS and hi - lo <= tol * hi:
            break
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
        mid = 0.5 * (lo + hi)
        if solver.power(mid) > P_BS:
            lo = mid
        else:
            hi = mid
    return hi


def precoder_update(A, B, P_BS: float, tol: float = 1e-8,
                    rhs: tuple[np.ndarray, float] | None = None) -> tuple[PrecoderSet, float]:
    """KKT update ``V_u = (A_u + lam I)^{-1} B_u`` under the sum-power budget.

    ``lam`` is found by bisection on the decreasing power ``P(lam)``.  When
    ``rhs = (K_u, P_RHS)`` is given, the loaded RHS power ``sum Tr(V^H K V)``
    is also capped: a second multiplier ``mu`` adds ``mu K_u`` to ``A_u`` and is
    bisected on the outside, since the partially maximized dual is concave in
    ``mu``.
    """
    if P_BS <= 0:
        raise InvalidArgumentError("P_BS must be positive")
    A = np.asarray(A)
    B = np.asarray(B)
    if not np.any(B):
        V = np.zeros_like(B)
        return PrecoderSet(V, 0.0, 0.0, 0.0), 0.0

    def solve(mu: float):
        Aeff = A if mu == 0 else A + mu * rhs[0]
        es = _EigenSolve(Aeff, B)
        lam = _bisect_lambda(es, P_BS, tol)
        return es.precoders(lam), lam

    V, lam = solve(0.0)
    mu = 0.0
    if rhs is not None and rhs[1] is not None:
        Kmat, P_RHS = rhs

        def loaded(V):
            return float(np.real(np.sum(np.conj(V) * (Kmat @ V))))

        if loaded(V) > P_RHS:
            lo, hi = 0.0, 1.0
            V_hi, lam_hi = solve(hi)
            doublings = 0
            while loaded(V_hi) > P_RHS:
                lo, hi = hi, 2.0 * hi
                V_hi, lam_hi = solve(hi)
                doublings += 1
                if doublings > 200:
                    raise NumericFailure("RHS power bisection failed to bracket mu")
            for _ in range(2000):
                if P_RHS - loaded(V_hi) <= tol * P_RHS or hi - lo <= 4 * np.finfo(float).eps * hi:
                    break
                mid = 0.5 * (lo + hi)
                V_mid, lam_mid = solve(mid)
                if loaded(V_mid) > P_RHS:
                    lo = mid
                else:
                    hi, V_hi, lam_hi = mid, V_mid, lam_mid
            V, lam, mu = V_hi, lam_hi, hi
    return PrecoderSet(V, total_power(V), lam, mu), lam


def matched_filter_precoders(Hbar, P_BS: float) -> np.ndarray:
    """Per-(k, u) matched filters with equal column power ``P_BS/(U K)``."""
    Hbar = np.asarray(Hbar)
    U, K, L = Hbar.shape
    V = np.conj(np.swapaxes(Hbar, 1, 2))
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    V = np.divide(V, norms, out=np.zeros_like(V), where=norms > 0)
    return V * np.sqrt(P_BS / (U * K))


# ---------------------------------------------------------------------------
# Hologram block
# ---------------------------------------------------------------------------

def _a_vectors(r, f) -> np.ndarray:
    """``a[u, k, i, :] = conj(r_{k,u} * f_{i,u})`` so that ``z = a^H x``."""
    return np.conj(r[:, :, None, :] * np.swapaxes(f, 1, 2)[:, None, :, :])


def _real_gram(a, weights) -> np.ndarray:
    """``sum weights * Re(a a^H)`` over all leading indices of ``a``."""
    N = a.shape[-1]
    scaled = (np.sqrt(weights)[..., None] * a).reshape(-1, N)
    Q = np.real(scaled.T @ np.conj(scaled))
    return 0.5 * (Q + Q.T)


def _power_quadratic(C, Y) -> np.ndarray:
    """``Re(G * S^T)`` with ``G = C^H C`` and ``S = Y Y^H``."""
    G = np.conj(np.swapaxes(C, 1, 2)) @ C
    S = Y @ np.conj(np.swapaxes(Y, 1, 2))
    R = np.real(G * np.swapaxes(S, 1, 2))
    return 0.5 * (R + np.swapaxes(R, 1, 2))


def hologram_qp_freeze_assemble(channels: ChannelSet, op: CoupledOperator, F,
                                eq: EqualizerState, V) -> HologramQP:
    """QP in the absolute hologram with ``C_u`` frozen at ``op.m``."""
    h = channels.h
    r = h @ op.C                                  # (U, K, N)
    f = np.asarray(F) @ V                         # (U, N, K)
    a = _a_vectors(r, f)                          # (U, K, K, N)
    U, K = eq.g.shape
    g2 = np.abs(eq.g) ** 2
    Q = _real_gram(a, np.broadcast_to((eq.w * g2)[:, :, None], (U, K, K)))
    a_kk = a[:, np.arange(K), np.arange(K), :]
    q = np.sum((eq.w * eq.g)[:, :, None] * a_kk, axis=(0, 1))
    const = float(np.sum(eq.w * (g2 * channels.sigma2 + 1.0) - np.log(eq.w)))
    R = _power_quadratic(op.C, f)
    N = Q.shape[0]
    return HologramQP(Q=Q, q=q, R=R, b=np.zeros((U, N)), c=np.zeros(U),
                      anchor=np.zeros(N), mode="freeze", const=const)


def hologram_qcqp_jacobian_assemble(channels: ChannelSet, op: CoupledOperator, Xi, F,
                                    eq: EqualizerState, V) -> HologramQP:
    """QCQP in ``dm = m - op.m`` built on the first-order coupled surrogate."""
    sur = make_surrogate(op, Xi, F)
    h = channels.h
    r = h @ sur.C
    f = sur.T @ V
    a = _a_vectors(r, f)
    z0 = h @ sur.M @ V                            # (U, K, K)
    U, K = eq.g.shape
    g2 = np.abs(eq.g) ** 2
    Q = _real_gram(a, np.broadcast_to((eq.w * g2)[:, :, None], (U, K, K)))
    a_kk = a[:, np.arange(K), np.arange(K), :]
    lin = eq.g[:, :, None] * a_kk - g2[:, :, None] * np.sum(z0[..., None] * a, axis=2)
    q = np.sum(eq.w[:, :, None] * lin, axis=(0, 1))
    z_kk = np.diagonal(z0, axis1=1, axis2=2)
    c_ku = (g2 * (np.sum(np.abs(z0) ** 2, axis=2) + channels.sigma2)
            - 2.0 * np.real(np.conj(eq.g) * z_kk) + 1.0)
    const = float(np.sum(eq.w * c_ku - np.log(eq.w)))
    X = sur.M @ V
    Y = f
    R = _power_quadratic(sur.C, Y)
    b = np.real(np.diagonal(Y @ np.conj(np.swapaxes(X, 1, 2)) @ sur.C, axis1=1, axis2=2))
    c = np.sum(np.abs(X) ** 2, axis=(1, 2))
    return HologramQP(Q=Q, q=q, R=R, b=b, c=c, anchor=sur.anchor.copy(),
                      mode="jacobian", const=const)


@dataclass(frozen=True, eq=False)
class StepResult:
    m: np.ndarray
    backtracks: int = 0
    restored: bool = False
    accepted: bool = True
    inner_iters: int = 0


def _restore_feasibility(qp: HologramQP, m_t, P_RHS, eta) -> np.ndarray:
    """Shrink ``m`` toward 0 until the modeled RHS power meets the cap."""
    def power_at(s):
        return qp.power(s * m_t - qp.anchor, eta)

    if power_at(0.0) > P_RHS:
        return np.zeros_like(m_t)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if power_at(mid) <= P_RHS:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return lo * m_t


def _projected_gradient(qp: HologramQP, x, lo, hi, P_RHS, eta, iters):
    Lf = 2.0 * float(np.linalg.eigvalsh(qp.Q)[-1]) if qp.Q.size else 0.0
    used = 0
    for used in range(1, iters + 1):
        grad = qp.gradient(x)
        if Lf > 0:
            x_new = np.clip(x - grad / Lf, lo, hi)
        else:
            # linear objective: jump to the minimizing vertex
            x_new = np.where(grad < 0, hi, np.where(grad > 0, lo, x))
        if P_RHS is not None and qp.power(x_new, eta) > P_RHS:
            d = x_new - x
            for _ in range(60):
                d *= 0.5
                if qp.power(x + d, eta) <= P_RHS:
                    break
            else:
                d[:] = 0.0
            x_new = x + d
        if np.max(np.abs(x_new - x), initial=0.0) <= 1e-15:
            x = x_new
            break
        x = x_new
    return x, used


def hologram_step(qp: HologramQP, m_t, P_RHS: float | None, eta: float,
                  options: SolverOptions,
                  true_objective: Callable[[np.ndarray], tuple[float, float]] | None = None,
                  J_ref: float | None = None) -> StepResult:
    """Projected-gradient hologram update with an optional descent safeguard.

    The inner iterations minimize the QP over the box ``[0, 1]`` intersected
    with the trust box ``|m - m_t|_inf <= options.step_size``; the RHS power
    model is kept feasible by halving steps.  If ``true_objective(m) -> (J,
    rhs_power)`` is provided and the safeguard is on, the candidate is pulled
    back toward the start until the exact objective does not increase and
    the exact power respects ``P_RHS``.
    """
    m_t = np.asarray(m_t, dtype=float)
    restored = False
    start = m_t
    if P_RHS is not None and qp.power(m_t - qp.anchor, eta) > P_RHS * (1.0 + FEAS_TOL):
        start = _restore_feasibility(qp, m_t, P_RHS, eta)
        restored = True
    if restored:
        box_lo, box_hi = np.zeros_like(m_t), np.ones_like(m_t)
    else:
        box_lo = np.maximum(0.0, m_t - options.step_size)
        box_hi = np.minimum(1.0, m_t + options.step_size)
    x, used = _projected_gradient(qp, start - qp.anchor, box_lo - qp.anchor,
                                  box_hi - qp.anchor, P_RHS, eta, options.inner_iters)
    cand = np.clip(qp.anchor + x, 0.0, 1.0)

    if true_objective is None or not options.monotone_safeguard:
        return StepResult(cand, 0, restored, True, used)

    if J_ref is None and not restored:
        J_ref = true_objective(m_t)[0]
    backtracks = 0
    while True:
        J_c, P_c = true_objective(cand)
        feasible = P_RHS is None or P_c <= P_RHS * (1.0 + FEAS_TOL)
        if feasible and (restored or J_c <= J_ref + 1e-12 * max(1.0, abs(J_ref))):
            return StepResult(cand, backtracks, restored, True, used)
        if backtracks >= options.max_backtracks:
            return StepResult(start.copy(), backtracks, restored, False, used)
        cand = start + 0.5 * (cand - start)
        backtracks += 1


# ---------------------------------------------------------------------------
# Outer loop
# ---------------------------------------------------------------------------

def _evaluate(channels, m, Xi, F, V, eta, margin):
    op = coupled_operator(m, Xi, F, margin)
    Hbar = effective_channels(channels.h, op.M)
    gamma = sinr(Hbar, V, channels.sigma2)
    return op, Hbar, gamma, rhs_power(op.M, V, eta)


def bcd_solve(scenario: Scenario, options: SolverOptions | None = None
              ) -> tuple[HologramState, PrecoderSet, SolverTrace]:
    """Alternate MMSE, precoder and (optionally) hologram updates.

    Terminates after ``max_iter`` outer iterations or once the relative change
    of the design objective ``J`` drops below ``stop_threshold``.  Record 0 of
    the trace holds the initial point.
    """
    opts = options or SolverOptions()
    ch = scenario.channels
    F, Xi, eta = scenario.F, scenario.Xi, scenario.eta
    Xi_eval = scenario.eval_coupling
    same_eval = Xi_eval is Xi
    B_g = scenario.B_g
    P_RHS = scenario.P_RHS
    sigma2 = ch.sigma2
    margin = opts.margin

    m = np.asarray(scenario.m0, dtype=float).copy()
    op = coupled_operator(m, Xi, F, margin)
    Hbar = effective_channels(ch.h, op.M)
    if scenario.V0 is None:
        V = matched_filter_precoders(Hbar, scenario.P_BS)
    else:
        V = np.asarray(scenario.V0, dtype=complex).copy()
    if opts.rhs_in_precoder and P_RHS is not None:
        p0 = rhs_power(op.M, V, eta)
        if p0 > P_RHS:
            V = V * np.sqrt(P_RHS / p0 * (1.0 - 1e-12))

    def rhs_mats(op_):
        if not (opts.rhs_in_precoder and P_RHS is not None):
            return None
        MH = np.conj(np.swapaxes(op_.M, 1, 2))
        return eta * (MH @ op_.M), P_RHS

    def design_J(m_):
        try:
            _, Hb, gam, p = _evaluate(ch, m_, Xi, F, V, eta, margin)
        except IllConditionedCouplingError:
            return np.inf, np.inf
        return objectives(gam, B_g)[1], p

    trace = SolverTrace()
    t0 = time.perf_counter()

    def record(it, lam, mu, step_norm, backtracks, restored):
        if same_eval:
            gam, p = sinr(Hbar, V, sigma2), rhs_power(op.M, V, eta)
        else:
            _, _, gam, p = _evaluate(ch, m, Xi_eval, F, V, eta, margin)
        rate, J = objectives(gam, B_g)
        trace.append(IterationRecord(
            iteration=it, sum_rate_bps=rate, sum_se_bpshz=rate / B_g, J=J,
            rhs_power=p, lam=lam, mu=mu, step_norm=step_norm,
            backtracks=backtracks, restored=restored,
            wall_ms=1e3 * (time.perf_counter() - t0), bs_power=total_power(V)))

    record(0, 0.0, 0.0, 0.0, 0, False)
    J_prev = objectives(sinr(Hbar, V, sigma2), B_g)[1]
    precoders = PrecoderSet(V, total_power(V))

    for it in range(1, opts.max_iter + 1):
        eq = mmse_update(Hbar, V, sigma2)
        A, B = precoder_qp_assemble(Hbar, eq)
        if not np.any(B):
            # g = 0 everywhere is a trivial WMMSE fixed point; restart from matched filters
            V = matched_filter_precoders(Hbar, scenario.P_BS)
            precoders = PrecoderSet(V, total_power(V))
        else:
            precoders, _ = precoder_update(A, B, scenario.P_BS, opts.bisection_tol,
                                           rhs_mats(op))
            V = precoders.V

        step_norm, backtracks, restored = 0.0, 0, False
        if opts.update_hologram:
            if opts.variant == "freeze":
                qp = hologram_qp_freeze_assemble(ch, op, F, eq, V)
            else:
                qp = hologram_qcqp_jacobian_assemble(ch, op, Xi, F, eq, V)
            J_ref = objectives(sinr(Hbar, V, sigma2), B_g)[1]
            step = hologram_step(qp, m, P_RHS, eta, opts, design_J, J_ref)
            step_norm = float(np.linalg.norm(step.m - m))
            backtracks, restored = step.backtracks, step.restored
            if step_norm > 0:
                m = step.m
                op = coupled_operator(m, Xi, F, margin)
                Hbar = effective_channels(ch.h, op.M)

        record(it, precoders.lam, precoders.mu, step_norm, backtracks, restored)
        J = objectives(sinr(Hbar, V, sigma2), B_g)[1]
        if abs(J_prev - J) / max(1.0, abs(J_prev)) < opts.stop_threshold:
            break
        J_prev = J

    return HologramState(m), precoders, trace
