"""Coupled RHS operator, its Jacobian, and the first-order surrogate.

With hologram amplitudes ``m`` and coupling ``Xi`` the dipole response to a
feeder input ``q`` solves ``p = D(m) (F q + Xi p)``, i.e.

    M(m) = C(m) D(m) F,    C(m) = (I - D(m) Xi)^{-1}.

Functions accept one subband (``Xi`` is (N, N), ``F`` is (N, L)) or a stack
of subbands with a leading axis; the hologram ``m`` is shared by all subbands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .em_coupling import ArrayGeometry, MediumParams, wavenumber
from .exceptions import IllConditionedCouplingError, InvalidArgumentError

DEFAULT_MARGIN = 0.05


@dataclass(frozen=True)
class FeedConfig:
    """Guided reference wave; ``k_s = n_eff * k``."""

    n_eff: float = float(np.sqrt(3.0))

    def __post_init__(self):
        if self.n_eff < 1:
            raise InvalidArgumentError("n_eff must be >= 1")


def build_feed_matrix(geometry: ArrayGeometry, feed: FeedConfig, f,
                      medium: MediumParams | None = None) -> np.ndarray:
    """Reference-wave phases ``F[n, l] = exp(-j n_eff k |r_n - r_l|)``.

    ``f`` may be a scalar (returns (N, L)) or an array of U frequencies
    (returns (U, N, L)).
    """
    path = np.linalg.norm(
        geometry.element_positions[:, None, :] - geometry.feeder_positions[None, :, :],
        axis=-1,
    )
    k = np.asarray(wavenumber(f, medium))
    ks = feed.n_eff * k
    return np.exp(-1j * ks[..., None, None] * path)


@dataclass(frozen=True, eq=False)
class HologramState:
    """Amplitude hologram and the HDMA weights it was built from."""

    m: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if np.any(m < 0) or np.any(m > 1):
            raise InvalidArgumentError("hologram amplitudes must lie in [0, 1]")
        object.__setattr__(self, "m", m)


def hdma_weights(K: int, L: int, weights=None) -> np.ndarray:
    if weights is None:
        return np.full((K, L), 1.0 / (K * L))
    a = np.asarray(weights, dtype=float)
    if a.shape != (K, L):
        raise InvalidArgumentError(f"HDMA weights must have shape {(K, L)}")
    if np.any(a < 0) or abs(a.sum() - 1.0) > 1e-12:
        raise InvalidArgumentError("HDMA weights must be nonnegative and sum to 1")
    return a


def interference_holograms(geometry: ArrayGeometry, thetas, feed: FeedConfig,
                           f_ref: float, medium=None) -> np.ndarray:
    """Per-(user, feeder) holograms ``(cos(k_s rho - k_f . r) + 1)/2``, (K, L, N).

    The object wave is a plane wave in the xy-plane at angle ``theta`` from
    the array axis.
    """
    k = wavenumber(f_ref, medium)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    direction = np.column_stack([np.cos(thetas), np.sin(thetas), np.zeros_like(thetas)])
    obj_phase = k * direction @ geometry.element_positions.T                 # (K, N)
    rho = np.linalg.norm(
        geometry.element_positions[None, :, :] - geometry.feeder_positions[:, None, :],
        axis=-1,
    )                                                                       # (L, N)
    ref_phase = feed.n_eff * k * rho
    return 0.5 * (np.cos(ref_phase[None, :, :] - obj_phase[:, None, :]) + 1.0)


def init_hologram_hdma(geometry: ArrayGeometry, thetas, feed: FeedConfig,
                       f_ref: float, weights=None, medium=None) -> HologramState:
    """Convex HDMA superposition of the per-(user, feeder) holograms."""
    parts = interference_holograms(geometry, thetas, feed, f_ref, medium)
    a = hdma_weights(parts.shape[0], parts.shape[1], weights)
    m = np.einsum("kl,kln->n", a, parts)
    return HologramState(np.clip(m, 0.0, 1.0), a)


# ---------------------------------------------------------------------------
# Coupled operator
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoupledOperator:
    m: np.ndarray
    C: np.ndarray
    M: np.ndarray
    spectral_radius: float


def spectral_radius(m, Xi) -> float:
    """Largest eigenvalue modulus of ``D(m) Xi`` (over all subbands)."""
    DX = np.asarray(m)[:, None] * Xi
    if not np.any(DX):
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(DX))))


def coupled_operator(m, Xi, F, margin: float = DEFAULT_MARGIN) -> CoupledOperator:
    """Solve the induced-dipole system for ``C(m)`` and ``M(m)``."""
    m = np.asarray(m, dtype=float)
    Xi = np.asarray(Xi)
    N = m.shape[0]
    radius = spectral_radius(m, Xi)
    if radius >= 1.0 - margin:
        raise IllConditionedCouplingError(radius, margin)
    A = np.eye(N) - m[:, None] * Xi
    C = np.linalg.inv(A)
    M = C @ (m[:, None] * F)
    return CoupledOperator(m=m, C=C, M=M, spectral_radius=radius)


def operator_jacobian(op: CoupledOperator, Xi, F, n: int) -> np.ndarray:
    """Exact partial derivative ``dM/dm_n = C E_n (Xi M + F)``."""
    N = op.m.shape[0]
    if not 0 <= n < N:
        raise InvalidArgumentError(f"element index {n} out of range [0, {N})")
    T = Xi @ op.M + F
    # only row n of T and column n of C survive E_n
    return op.C[..., :, n:n + 1] * T[..., n:n + 1, :]


@dataclass(frozen=True, eq=False)
class SurrogateOperator:
    """First-order model of ``M`` around an anchor hologram."""

    anchor: np.ndarray
    M: np.ndarray
    C: np.ndarray
    T: np.ndarray


def make_surrogate(op: CoupledOperator, Xi, F) -> SurrogateOperator:
    return SurrogateOperator(anchor=op.m, M=op.M, C=op.C, T=Xi @ op.M + F)


def surrogate_operator(sur: SurrogateOperator, dm) -> np.ndarray:
    """``M_t + C_t D(dm) T_t``; affine in the hologram change ``dm``."""
    dm = np.asarray(dm, dtype=float)
    return sur.M + sur.C @ (dm[:, None] * sur.T)


def rhs_power(M, V, eta: float = 1.0) -> float:
    """Loaded RHS excitation power ``eta * sum_u ||M_u V_u||_F^2``."""
    return float(eta * np.sum(np.abs(np.asarray(M) @ np.asarray(V)) ** 2))
