"""Wideband subband plan and near/far-field line-of-sight channels.

Users are described by ``(r, theta)`` relative to the array centre, with
``theta`` measured from the array axis.  The unified near/far-field
parameterization uses the directional cosine ``psi = cos(theta)`` and the
curvature ``nu = (1 - psi**2) / r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .em_coupling import ArrayGeometry, MediumParams, wavenumber
from .exceptions import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class SubbandPlan:
    f_c: float
    B: float
    U: int
    B_g: float
    centers: np.ndarray


def subband_centers(f_c: float, B: float, U: int) -> SubbandPlan:
    """Split ``B`` into ``U`` equal subbands centred on ``f_c``."""
    if U < 1:
        raise InvalidArgumentError("U must be >= 1")
    if B <= 0:
        raise InvalidArgumentError("bandwidth must be positive")
    if f_c <= B / 2:
        raise InvalidArgumentError("carrier must exceed half the bandwidth")
    B_g = B / U
    u = np.arange(1, U + 1)
    centers = f_c + (u - (U + 1) / 2.0) * B_g
    return SubbandPlan(f_c=f_c, B=B, U=U, B_g=B_g, centers=centers)


@dataclass(frozen=True)
class UserLocation:
    r: float
    theta: float  # rad, from the array axis

    def __post_init__(self):
        if not self.r > 0:
            raise InvalidArgumentError("user distance must be positive")

    @classmethod
    def from_degrees(cls, r: float, theta_deg: float) -> "UserLocation":
        return cls(r, float(np.deg2rad(theta_deg)))

    @property
    def psi(self) -> float:
        return float(np.cos(self.theta))

    @property
    def nu(self) -> float:
        return (1.0 - self.psi**2) / self.r


def user_params(r: float, theta: float) -> tuple[float, float]:
    """Directional cosine and curvature of a user at ``(r, theta)``."""
    if r <= 0:
        raise InvalidArgumentError("user distance must be positive")
    psi = float(np.cos(theta))
    return psi, (1.0 - psi**2) / r


@dataclass(frozen=True)
class AbsorptionModel:
    """Molecular absorption coefficient (1/m), constant or frequency dependent."""

    kappa: float | Callable[[float], float] = 0.1

    def __call__(self, f) -> float:
        val = self.kappa(f) if callable(self.kappa) else self.kappa
        if np.any(np.asarray(val) < 0):
            raise InvalidArgumentError("absorption coefficient must be >= 0")
        return val


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Channel rows ``h`` shaped (U, K, N) and noise powers (U, K).

    ``h[u, k]`` is the row ``h_{k,u}`` of user k on subband u.
    """

    h: np.ndarray
    sigma2: np.ndarray
    users: tuple
    plan: SubbandPlan

    @property
    def K(self) -> int:
        return self.h.shape[1]

    @property
    def N(self) -> int:
        return self.h.shape[2]

    def row(self, k: int, u: int) -> np.ndarray:
        return self.h[u, k]


def path_difference(geometry: ArrayGeometry, psi: float, nu: float) -> np.ndarray:
    """Second-order expansion of ``r_{k,n} - r_k`` along the ULA."""
    x = geometry.offsets * geometry.spacing
    return -x * psi + 0.5 * x**2 * nu


def exact_path_difference(geometry: ArrayGeometry, r: float, theta: float) -> np.ndarray:
    x = geometry.offsets * geometry.spacing
    r_kn = np.sqrt(r**2 + x**2 - 2.0 * r * x * np.cos(theta))
    return r_kn - r


def array_response(geometry: ArrayGeometry, psi: float, nu: float, f: float,
                   medium=None) -> np.ndarray:
    """Unit-norm row ``b_u(psi, nu)`` with entries ``exp(-j k dr_n)/sqrt(N)``."""
    k = wavenumber(f, medium)
    dr = path_difference(geometry, psi, nu)
    return np.exp(-1j * k * dr) / np.sqrt(geometry.N)


def path_gain(r: float, f: float, absorption: AbsorptionModel | None = None,
              medium: MediumParams | None = None) -> complex:
    """LoS gain: spreading, half-power absorption and propagation phase."""
    medium = medium or MediumParams()
    absorption = absorption or AbsorptionModel()
    if np.any(np.asarray(r) <= 0):
        raise InvalidArgumentError("distance must be positive")
    k = wavenumber(f, medium)
    lam = medium.c0 / f
    return lam / (4.0 * np.pi * r) * np.exp(-absorption(f) * r / 2.0) * np.exp(-1j * k * r)


def build_channels(geometry: ArrayGeometry, users: Sequence[UserLocation],
                   plan: SubbandPlan, absorption: AbsorptionModel | None = None,
                   sigma2=1.0, medium=None, exact: bool = False) -> ChannelSet:
    """Channel rows for all users and subbands.

    With ``exact=True`` every element uses its own distance ``r_{k,n}`` for
    both amplitude and phase instead of the common-amplitude expansion.
    """
    users = tuple(users)
    K, U, N = len(users), plan.U, geometry.N
    h = np.empty((U, K, N), dtype=complex)
    for u, f in enumerate(plan.centers):
        for k_idx, user in enumerate(users):
            if exact:
                r_kn = user.r + exact_path_difference(geometry, user.r, user.theta)
                h[u, k_idx] = path_gain(r_kn, f, absorption, medium)
            else:
                beta = path_gain(user.r, f, absorption, medium)
                b = array_response(geometry, user.psi, user.nu, f, medium)
                h[u, k_idx] = beta * np.sqrt(N) * b
    s2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (U, K)).copy()
    if np.any(s2 <= 0):
        raise InvalidArgumentError("noise power must be positive")
    return ChannelSet(h=h, sigma2=s2, users=users, plan=plan)
