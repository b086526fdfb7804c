"""Mutual coupling between RHS elements modeled as magnetic dipoles.

Free-space coupling comes from the homogeneous-medium magnetic-dipole Green's
field, projected onto the common dipole orientation.  Guided/surface-wave
coupling uses an exponentially decaying travelling-wave model along the feed
direction.  Both parts are optionally rescaled to a target aggregate strength
``xi = |sum(Xi)| / N`` before being summed.

All units are SI.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidArgumentError, SingularityError

MIN_SEPARATION = 1e-6  # m


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MediumParams:
    """Homogeneous propagation medium."""

    mu: float = 4e-7 * np.pi
    eps: float = 8.854187817e-12
    c0: float = 2.99792458e8

    def __post_init__(self):
        if not (self.mu > 0 and self.eps > 0 and self.c0 > 0):
            raise InvalidArgumentError("medium parameters must be positive")

    @classmethod
    def free_space(cls) -> "MediumParams":
        return cls()

    @property
    def speed(self) -> float:
        """Phase velocity ``1/sqrt(mu*eps)``."""
        return 1.0 / np.sqrt(self.mu * self.eps)

    def wavelength(self, f: float) -> float:
        return self.c0 / f


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Element and feeder placement of a holographic surface.

    ``element_positions`` is (N, 3), ``feeder_positions`` is (L, 3).  Elements
    are expected to be ordered along the feeding direction.
    """

    element_positions: np.ndarray
    feeder_positions: np.ndarray
    spacing: float
    orientation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.element_positions, dtype=float))
        feed = np.atleast_2d(np.asarray(self.feeder_positions, dtype=float))
        if pos.shape[-1] != 3 or feed.shape[-1] != 3:
            raise InvalidArgumentError("positions must be 3-vectors")
        if pos.shape[0] < 1:
            raise InvalidArgumentError("at least one element is required")
        e = np.asarray(self.orientation, dtype=float)
        norm = np.linalg.norm(e)
        if e.shape != (3,) or norm == 0:
            raise InvalidArgumentError("dipole orientation must be a nonzero 3-vector")
        if pos.shape[0] > 1:
            diff = pos[:, None, :] - pos[None, :, :]
            dist = np.linalg.norm(diff, axis=-1)
            np.fill_diagonal(dist, np.inf)
            if dist.min() < MIN_SEPARATION:
                raise SingularityError(
                    f"element separation {dist.min():.3g} m below {MIN_SEPARATION} m"
                )
        object.__setattr__(self, "element_positions", pos)
        object.__setattr__(self, "feeder_positions", feed)
        object.__setattr__(self, "orientation", e / norm)

    @classmethod
    def ula(cls, N: int, d: float, L: int = 1, feeder_spacing: float | None = None,
            orientation=(0.0, 0.0, 1.0)) -> "ArrayGeometry":
        """Uniform linear array along x, centred at the origin.

        Element ``n`` sits at ``x = (n - (N+1)/2) * d``.  Feeders are centred
        the same way with their own spacing (defaults to ``d``).
        """
        if N < 1 or L < 1:
            raise InvalidArgumentError("N and L must be >= 1")
        if d <= 0:
            raise InvalidArgumentError("spacing d must be positive")
        fs = d if feeder_spacing is None else feeder_spacing
        pos = np.zeros((N, 3))
        pos[:, 0] = index_offsets(N) * d
        feed = np.zeros((L, 3))
        feed[:, 0] = index_offsets(L) * fs
        return cls(pos, feed, d, np.asarray(orientation, dtype=float))

    @property
    def N(self) -> int:
        return self.element_positions.shape[0]

    @property
    def L(self) -> int:
        return self.feeder_positions.shape[0]

    @property
    def offsets(self) -> np.ndarray:
        """Relative index positions ``delta_n = n - (N+1)/2``."""
        return index_offsets(self.N)


def index_offsets(N: int) -> np.ndarray:
    return np.arange(1, N + 1) - (N + 1) / 2.0


@dataclass(frozen=True)
class CouplingConfig:
    """Surface-wave model parameters and optional rescale targets.

    ``distance_mode`` selects how the guided distance ``s`` is measured:
    ``"index"`` uses ``|n' - n|`` (alpha/beta per element step), ``"physical"``
    uses ``|n' - n| * d`` in metres.
    """

    rho_plus: complex = 1.0
    rho_minus: complex = 1.0
    alpha_wg: float = 0.15
    beta_wg: float = 1.0
    target_xi_fs: float | None = None
    target_xi_wg: float | None = None
    distance_mode: str = "index"

    def __post_init__(self):
        if self.alpha_wg < 0:
            raise InvalidArgumentError("alpha_wg must be >= 0")
        for name in ("target_xi_fs", "target_xi_wg"):
            val = getattr(self, name)
            if val is not None and val < 0:
                raise InvalidArgumentError(f"{name} must be >= 0")
        if self.distance_mode not in ("index", "physical"):
            raise InvalidArgumentError("distance_mode must be 'index' or 'physical'")


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Per-subband coupling decomposition, arrays shaped (U, N, N)."""

    fs: np.ndarray
    wg: np.ndarray
    total: np.ndarray
    xi_fs: np.ndarray
    xi_wg: np.ndarray

    @property
    def U(self) -> int:
        return self.total.shape[0]

    @classmethod
    def zeros(cls, U: int, N: int) -> "CouplingMatrix":
        z = np.zeros((U, N, N), dtype=complex)
        return cls(z, z.copy(), z.copy(), np.zeros(U), np.zeros(U))


# ---------------------------------------------------------------------------
# Field and coupling operations
# ---------------------------------------------------------------------------

def wavenumber(f: float, medium: MediumParams | None = None) -> float:
    """Wavenumber ``2*pi*f*sqrt(mu*eps)`` in rad/m."""
    medium = medium or MediumParams()
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise InvalidArgumentError("frequency must be positive")
    k = 2.0 * np.pi * f * np.sqrt(medium.mu * medium.eps)
    return float(k) if k.ndim == 0 else k


def green_field_terms(r_src, r_obs, e_m, f, medium=None):
    """Split the dipole field into its radiating and near/induction parts.

    Returns ``(radiating, near)``; both already carry the spherical factor
    ``exp(-jkR)/(4*pi*R)`` so that ``green_field = radiating + near``.
    """
    k = wavenumber(f, medium)
    R_vec = np.asarray(r_obs, dtype=float) - np.asarray(r_src, dtype=float)
    R = np.linalg.norm(R_vec)
    if R == 0:
        raise SingularityError("observation point coincides with the source")
    R_hat = R_vec / R
    e = np.asarray(e_m, dtype=float)
    pref = np.exp(-1j * k * R) / (4.0 * np.pi * R)
    transverse = np.cross(R_hat, np.cross(e, R_hat))
    angular = 3.0 * R_hat * np.dot(R_hat, e) - e
    radiating = pref * k**2 * transverse
    near = pref * (1.0 / R**2 - 1j * k / R) * angular
    return radiating, near


def green_field(r_src, r_obs, e_m, f, medium=None) -> np.ndarray:
    """Magnetic field at ``r_obs`` of a unit magnetic dipole at ``r_src``."""
    radiating, near = green_field_terms(r_src, r_obs, e_m, f, medium)
    return radiating + near


def coupling_fs(geometry: ArrayGeometry, f: float, medium=None) -> np.ndarray:
    """Free-space coupling ``[Xi]_{n',n} = e_m . H(r_n', r_n)``, zero diagonal."""
    k = wavenumber(f, medium)
    pos = geometry.element_positions
    N = pos.shape[0]
    out = np.zeros((N, N), dtype=complex)
    if N == 1:
        return out
    diff = pos[:, None, :] - pos[None, :, :]
    R = np.linalg.norm(diff, axis=-1)
    off = ~np.eye(N, dtype=bool)
    if np.any(R[off] == 0):
        raise SingularityError("duplicate element positions")
    Rs = R[off]
    cos_t = (diff[off] @ geometry.orientation) / Rs
    # e.(R x (e x R)) = 1 - cos^2 ; e.(3R(R.e) - e) = 3cos^2 - 1
    bracket = k**2 * (1.0 - cos_t**2) + (1.0 / Rs**2 - 1j * k / Rs) * (3.0 * cos_t**2 - 1.0)
    out[off] = np.exp(-1j * k * Rs) / (4.0 * np.pi * Rs) * bracket
    return out


def coupling_wg(geometry: ArrayGeometry, f: float, config: CouplingConfig) -> np.ndarray:
    """Guided-wave coupling, forward (n' > n) and reverse (n' < n) strengths.

    ``f`` is accepted for interface symmetry; the model parameters are treated
    as frequency-flat.
    """
    N = geometry.N
    idx = np.arange(N)
    steps = np.abs(idx[:, None] - idx[None, :]).astype(float)
    s = steps if config.distance_mode == "index" else steps * geometry.spacing
    decay = np.exp(-(config.alpha_wg + 1j * config.beta_wg) * s)
    lower = idx[:, None] > idx[None, :]
    upper = idx[:, None] < idx[None, :]
    out = np.zeros((N, N), dtype=complex)
    out[lower] = config.rho_plus * decay[lower]
    out[upper] = config.rho_minus * decay[upper]
    return out


def coupling_strength(xi: np.ndarray) -> np.ndarray:
    """Aggregate strength ``|sum of entries| / N`` (per leading batch index)."""
    xi = np.asarray(xi)
    N = xi.shape[-1]
    return np.abs(xi.sum(axis=(-2, -1))) / N


def _rescale(mat: np.ndarray, target: float | None, name: str) -> np.ndarray:
    if target is None:
        return mat
    current = coupling_strength(mat)
    scale = np.zeros_like(current)
    nonzero = current > 0
    if target > 0 and not np.all(nonzero):
        raise InvalidArgumentError(f"cannot rescale an all-zero {name} matrix to {target}")
    scale[nonzero] = target / current[nonzero]
    return mat * scale[..., None, None]


def assemble_coupling(fs: np.ndarray, wg: np.ndarray, config: CouplingConfig) -> CouplingMatrix:
    """Rescale the parts to their targets and sum them.

    Accepts single (N, N) matrices or stacks (U, N, N); the result is always
    stacked.
    """
    fs = np.asarray(fs, dtype=complex)
    wg = np.asarray(wg, dtype=complex)
    if fs.shape != wg.shape or fs.shape[-1] != fs.shape[-2]:
        raise InvalidArgumentError("fs and wg must be square and of equal shape")
    if fs.ndim == 2:
        fs, wg = fs[None], wg[None]
    fs = _rescale(fs, config.target_xi_fs, "fs")
    wg = _rescale(wg, config.target_xi_wg, "wg")
    return CouplingMatrix(fs=fs, wg=wg, total=fs + wg,
                          xi_fs=coupling_strength(fs), xi_wg=coupling_strength(wg))


def build_coupling(geometry: ArrayGeometry, freqs, config: CouplingConfig,
                   medium=None) -> CouplingMatrix:
    """Coupling matrices for every subband centre in ``freqs``."""
    freqs = np.atleast_1d(freqs)
    fs = np.stack([coupling_fs(geometry, f, medium) for f in freqs])
    wg = np.stack([coupling_wg(geometry, f, config) for f in freqs])
    return assemble_coupling(fs, wg, config)


# ---------------------------------------------------------------------------
# Far-field patterns
# ---------------------------------------------------------------------------

def azimuth_cut(step_deg: float = 1.0, start_deg: float = 0.0,
                stop_deg: float = 180.0) -> np.ndarray:
    """(theta, phi) grid in radians on the theta = 90 deg plane."""
    phi = np.deg2rad(np.arange(start_deg, stop_deg + 0.5 * step_deg, step_deg))
    return np.column_stack([np.full_like(phi, np.pi / 2), phi])


def far_field_pattern(p, geometry: ArrayGeometry, f: float, angle_grid,
                      medium=None, floor_db: float = -300.0) -> np.ndarray:
    """Normalized radiated power pattern of dipole moments ``p`` in dB.

    ``p`` is an N-vector, or an (N, K) matrix of independent streams whose
    powers add.  The peak over ``angle_grid`` is 0 dB.
    """
    p = np.asarray(p, dtype=complex)
    if p.ndim == 1:
        p = p[:, None]
    if not np.any(np.abs(p) > 0):
        raise InvalidArgumentError("dipole moments are all zero")
    grid = np.atleast_2d(np.asarray(angle_grid, dtype=float))
    theta, phi = grid[:, 0], grid[:, 1]
    r_hat = np.column_stack([np.sin(theta) * np.cos(phi),
                             np.sin(theta) * np.sin(phi),
                             np.cos(theta)])
    e = geometry.orientation
    element = np.linalg.norm(e[None, :] - (r_hat @ e)[:, None] * r_hat, axis=1)
    k = wavenumber(f, medium)
    steer = np.exp(1j * k * (r_hat @ geometry.element_positions.T))  # (G, N)
    power = np.sum(np.abs(steer @ p) ** 2, axis=1) * element**2
    peak = power.max()
    if peak <= 0:
        raise InvalidArgumentError("pattern vanishes on the whole grid")
    rel = np.maximum(power / peak, 10.0 ** (floor_db / 10.0))
    return 10.0 * np.log10(rel)
