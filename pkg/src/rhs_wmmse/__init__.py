"""Coupling-aware joint hologram and precoder design for wideband RHS MU-MIMO."""

from __future__ import annotations

from .baselines import SCHEMES, Scheme, run_scheme, uniform_hologram, zf_precoders
from .channel import (
    AbsorptionModel,
    ChannelSet,
    SubbandPlan,
    UserLocation,
    build_channels,
    subband_centers,
)
from .config import SystemConfig, build_system, load_config
from .em_coupling import (
    ArrayGeometry,
    CouplingConfig,
    CouplingMatrix,
    MediumParams,
    build_coupling,
    green_field,
)
from .exceptions import (
    ConfigError,
    IllConditionedCouplingError,
    InvalidArgumentError,
    NumericFailure,
    RankDeficiencyError,
    RHSError,
    SingularityError,
)
from .rhs_operator import (
    FeedConfig,
    HologramState,
    build_feed_matrix,
    coupled_operator,
    init_hologram_hdma,
    operator_jacobian,
)
from .wmmse import Scenario, SolverOptions, bcd_solve

__version__ = "0.1.0"
