"""Stochastic space-time-frequency channel simulator for indoor optical
wireless links: an LED array transmitting to a moving, possibly rotating
photodetector (single or angle-diversity), with randomly born and dying
scattering clusters driving non-stationary statistics.

The usual entry points are :func:`load_config` / :func:`default_config`,
:meth:`SimulationConfig.build_scene`, :func:`cir_snapshot` for impulse
responses and the :mod:`vlcsim.stats` estimators on top; the packaged
sweeps live in :func:`run_experiment` and behind the ``vlcsim`` command.
"""

from ._version import __version__
from . import errors
from .errors import (
    ConfigMismatchError,
    ConfigParseError,
    ConfigValidationError,
    DegenerateFitError,
    DegenerateNormalError,
    DomainMismatchError,
    EmptyCirError,
    EmptyPatternError,
    InvalidAdrError,
    NegativeOrderError,
    NonPositivePowerError,
    NotNormalizedError,
    OutOfRangeError,
    SingularFrameError,
    TooFewSamplesError,
    UnknownExperimentError,
    VlcSimError,
    ZeroDistanceError,
    ZeroGainError,
    ZeroVectorError,
)
from .geometry import AnglePair, ArrayOrientation
from .optics import LambertianPattern, RxOptics, SpectralCurve, TabulatedPattern, load_pattern
from .scene import (
    Cluster,
    ClusterDistribution,
    EvolutionParams,
    LedArray,
    Receiver,
    Scene,
    build_scene,
    gamma_table,
)
from .channel import (
    SPEED_OF_LIGHT,
    ChannelMatrix,
    Cir,
    RayTap,
    TapKind,
    channel_over_time,
    cir_snapshot,
    db_tap,
    los_tap,
    sb_tap,
)
from .stats import (
    CorrelationSeries,
    Ctf,
    PathLossFit,
    ShadowingStats,
    acf,
    bandwidth_3db,
    ccf,
    ctf,
    dc_gain,
    fcf,
    fit_ci,
    path_loss,
    received_power,
    rms_delay_spread,
    shadowing_stats,
    stfcf,
    transfer,
)
from .config import (
    SimulationConfig,
    config_hash,
    default_config,
    load_config,
    loads_config,
    save_config,
)
from .experiments import (
    PRESETS,
    ResultTable,
    export,
    list_experiments,
    run_experiment,
)

__all__ = [
    "AnglePair",
    "ArrayOrientation",
    "ChannelMatrix",
    "Cir",
    "Cluster",
    "ClusterDistribution",
    "ConfigMismatchError",
    "ConfigParseError",
    "ConfigValidationError",
    "CorrelationSeries",
    "Ctf",
    "DegenerateFitError",
    "DegenerateNormalError",
    "DomainMismatchError",
    "EmptyCirError",
    "EmptyPatternError",
    "EvolutionParams",
    "InvalidAdrError",
    "LambertianPattern",
    "LedArray",
    "NegativeOrderError",
    "NonPositivePowerError",
    "NotNormalizedError",
    "OutOfRangeError",
    "PRESETS",
    "PathLossFit",
    "RayTap",
    "Receiver",
    "ResultTable",
    "RxOptics",
    "SPEED_OF_LIGHT",
    "Scene",
    "ShadowingStats",
    "SimulationConfig",
    "SingularFrameError",
    "SpectralCurve",
    "TabulatedPattern",
    "TapKind",
    "TooFewSamplesError",
    "UnknownExperimentError",
    "VlcSimError",
    "ZeroDistanceError",
    "ZeroGainError",
    "ZeroVectorError",
    "__version__",
    "acf",
    "bandwidth_3db",
    "build_scene",
    "ccf",
    "channel_over_time",
    "cir_snapshot",
    "config_hash",
    "ctf",
    "db_tap",
    "dc_gain",
    "default_config",
    "errors",
    "export",
    "fcf",
    "fit_ci",
    "gamma_table",
    "list_experiments",
    "load_config",
    "load_pattern",
    "loads_config",
    "los_tap",
    "path_loss",
    "received_power",
    "rms_delay_spread",
    "run_experiment",
    "save_config",
    "sb_tap",
    "shadowing_stats",
    "stfcf",
    "transfer",
]
