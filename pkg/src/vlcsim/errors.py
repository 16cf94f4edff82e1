"""Exception types raised by the simulator."""


class VlcSimError(Exception):
    """Base class for all simulator errors."""


# --- geometry ---

class ZeroVectorError(VlcSimError):
    """A direction was requested for a vector with (near-)zero norm."""


class SingularFrameError(VlcSimError):
    """Orientation angles produced a non-invertible transition matrix."""


class InvalidAdrError(VlcSimError):
    """Angle-diversity receiver layout parameters are out of range."""


class DegenerateNormalError(VlcSimError):
    """Cluster center sits on the LoS axis; no equivalent normal exists."""


# --- optics ---

class NegativeOrderError(VlcSimError):
    """Lambertian order must be non-negative."""


class EmptyPatternError(VlcSimError):
    """Tabulated radiation pattern has no positive entries."""


class OutOfRangeError(VlcSimError):
    """Angle argument outside the documented domain."""


class DomainMismatchError(VlcSimError):
    """Reflectance curve does not cover the source spectrum support."""


class NotNormalizedError(VlcSimError):
    """Power spectral density does not integrate to one."""


# --- scene / channel ---

class ZeroDistanceError(VlcSimError):
    """Transmitter and receiver (or scatterer hops) coincide."""


# --- statistics ---

class EmptyCirError(VlcSimError):
    """Operation requires at least one tap."""


class ConfigMismatchError(VlcSimError):
    """Ensemble runs were generated from different scenario parameters."""


class ZeroGainError(VlcSimError):
    """Channel has zero DC gain where a positive gain is required."""


class NonPositivePowerError(VlcSimError):
    """Path loss requires strictly positive transmit and receive power."""


class DegenerateFitError(VlcSimError):
    """Path-loss fit needs at least two distinct distances."""


class TooFewSamplesError(VlcSimError):
    """Not enough residual samples for a meaningful normality check."""


# --- config / cli ---

class ConfigParseError(VlcSimError):
    """Configuration file is not syntactically valid."""


class ConfigValidationError(VlcSimError):
    """Configuration contains unknown keys or out-of-range values."""


class UnknownExperimentError(VlcSimError):
    """Requested experiment preset does not exist."""
