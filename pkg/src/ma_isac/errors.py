"""Exception types shared across the package."""


class MaIsacError(Exception):
    """Base class for all package-specific errors."""


class InfeasibleLayoutError(MaIsacError):
    """A requested antenna layout cannot be placed inside its region."""


class SingularGeometryError(MaIsacError):
    """Geometry degenerate for the requested operation (e.g. colinear array)."""


class SingularChannelError(MaIsacError):
    """Channel Gram matrix is rank deficient or too ill-conditioned to invert."""


class InvalidWaveformError(MaIsacError):
    """Probing waveform parameters cannot yield a row-orthogonal matrix."""


class DegenerateAxisError(MaIsacError):
    """Fixed-axis coordinates have zero variance, so the constraint
    linearization is undefined."""


class LinearizationError(MaIsacError):
    """Linearization anchor is invalid (e.g. coincident antennas)."""


class InfeasibleThresholdError(MaIsacError):
    """Requested sensing accuracy threshold cannot be met inside the region."""


class ConfigError(MaIsacError):
    """Experiment configuration file is malformed or inconsistent."""
