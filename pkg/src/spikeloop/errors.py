"""Exception types shared across the package."""


class SpikeloopError(Exception):
    """Base class for all package errors."""


class NumericFault(SpikeloopError):
    """A non-finite value (NaN/inf) appeared in simulation state or input."""


class ConfigurationError(SpikeloopError):
    """A configuration value violates an invariant."""


class AnalysisError(SpikeloopError):
    """An analysis routine received malformed or insufficient data."""
