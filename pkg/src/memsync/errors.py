"""Exception types raised by the model and its drivers."""


class MemsyncError(Exception):
    """Base class for all memsync-specific errors."""


class UndefinedConditionalError(MemsyncError):
    """A conditional distribution was requested for a zero-probability condition."""


class BeliefRootError(MemsyncError):
    """The belief consistency polynomial could not be solved to tolerance."""


class DegenerateChainError(MemsyncError):
    """The transfer matrix has no unique steady state."""


class ConvergenceError(MemsyncError):
    """Steady-state iteration did not reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class FidelityUndefinedError(MemsyncError):
    """A fidelity denominator is zero or negative."""


class ThresholdError(MemsyncError):
    """No emission parameter satisfies the requested fidelity threshold."""


class ConfigError(MemsyncError):
    """Invalid experiment configuration; the message carries the key path."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
