"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration, scene file, or argument."""


class SimulationDiverged(RuntimeError):
    """The simulator produced a non-finite state."""


class TrainingError(RuntimeError):
    """A learner produced a non-finite loss or target."""


class IntegrityError(RuntimeError):
    """A replayed trajectory did not reproduce its recorded states."""
