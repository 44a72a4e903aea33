"""Torque-feedback grasp planning on a planar contact simulator."""

from torquegrasp.errors import ConfigError, IntegrityError, SimulationDiverged, TrainingError

__version__ = "0.1.0"

__all__ = ["ConfigError", "IntegrityError", "SimulationDiverged", "TrainingError", "__version__"]
