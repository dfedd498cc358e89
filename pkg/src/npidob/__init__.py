"""Closed-loop simulation and stability certificates for a PMSM motion controller
with nonlinear PI disturbance observers in the load-torque and current loops."""

from .config import (ControllerVariant, GainSet, MotorParams, Scenario, TimingConfig,
                     bundled_config, dump_config, load_config, read_config)
from .plant import MotorState, PlantInputs
from .simulation import COLUMNS, LogRecord, Trajectory, run_scenario

__version__ = "0.1.0"

__all__ = [
    "COLUMNS", "ControllerVariant", "GainSet", "LogRecord", "MotorParams", "MotorState",
    "PlantInputs", "Scenario", "TimingConfig", "Trajectory", "bundled_config",
    "dump_config", "load_config", "read_config", "run_scenario",
]
