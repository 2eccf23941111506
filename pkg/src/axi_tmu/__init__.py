"""Cycle-level model of an AXI4 transaction monitoring unit with fault injection."""

from .axi_model import CycleSample, Direction, RespCode, read_trace, write_trace
from .config import LogLevel, RegisterFile
from .guard import BudgetConfig, Variant, Verdict
from .harness import (
    ConfigRejected,
    SimConfig,
    SubordinateSpec,
    TrafficSpec,
    lint,
    preset,
    run,
    sweep,
)
from .injector import FaultKind, FaultSpec, Trigger
from .monitor import Tmu

__version__ = "0.1.0"

__all__ = [
    "BudgetConfig",
    "ConfigRejected",
    "CycleSample",
    "Direction",
    "FaultKind",
    "FaultSpec",
    "LogLevel",
    "RegisterFile",
    "RespCode",
    "SimConfig",
    "SubordinateSpec",
    "Tmu",
    "TrafficSpec",
    "Trigger",
    "Variant",
    "Verdict",
    "lint",
    "preset",
    "run",
    "read_trace",
    "sweep",
    "write_trace",
]
