"""Damped coupled Gear-Grimshaw KdV system on a truncated half-line."""

from .core import (DampingProfile, DiagnosticsRecord, Grid, ModelParams, State,
                   Trajectory, WeightConfig, validate)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DampingProfile",
    "DiagnosticsRecord",
    "Grid",
    "ModelParams",
    "State",
    "Trajectory",
    "WeightConfig",
    "validate",
]
