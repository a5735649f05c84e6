"""Harmonic-oscillator analysis of the Tsirelson precession inequality."""
from .hilbert import FockVector, EnergyOperator
from .tsirelson import MeasurementSchedule, DEFAULT_SCHEDULE, SCA_SCHEDULE

__version__ = "0.1.0"

__all__ = ["FockVector", "EnergyOperator", "MeasurementSchedule", "DEFAULT_SCHEDULE", "SCA_SCHEDULE"]
