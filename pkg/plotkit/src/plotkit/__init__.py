"""Figures from simulator run directories: dots are simulation samples,
lines are the closed-form overlays recorded in each run's summary."""

__version__ = "0.1.0"
