"""Mean-field cavity QED simulator for non-destructive molecule detection."""

__version__ = "0.1.0"
