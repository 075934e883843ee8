"""Discrete incremental voting on graphs: simulator, exact oracle, bounds."""

__version__ = "0.1.0"
