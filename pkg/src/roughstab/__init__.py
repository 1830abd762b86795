"""Level-2 rough path simulation and stabilization-by-noise verification."""

__version__ = "0.1.0"
