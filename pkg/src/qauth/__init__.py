"""Simulation and verification of the Clifford and trap quantum authentication codes."""

__version__ = "0.1.0"
