"""Simulation and verification of constant-time distributed algorithms on bounded-degree graphs."""

__version__ = "0.1.0"
