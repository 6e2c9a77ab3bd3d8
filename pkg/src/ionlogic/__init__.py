"""Simulation and energy accounting for reversible logic on a magnetically coupled trapped-ion chain."""

__version__ = "0.1.0"
