"""Spatial evolutionary games: lattice simulation, nonlocal mean-field equations and their stability."""

__version__ = "0.1.0"
