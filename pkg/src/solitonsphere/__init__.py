"""Soliton spheres: quaternionic holomorphic geometry, Willmore energies and transforms."""

__version__ = "0.1.0"
