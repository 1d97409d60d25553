"""Barotropic flow solvers in characteristic coordinates."""

__version__ = "0.1.0"

__all__ = ["__version__"]
