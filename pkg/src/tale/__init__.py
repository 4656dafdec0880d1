"""Numerical tools for spin orbifolds, ALE ends and twistor spinors."""

__version__ = "0.1.0"
