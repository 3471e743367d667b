"""Kosmann lifts and Lie derivatives of Lorentz tensors, checked numerically on concrete spacetimes."""

__version__ = "0.1.0"
