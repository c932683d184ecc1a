"""Rotor-connection representation of the Regge action on simplicial lattices."""

__version__ = "0.1.0"
