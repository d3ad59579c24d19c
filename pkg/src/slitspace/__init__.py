"""Finite-level slit carpets, slit Menger complexes and discrete modulus."""

__version__ = "0.1.0"
