"""Exact Hochschild, cyclic and spectral-sequence computations for crossed products
of polynomial, Weyl and symbol algebras by finite groups."""

__version__ = "0.1.0"
