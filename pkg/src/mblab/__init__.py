"""Exact-diagonalization laboratory for many-body localization with an embedded thermal region."""

__version__ = "0.1.0"
