"""Spectra of constant-coefficient operators on localized Sobolev scales."""

from .symbol import SymbolPoly, characteristic_roots, ellipticity, hypoellipticity, transpose_coeffs
from .sobolev import Grid, GridFunction, hs_norm, make_exhaustion, seminorm

__version__ = "0.1.0"
