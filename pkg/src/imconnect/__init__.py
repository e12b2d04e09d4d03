"""Exact symbolic verification of compatible connections on coordinate
Lie groupoids and Lie algebroids.

All arithmetic is exact over the rationals; every check reduces to a
structural zero test on canonical polynomials.
"""

from .symkernel import Chart, ScalarFn, PolyMap, parse_poly, format_poly

__all__ = ["Chart", "ScalarFn", "PolyMap", "parse_poly", "format_poly"]
__version__ = "0.1.0"
