"""Exact computer algebra for polarized star products on polynomial Darboux charts.

Everything is computed over exact rationals (optionally Gaussian rationals)
with formal-parameter series truncated at a configured order, so that the
structural identities of the construction can be asserted as exact equalities.
"""

from polariz.core.poly import BasePoly, parse_poly
from polariz.core.series import TruncSeries, SeriesMatrix, invert_series_matrix
from polariz.core.scalars import GaussRat

__all__ = [
    "BasePoly",
    "parse_poly",
    "TruncSeries",
    "SeriesMatrix",
    "invert_series_matrix",
    "GaussRat",
]

__version__ = "0.1.0"
