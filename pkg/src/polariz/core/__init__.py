"""Exact arithmetic substrate: scalars, polynomials, truncated series, linear solving."""
