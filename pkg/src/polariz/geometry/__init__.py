"""Polynomial Darboux charts: symplectic data, solvers, frames, connections."""
