"""Exact linear solving over scalar unknowns by Gaussian elimination.

Systems are lists of (coefficient-map, right-hand side) rows, with hashable
sortable unknown keys.  The solver returns one exact solution with all free
variables set to zero, or an inconsistency report carrying the contradictory
reduced row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from polariz.core.scalars import as_scalar, scalar_inverse, scalar_is_zero


@dataclass
class LinearSolution:
    values: dict
    pivots: list = field(default_factory=list)
    free: list = field(default_factory=list)

    @property
    def consistent(self):
        return True


@dataclass
class Inconsistency:
    row_index: int
    reduced_row: dict
    rhs: object

    @property
    def consistent(self):
        return False


def solve_linear(rows):
    """Solve a finite exact linear system.

    `rows` is an iterable of (coeffs, rhs) with coeffs a mapping from unknown
    keys to scalars.  Returns LinearSolution or Inconsistency.
    """
    rows = [({k: as_scalar(v) for k, v in coeffs.items() if not scalar_is_zero(as_scalar(v))},
             as_scalar(rhs)) for coeffs, rhs in rows]
    variables = sorted({k for coeffs, _ in rows for k in coeffs}, key=repr)
    var_pos = {k: i for i, k in enumerate(variables)}
    nvars = len(variables)

    work = []
    for coeffs, rhs in rows:
        vec = [Fraction(0)] * nvars
        for k, v in coeffs.items():
            vec[var_pos[k]] = v
        work.append((vec, rhs))

    pivots = []  # (row, col)
    row_at = 0
    for col in range(nvars):
        sel = None
        for r in range(row_at, len(work)):
            if not scalar_is_zero(work[r][0][col]):
                sel = r
                break
        if sel is None:
            continue
        work[row_at], work[sel] = work[sel], work[row_at]
        vec, rhs = work[row_at]
        inv = scalar_inverse(vec[col])
        vec = [v * inv for v in vec]
        rhs = rhs * inv
        work[row_at] = (vec, rhs)
        for r in range(len(work)):
            if r == row_at:
                continue
            f = work[r][0][col]
            if scalar_is_zero(f):
                continue
            rvec, rrhs = work[r]
            work[r] = ([a - f * b for a, b in zip(rvec, vec)], rrhs - f * rhs)
        pivots.append((row_at, col))
        row_at += 1
        if row_at == len(work):
            break

    for r, (vec, rhs) in enumerate(work):
        if all(scalar_is_zero(v) for v in vec) and not scalar_is_zero(rhs):
            return Inconsistency(row_index=r, reduced_row={}, rhs=rhs)

    values = {k: Fraction(0) for k in variables}
    pivot_cols = set()
    for r, col in pivots:
        values[variables[col]] = work[r][1]
        pivot_cols.add(col)
    free = [variables[c] for c in range(nvars) if c not in pivot_cols]
    return LinearSolution(values=values,
                          pivots=[variables[c] for _, c in pivots],
                          free=free)
