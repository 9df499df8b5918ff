"""Differential-form calculus on matrix-valued polynomial forms.

Two-forms are stored as antisymmetric SeriesMatrix coefficients; one-forms as
component lists.  The wedge and exterior-derivative orientation is pinned so
that for the standard chart w = sum_i wedge(df_i, da_i) reproduces the
symplectic coefficient matrix, and d(one_form(f dg)) = wedge(df, dg).
"""

from __future__ import annotations

from fractions import Fraction

from polariz.core.poly import BasePoly
from polariz.core.series import TruncSeries, SeriesMatrix, SeriesError


def wedge_one_forms(alpha, beta, dim, n_t) -> SeriesMatrix:
    """Wedge of two one-forms (component lists) as an antisymmetric matrix.

    Orientation pin: entry (i, j) is alpha_j*beta_i - alpha_i*beta_j.
    """
    out = SeriesMatrix(dim, dim, n_t)
    for i in range(dim):
        for j in range(dim):
            out.entries[i][j] = alpha[j] * beta[i] - alpha[i] * beta[j]
    return out


def d_of_one_form(lam, dim, n_t) -> SeriesMatrix:
    """Exterior derivative of a one-form, oriented to match wedge_one_forms."""
    out = SeriesMatrix(dim, dim, n_t)
    for i in range(dim):
        for j in range(dim):
            out.entries[i][j] = lam[i].derive(j) - lam[j].derive(i)
    return out


def two_form_is_closed(m: SeriesMatrix) -> bool:
    """Cyclic derivative check; orientation-independent."""
    dim = m.size
    for i in range(dim):
        for j in range(i + 1, dim):
            for k in range(j + 1, dim):
                s = (m.entries[j][k].derive(i)
                     + m.entries[k][i].derive(j)
                     + m.entries[i][j].derive(k))
                if not s.is_zero():
                    return False
    return True


def two_form_closedness_witness(m: SeriesMatrix):
    """First nonzero cyclic-derivative entry, or None when closed."""
    dim = m.size
    for i in range(dim):
        for j in range(i + 1, dim):
            for k in range(j + 1, dim):
                s = (m.entries[j][k].derive(i)
                     + m.entries[k][i].derive(j)
                     + m.entries[i][j].derive(k))
                if not s.is_zero():
                    return (i, j, k, s)
    return None


def _radial_scale(p: BasePoly, extra: int) -> BasePoly:
    """Termwise division by (total degree + extra)."""
    out = {}
    for e, c in p.terms.items():
        out[e] = c / Fraction(sum(e) + extra)
    return BasePoly(p.dim, out)


def poincare_primitive_two_form(m: SeriesMatrix) -> list:
    """One-form lam with d_of_one_form(lam) == m, for closed m (all variables).

    Standard radial homotopy evaluated termwise with exact rational weights;
    the caller's orientation matches d_of_one_form.
    """
    if not two_form_is_closed(m):
        raise SeriesError("two-form is not closed; no primitive exists")
    dim, n_t = m.size, m.n_t
    lam = [TruncSeries.zero(dim, n_t) for _ in range(dim)]
    # lam_i(x) = sum_j x_j * int_0^1 s * m_ij(s x) ds  (termwise 1/(deg+2)),
    # with the index order fixed by the pinned orientation of d_of_one_form.
    for i in range(dim):
        acc = [BasePoly.zero(dim) for _ in range(n_t + 1)]
        for j in range(dim):
            entry = m.entries[i][j]
            for k, p in enumerate(entry.coeffs):
                if p.is_zero():
                    continue
                xj = BasePoly.variable(dim, j)
                acc[k] = acc[k] + _radial_scale(p, 2) * xj
        lam[i] = TruncSeries(dim, n_t, acc)
    check = d_of_one_form(lam, dim, n_t)
    if not (check - m).is_zero():
        raise SeriesError("radial homotopy failed to produce a primitive")
    return lam


def poincare_primitive_one_form(lam, dim, n_t) -> TruncSeries:
    """Function u with du = lam for a closed one-form (du_i = derive(i))."""
    for i in range(dim):
        for j in range(i + 1, dim):
            if not (lam[i].derive(j) - lam[j].derive(i)).is_zero():
                raise SeriesError("one-form is not closed; no primitive exists")
    acc = [BasePoly.zero(dim) for _ in range(n_t + 1)]
    for i in range(dim):
        for k, p in enumerate(lam[i].coeffs):
            if p.is_zero():
                continue
            xi = BasePoly.variable(dim, i)
            acc[k] = acc[k] + _radial_scale(p, 1) * xi
    u = TruncSeries(dim, n_t, acc)
    for i in range(dim):
        if not (u.derive(i) - lam[i]).is_zero():
            raise SeriesError("radial homotopy failed on the one-form")
    return u
