"""Exact homotopy solvers for the polarization complex and the O-de Rham complex.

The polarization complex is generated by the commuting derivations
L_i = {a_i, .}; on a chart in conjugate coordinates these reduce at t^0 to
constant combinations of the last-block partials, solved by a scaling
homotopy with exact rational weights.  When the t^0 derivation matrix is not
constant the solver falls back to an exact bounded-degree linear ansatz.

O-forms live in the first-block (a-frame) variables only; their de Rham
complex is solved by the standard radial homotopy.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from polariz.core.poly import BasePoly
from polariz.core.series import TruncSeries, SeriesError, scalar_matrix_inverse
from polariz.core.linalg import solve_linear


class SolveError(ValueError):
    pass


# -- the polarization complex -------------------------------------------------


class PolarizationComplex:
    """Commuting derivations L_1..L_n with full coordinate coefficient rows.

    L_i(u) = sum_j rows[i][j] * du/dx_j over all coordinates.  The fast
    homotopy path applies when at t^0 the rows involve only the conjugate
    (last n) block with constant invertible coefficients.
    """

    def __init__(self, dim: int, n_t: int, rows):
        self.dim = dim
        self.n_t = n_t
        self.rows = [list(r) for r in rows]
        self.n = len(self.rows)
        for r in self.rows:
            if len(r) != dim:
                raise SolveError("derivation rows must list all coordinate coefficients")

    def apply(self, i: int, u: TruncSeries) -> TruncSeries:
        acc = TruncSeries.zero(self.dim, self.n_t)
        for j in range(self.dim):
            c = self.rows[i][j]
            if not c.is_zero():
                acc = acc + c * u.derive(j)
        return acc

    def commute_check(self):
        """[L_i, L_j] = 0 exactly; returns an offending pair or None."""
        for i in range(self.n):
            for j in range(i + 1, self.n):
                for k in range(self.dim):
                    lhs = TruncSeries.zero(self.dim, self.n_t)
                    for l in range(self.dim):
                        lhs = (lhs + self.rows[i][l] * self.rows[j][k].derive(l)
                               - self.rows[j][l] * self.rows[i][k].derive(l))
                    if not lhs.is_zero():
                        return (i, j)
        return None

    def closedness_defect(self, gamma):
        """d-bar of a degree-1 form: dict {(i,j): L_i g_j - L_j g_i} of nonzero entries."""
        out = {}
        for i in range(self.n):
            for j in range(i + 1, self.n):
                d = self.apply(i, gamma[j]) - self.apply(j, gamma[i])
                if not d.is_zero():
                    out[(i, j)] = d
        return out

    def constant_tail_matrix(self):
        """Constant t^0 coefficients over the conjugate block, or None.

        Requires every t^0 row entry outside the last-n block to vanish and
        the block entries to be constant.
        """
        n, dim = self.n, self.dim
        yoff = dim - n
        out = []
        for i in range(n):
            row = []
            for j in range(dim):
                p = self.rows[i][j].coeffs[0]
                if j < yoff:
                    if not p.is_zero():
                        return None
                else:
                    if not p.is_constant():
                        return None
                    row.append(p.constant_value())
            out.append(row)
        return out


def _scaling_homotopy(n, dim, y_offset, cinv, gamma_polys):
    """Primitive for the constant-coefficient system L_i u = gamma_i at one t-order.

    cinv is the inverse of the constant derivation matrix; the homotopy
    integrates radially in the conjugate block with exact termwise weights.
    """
    u = BasePoly.zero(dim)
    for j in range(n):
        tilde = BasePoly.zero(dim)
        for i in range(n):
            if cinv[j][i] != 0 and not gamma_polys[i].is_zero():
                tilde = tilde + gamma_polys[i].scale(cinv[j][i])
        if tilde.is_zero():
            continue
        yj = BasePoly.variable(dim, y_offset + j)
        for e, c in tilde.terms.items():
            ydeg = sum(e[y_offset:])
            u = u + BasePoly(dim, {e: c / Fraction(ydeg + 1)}) * yj
    return u


def dolbeault_solve(cx: PolarizationComplex, gamma, ansatz_slack: int = 2) -> TruncSeries:
    """Solve d-bar u = gamma for a closed degree-1 form (component list).

    Exact, order-by-order in t.  Uses the scaling homotopy when the t^0
    derivation rows are constant over the conjugate block, otherwise a
    bounded-degree linear ansatz (input degree + ansatz_slack).  Raises
    SolveError with the offending two-form when gamma is not closed.
    """
    defect = cx.closedness_defect(gamma)
    if defect:
        (i, j), val = sorted(defect.items())[0]
        raise SolveError(f"form is not closed: (L_{i + 1} g_{j + 1} - L_{j + 1} g_{i + 1}) = {val}")
    dim, n_t, n = cx.dim, cx.n_t, cx.n
    yoff = dim - n
    c0 = cx.constant_tail_matrix()
    if c0 is not None:
        try:
            cinv = scalar_matrix_inverse(c0)
        except SeriesError as exc:
            raise SolveError(f"degenerate polarization pairing at t^0: {exc}")
        u_coeffs = [BasePoly.zero(dim) for _ in range(n_t + 1)]
        for m in range(n_t + 1):
            rhs = [gamma[i].coeffs[m] for i in range(n)]
            for k in range(1, m + 1):
                for i in range(n):
                    for j in range(dim):
                        c = cx.rows[i][j].coeffs[k]
                        if not c.is_zero():
                            rhs[i] = rhs[i] - c * u_coeffs[m - k].derive(j)
            u_coeffs[m] = _scaling_homotopy(n, dim, yoff, cinv, rhs)
        u = TruncSeries(dim, n_t, u_coeffs)
    else:
        u = _ansatz_solve(cx, gamma, ansatz_slack)
    for i in range(n):
        if not (cx.apply(i, u) - gamma[i]).is_zero():
            raise SolveError("homotopy produced an inexact primitive (internal error)")
    return u


def _ansatz_solve(cx: PolarizationComplex, gamma, slack: int) -> TruncSeries:
    """Bounded-degree exact linear solve for d-bar u = gamma."""
    dim, n_t = cx.dim, cx.n_t
    degree = max((g.coeffs[k].total_degree() for g in gamma for k in range(n_t + 1)), default=0)
    degree = max(degree, 0) + slack

    def monomials(d):
        out = []

        def rec(prefix, rem, idx):
            if idx == dim:
                out.append(tuple(prefix))
                return
            for e in range(rem + 1):
                rec(prefix + [e], rem - e, idx + 1)
        rec([], d, 0)
        return out

    monos = [e for d in range(degree + 1) for e in monomials(d) if sum(e) <= degree]
    monos = sorted(set(monos))
    rows = []
    # unknowns: (t_order, monomial) coefficients of u
    for i in range(cx.n):
        # L_i u - gamma_i = 0, coefficient-wise
        table = {}
        for m in range(n_t + 1):
            for e in monos:
                u_mono = BasePoly(dim, {e: Fraction(1)})
                lu = cx.apply(i, TruncSeries.from_poly(u_mono, n_t, m))
                for k in range(n_t + 1):
                    for ee, c in lu.coeffs[k].terms.items():
                        table.setdefault((k, ee), {})[(m, e)] = \
                            table.get((k, ee), {}).get((m, e), Fraction(0)) + c
        keys = set(table)
        for k in range(n_t + 1):
            for ee, c in gamma[i].coeffs[k].terms.items():
                keys.add((k, ee))
        for key in sorted(keys):
            coeffs = table.get(key, {})
            rhs = gamma[i].coeffs[key[0]].terms.get(key[1], Fraction(0))
            rows.append((coeffs, rhs))
    sol = solve_linear(rows)
    if not sol.consistent:
        raise SolveError(
            f"ansatz of degree {degree} insufficient for the polarization system; "
            "raise the slack")
    u_coeffs = [BasePoly.zero(dim) for _ in range(n_t + 1)]
    for (m, e), v in sol.values.items():
        if v != 0:
            u_coeffs[m] = u_coeffs[m] + BasePoly(dim, {e: v})
    return TruncSeries(dim, n_t, u_coeffs)


def extend_flat_function(cx0: PolarizationComplex, deformed_rows, f: BasePoly) -> TruncSeries:
    """Order-by-order flat extension of f against a deformed polarization complex.

    `deformed_rows` gives the full derivation rows including t-corrections;
    row order matches cx0.  f must be killed by the t^0 complex.  Returns f_t
    with every retained t-order of the deformed derivations vanishing on it.
    """
    dim, n_t, n = cx0.dim, cx0.n_t, cx0.n
    cx = PolarizationComplex(dim, n_t, deformed_rows)
    bad = cx.commute_check()
    if bad is not None:
        raise SolveError(f"deformed frame derivations L_{bad[0] + 1}, L_{bad[1] + 1} do not commute")
    f_t = TruncSeries.from_poly(f, n_t)
    for i in range(n):
        if not cx0.apply(i, TruncSeries.from_poly(f, n_t)).coeffs[0].is_zero():
            raise SolveError("seed function is not flat at t^0")
    for order in range(1, n_t + 1):
        resid = [cx.apply(i, f_t) for i in range(n)]
        if all(r.is_zero() for r in resid):
            break
        low = min(r.order() for r in resid if not r.is_zero())
        if low < order:
            raise SolveError(f"residual appeared below the current order (t^{low})")
        if low > n_t:
            break
        gamma = [TruncSeries.from_poly(r.coeffs[low], n_t) for r in resid]
        try:
            u = dolbeault_solve(cx0, gamma)
        except SolveError as exc:
            raise SolveError(f"flat extension failed at order t^{low}: {exc}")
        f_t = f_t - u.t_shift(low)
    resid = [cx.apply(i, f_t) for i in range(n)]
    if not all(r.is_zero() for r in resid):
        raise SolveError("flat extension did not converge within the truncation order")
    return f_t


# -- O-forms and their de Rham complex ------------------------------------------


class OForm:
    """Degree-k form in the first-block variables with O-coefficients.

    Stored as {sorted index tuple (0-based, < n): TruncSeries}; coefficients
    must not involve the conjugate-block variables.
    """

    def __init__(self, n: int, dim: int, n_t: int, degree: int, comps=None):
        self.n = n
        self.dim = dim
        self.n_t = n_t
        self.degree = degree
        self.comps = {}
        if comps:
            for key, val in comps.items():
                self.set(key, val)

    def set(self, key, val: TruncSeries):
        key = tuple(key)
        if len(key) != self.degree or len(set(key)) != self.degree:
            raise SolveError(f"bad index tuple {key} for degree {self.degree}")
        if sorted(key) != list(key):
            raise SolveError("component keys must be sorted; antisymmetrize explicitly")
        if not _is_o_function(val, self.n):
            raise SolveError("O-form coefficients must depend only on the a-frame block")
        if val.is_zero():
            self.comps.pop(key, None)
        else:
            self.comps[key] = val

    def get(self, key) -> TruncSeries:
        return self.comps.get(tuple(key), TruncSeries.zero(self.dim, self.n_t))

    def is_zero(self) -> bool:
        return not self.comps

    def __add__(self, other):
        out = OForm(self.n, self.dim, self.n_t, self.degree)
        keys = set(self.comps) | set(other.comps)
        for k in keys:
            v = self.get(k) + other.get(k)
            if not v.is_zero():
                out.comps[k] = v
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        out = OForm(self.n, self.dim, self.n_t, self.degree)
        for k, v in self.comps.items():
            s = v.scale(c) if isinstance(c, (int, Fraction)) else v * c
            if not s.is_zero():
                out.comps[k] = s
        return out

    def __eq__(self, other):
        if not isinstance(other, OForm):
            return NotImplemented
        return self.degree == other.degree and self.comps == other.comps

    __hash__ = None

    def d(self) -> "OForm":
        """Exterior derivative in the a-variables."""
        out = OForm(self.n, self.dim, self.n_t, self.degree + 1)
        for key, val in self.comps.items():
            for j in range(self.n):
                if j in key:
                    continue
                newkey = tuple(sorted(key + (j,)))
                pos = newkey.index(j)
                sign = -1 if pos % 2 == 1 else 1
                cur = out.comps.get(newkey, TruncSeries.zero(self.dim, self.n_t))
                cur = cur + val.derive(j).scale(sign)
                if cur.is_zero():
                    out.comps.pop(newkey, None)
                else:
                    out.comps[newkey] = cur
        return out

    def __str__(self):
        if not self.comps:
            return "0"
        return " + ".join(
            f"({v})*d{'^'.join(str(i + 1) for i in k)}" for k, v in sorted(self.comps.items()))

    __repr__ = __str__


def _is_o_function(val: TruncSeries, n: int) -> bool:
    for c in val.coeffs:
        for e in c.terms:
            if any(e[j] != 0 for j in range(n, len(e))):
                return False
    return True


def o_function(val: TruncSeries, n: int) -> bool:
    return _is_o_function(val, n)


def de_rham_solve(g: OForm) -> OForm:
    """Radial-homotopy primitive: b of degree k-1 with d(b) = g, for closed g.

    The homotopy-canonical primitive is returned (no integration constants).
    """
    if g.degree < 1:
        raise SolveError("de Rham solving needs degree at least 1")
    dg = g.d()
    if not dg.is_zero():
        raise SolveError(f"O-form is not closed: d(g) = {dg}")
    k = g.degree
    out = OForm(g.n, g.dim, g.n_t, k - 1)
    for key, val in g.comps.items():
        for pos, idx in enumerate(key):
            sign = -1 if pos % 2 == 1 else 1
            rest = key[:pos] + key[pos + 1:]
            # termwise weight 1/(a-degree + k), then multiply by a_idx
            add = [BasePoly.zero(g.dim) for _ in range(g.n_t + 1)]
            xi = BasePoly.variable(g.dim, idx)
            for m, p in enumerate(val.coeffs):
                for e, c in p.terms.items():
                    add[m] = add[m] + BasePoly(g.dim, {e: c / Fraction(sum(e) + k)}) * xi
            piece = TruncSeries(g.dim, g.n_t, add).scale(sign)
            cur = out.comps.get(rest, TruncSeries.zero(g.dim, g.n_t))
            cur = cur + piece
            if cur.is_zero():
                out.comps.pop(rest, None)
            else:
                out.comps[rest] = cur
    check = out.d()
    if not (check - g).is_zero():
        raise SolveError("radial homotopy failed on the O-de Rham complex (internal error)")
    return out
