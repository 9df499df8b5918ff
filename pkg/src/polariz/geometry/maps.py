"""Formal polynomial coordinate changes: composition, inversion, transport.

A FormalMap is a tuple of TruncSeries components x-tilde = F(x).  The t^0
part must be a polynomial automorphism for inversion; higher t-orders are
inverted exactly order by order using the polynomial Jacobian of the inverse.
"""

from __future__ import annotations

from fractions import Fraction

from polariz.core.poly import BasePoly
from polariz.core.series import TruncSeries, SeriesMatrix, SeriesError, scalar_matrix_inverse


class MapError(ValueError):
    pass


class FormalMap:
    __slots__ = ("dim", "n_t", "components")

    def __init__(self, components):
        self.components = list(components)
        self.dim = self.components[0].dim
        self.n_t = self.components[0].n_t

    @staticmethod
    def identity(dim: int, n_t: int) -> "FormalMap":
        return FormalMap([TruncSeries.from_poly(BasePoly.variable(dim, i), n_t)
                          for i in range(dim)])

    def is_identity(self) -> bool:
        return all(self.components[i] == BasePoly.variable(self.dim, i)
                   for i in range(self.dim))

    def compose(self, other: "FormalMap") -> "FormalMap":
        """self after other: x -> self(other(x))."""
        return FormalMap([c.eval_series(other.components) for c in self.components])

    def jacobian(self) -> SeriesMatrix:
        out = SeriesMatrix(self.dim, self.dim, self.n_t)
        for i in range(self.dim):
            for j in range(self.dim):
                out.entries[i][j] = self.components[i].derive(j)
        return out

    def pullback_function(self, f: TruncSeries) -> TruncSeries:
        return f.eval_series(self.components)

    def pullback_two_form(self, m: SeriesMatrix) -> SeriesMatrix:
        """(F^* m)_ab = sum_ij dF_i/da dF_j/db m_ij(F)."""
        j = self.jacobian()
        mf = SeriesMatrix(self.dim, self.dim, self.n_t)
        for a in range(self.dim):
            for b in range(self.dim):
                mf.entries[a][b] = m.entries[a][b].eval_series(self.components)
        return j.transpose() * mf * j

    def __eq__(self, other):
        if not isinstance(other, FormalMap):
            return NotImplemented
        return all(a == b for a, b in zip(self.components, other.components))

    __hash__ = None

    def __str__(self):
        return "(" + "; ".join(str(c) for c in self.components) + ")"


def _poly_map_compose(f_polys, g_polys):
    """Compose t-free polynomial maps: (f o g)(x)."""
    vals = list(g_polys)
    return [p.eval(vals) if not p.is_zero() else BasePoly.zero(p.dim) for p in f_polys]


def invert_poly_map(f_polys, max_iter: int = 32):
    """Exact inverse of a polynomial automorphism of affine space.

    Splits f = c + L x + N(x) with N of degree >= 2 and iterates
    g <- L^{-1}(y - c - N(g)); stops at a fixed point and verifies both
    compositions exactly.  Raises MapError if f is not invertible within
    the iteration budget.
    """
    dim = f_polys[0].dim
    const = []
    lin = [[Fraction(0)] * dim for _ in range(dim)]
    high = []
    for i, p in enumerate(f_polys):
        c = Fraction(0)
        rest = {}
        for e, v in p.terms.items():
            deg = sum(e)
            if deg == 0:
                c = v
            elif deg == 1:
                j = next(k for k, ek in enumerate(e) if ek == 1)
                lin[i][j] = v
            else:
                rest[e] = v
        const.append(c)
        high.append(BasePoly(dim, rest))
    try:
        lin_inv = scalar_matrix_inverse(lin)
    except SeriesError as exc:
        raise MapError(f"linear part of the coordinate change is singular: {exc}")

    def l_inv_apply(vec_polys):
        out = []
        for i in range(dim):
            acc = BasePoly.zero(dim)
            for j in range(dim):
                if lin_inv[i][j] != 0:
                    acc = acc + vec_polys[j].scale(lin_inv[i][j])
            out.append(acc)
        return out

    y_minus_c = [BasePoly.variable(dim, i) - BasePoly.const(dim, const[i]) for i in range(dim)]
    g = l_inv_apply(y_minus_c)
    for _ in range(max_iter):
        ng = [h.eval(g) if not h.is_zero() else BasePoly.zero(dim) for h in high]
        ng = [y_minus_c[i] - (ng[i] if isinstance(ng[i], BasePoly) else BasePoly.const(dim, ng[i]))
              for i in range(dim)]
        g_next = l_inv_apply(ng)
        if all(a == b for a, b in zip(g_next, g)):
            g = g_next
            break
        g = g_next
    ident = [BasePoly.variable(dim, i) for i in range(dim)]
    fg = _poly_map_compose(f_polys, g)
    gf = _poly_map_compose(g, f_polys)
    fg = [p if isinstance(p, BasePoly) else BasePoly.const(dim, p) for p in fg]
    gf = [p if isinstance(p, BasePoly) else BasePoly.const(dim, p) for p in gf]
    if fg != ident or gf != ident:
        raise MapError("coordinate change is not a polynomial automorphism "
                       "(no polynomial inverse within the iteration budget)")
    return g


def invert_map(f: FormalMap, max_iter: int = 32) -> FormalMap:
    """Formal inverse of a t-series polynomial map, exact mod t^{n_t+1}."""
    dim, n_t = f.dim, f.n_t
    g0 = invert_poly_map([c.coeffs[0] for c in f.components], max_iter=max_iter)
    g_series = [TruncSeries.from_poly(p, n_t) for p in g0]
    g_map = FormalMap(g_series)
    jac_g0 = [[g0[i].derive(j) for j in range(dim)] for i in range(dim)]
    for m in range(1, n_t + 1):
        err = f.compose(g_map)
        # error at order m (lower orders already match the identity)
        e_m = [err.components[i].coeffs[m] for i in range(dim)]
        if all(p.is_zero() for p in e_m):
            continue
        corr = []
        for i in range(dim):
            acc = BasePoly.zero(dim)
            for j in range(dim):
                if not jac_g0[i][j].is_zero() and not e_m[j].is_zero():
                    acc = acc + jac_g0[i][j] * e_m[j]
            corr.append(acc)
        new = []
        for i in range(dim):
            coeffs = list(g_map.components[i].coeffs)
            coeffs[m] = coeffs[m] - corr[i]
            new.append(TruncSeries(dim, n_t, coeffs))
        g_map = FormalMap(new)
    check = f.compose(g_map)
    if not check.is_identity():
        raise MapError("formal inversion failed; the map is not invertible mod t-orders")
    return g_map


def transform_christoffels(gamma, fwd: FormalMap, inv: FormalMap):
    """Christoffel symbols in the target coordinates of `fwd`.

    gamma[k][i][j] is given in the source coordinates; the result is indexed
    the same way in the target coordinates x-tilde, with x = inv(x-tilde).
    gamma may be None (flat source connection).
    """
    dim, n_t = fwd.dim, fwd.n_t
    jac_fwd = fwd.jacobian()            # dF^c/dx^k, in source coords
    jac_inv = inv.jacobian()            # dG^i/dxt^a, in target coords
    jf_at_g = SeriesMatrix(dim, dim, n_t)
    for c in range(dim):
        for k in range(dim):
            jf_at_g.entries[c][k] = jac_fwd.entries[c][k].eval_series(inv.components)
    out = [[[TruncSeries.zero(dim, n_t) for _ in range(dim)] for _ in range(dim)]
           for _ in range(dim)]
    for a in range(dim):
        for b in range(a, dim):
            # second-derivative term d^2 G^k / dxt^a dxt^b
            inner = [inv.components[k].derive(a).derive(b) for k in range(dim)]
            if gamma is not None:
                for k in range(dim):
                    acc = inner[k]
                    for i in range(dim):
                        ja = jac_inv.entries[i][a]
                        if ja.is_zero():
                            continue
                        for j in range(dim):
                            jb = jac_inv.entries[j][b]
                            if jb.is_zero():
                                continue
                            g = gamma[k][i][j]
                            if g.is_zero():
                                continue
                            acc = acc + g.eval_series(inv.components) * ja * jb
                    inner[k] = acc
            for c in range(dim):
                acc = TruncSeries.zero(dim, n_t)
                for k in range(dim):
                    if not inner[k].is_zero():
                        acc = acc + jf_at_g.entries[c][k] * inner[k]
                out[c][a][b] = acc
                out[c][b][a] = acc
    return out


def exp_flow(field, t_power: int, dim: int, n_t: int) -> FormalMap:
    """Truncated flow map x -> x + t^k X(x) + t^{2k} X^2(x)/2! + ...

    `field` is a list of TruncSeries components of the derivation X.
    """
    if t_power < 1:
        raise MapError("flow order must be at least 1")

    def apply_x(g: TruncSeries) -> TruncSeries:
        acc = TruncSeries.zero(dim, n_t)
        for j in range(dim):
            if not field[j].is_zero():
                acc = acc + field[j] * g.derive(j)
        return acc

    comps = []
    for i in range(dim):
        term = TruncSeries.from_poly(BasePoly.variable(dim, i), n_t)
        total = term
        fact = 1
        m = 1
        while m * t_power <= n_t:
            term = apply_x(term)
            fact *= m
            if term.is_zero():
                break
            total = total + term.t_shift(m * t_power).scale(Fraction(1, fact))
            m += 1
        comps.append(total)
    return FormalMap(comps)
