"""Series in the formal parameter t, truncated at a fixed order, over BasePoly.

A TruncSeries holds exactly n_t+1 polynomial coefficients; every operation
silently discards t-powers above the truncation order.  SeriesMatrix is a
square matrix of such series with exact order-by-order inversion around a
constant leading term.
"""

from __future__ import annotations

from fractions import Fraction

from polariz.core.poly import BasePoly, PolyError
from polariz.core.scalars import as_scalar, scalar_inverse, scalar_is_zero


class SeriesError(ValueError):
    pass


class TruncSeries:
    __slots__ = ("dim", "n_t", "coeffs")

    def __init__(self, dim: int, n_t: int, coeffs=None):
        self.dim = dim
        self.n_t = n_t
        if coeffs is None:
            coeffs = [BasePoly.zero(dim) for _ in range(n_t + 1)]
        else:
            coeffs = list(coeffs)[: n_t + 1]
            while len(coeffs) < n_t + 1:
                coeffs.append(BasePoly.zero(dim))
        self.coeffs = tuple(coeffs)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_poly(p: BasePoly, n_t: int, t_power: int = 0) -> "TruncSeries":
        out = [BasePoly.zero(p.dim) for _ in range(n_t + 1)]
        if t_power <= n_t:
            out[t_power] = p
        return TruncSeries(p.dim, n_t, out)

    @staticmethod
    def const(dim: int, n_t: int, c) -> "TruncSeries":
        return TruncSeries.from_poly(BasePoly.const(dim, c), n_t)

    @staticmethod
    def zero(dim: int, n_t: int) -> "TruncSeries":
        return TruncSeries(dim, n_t)

    @staticmethod
    def one(dim: int, n_t: int) -> "TruncSeries":
        return TruncSeries.const(dim, n_t, 1)

    @staticmethod
    def t(dim: int, n_t: int) -> "TruncSeries":
        """The formal parameter itself."""
        return TruncSeries.from_poly(BasePoly.one(dim), n_t, 1)

    def _check(self, other: "TruncSeries"):
        if self.dim != other.dim or self.n_t != other.n_t:
            raise SeriesError(
                f"series mismatch: dim {self.dim}/{other.dim}, n_t {self.n_t}/{other.n_t}")

    # -- ring operations ----------------------------------------------------

    def _lift(self, other):
        if isinstance(other, TruncSeries):
            return other
        if isinstance(other, BasePoly):
            return TruncSeries.from_poly(other, self.n_t)
        if isinstance(other, (int, Fraction)):
            return TruncSeries.const(self.dim, self.n_t, other)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        self._check(o)
        return TruncSeries(self.dim, self.n_t,
                           [a + b for a, b in zip(self.coeffs, o.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return TruncSeries(self.dim, self.n_t, [-a for a in self.coeffs])

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        self._check(o)
        out = [BasePoly.zero(self.dim) for _ in range(self.n_t + 1)]
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j, b in enumerate(o.coeffs):
                if i + j > self.n_t:
                    break
                if b.is_zero():
                    continue
                out[i + j] = out[i + j] + a * b
        return TruncSeries(self.dim, self.n_t, out)

    __rmul__ = __mul__

    def scale(self, c) -> "TruncSeries":
        c = as_scalar(c)
        return TruncSeries(self.dim, self.n_t, [a.scale(c) for a in self.coeffs])

    def t_shift(self, k: int) -> "TruncSeries":
        """Multiply by t^k (k may be negative when the low coefficients vanish)."""
        if k >= 0:
            out = [BasePoly.zero(self.dim)] * k + list(self.coeffs)
            return TruncSeries(self.dim, self.n_t, out)
        for j in range(-k):
            if j <= self.n_t and not self.coeffs[j].is_zero():
                raise SeriesError(f"division by t^{-k} of a series with nonzero t^{j} part")
        return TruncSeries(self.dim, self.n_t, list(self.coeffs[-k:]))

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self.dim == o.dim and self.n_t == o.n_t and all(
            a == b for a, b in zip(self.coeffs, o.coeffs))

    __hash__ = None

    def is_zero(self) -> bool:
        return all(a.is_zero() for a in self.coeffs)

    def is_constant(self) -> bool:
        return all(a.is_constant() for a in self.coeffs)

    def order(self):
        """Lowest t-power with a nonzero coefficient; None if zero."""
        for i, a in enumerate(self.coeffs):
            if not a.is_zero():
                return i
        return None

    # -- calculus -----------------------------------------------------------

    def derive(self, i: int) -> "TruncSeries":
        return TruncSeries(self.dim, self.n_t, [a.derive(i) for a in self.coeffs])

    def t_derive(self) -> "TruncSeries":
        """d/dt, truncated (the top coefficient's slot is left empty)."""
        out = [self.coeffs[k + 1].scale(k + 1) for k in range(self.n_t)]
        out.append(BasePoly.zero(self.dim))
        return TruncSeries(self.dim, self.n_t, out)

    def eval_series(self, values: list) -> "TruncSeries":
        """Substitute TruncSeries values for the variables."""
        total = TruncSeries.zero(self.dim if not values else values[0].dim, self.n_t)
        for k, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            v = c.eval(values)
            if not isinstance(v, TruncSeries):
                v = TruncSeries.const(total.dim, self.n_t, v)
            total = total + v.t_shift(k)
        return total

    def eval_point(self, values: list):
        """Evaluate coefficients at a rational point; returns a list by t-power."""
        return [c.eval(values) for c in self.coeffs]

    # -- output ---------------------------------------------------------------

    def __str__(self):
        parts = []
        for k, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            parts.append(f"t^{k}*({c})" if k else str(c))
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__

    def key(self) -> str:
        return "|".join(c.key() for c in self.coeffs)

    def to_json(self):
        return [c.to_json() for c in self.coeffs]

    @staticmethod
    def from_json(dim, n_t, data) -> "TruncSeries":
        return TruncSeries(dim, n_t, [BasePoly.from_json(dim, c) for c in data])


class SeriesMatrix:
    """Square matrix of TruncSeries entries (row-major)."""

    __slots__ = ("size", "dim", "n_t", "entries")

    def __init__(self, size: int, dim: int, n_t: int, entries=None):
        self.size = size
        self.dim = dim
        self.n_t = n_t
        if entries is None:
            entries = [[TruncSeries.zero(dim, n_t) for _ in range(size)] for _ in range(size)]
        self.entries = entries

    @staticmethod
    def identity(size: int, dim: int, n_t: int) -> "SeriesMatrix":
        m = SeriesMatrix(size, dim, n_t)
        for i in range(size):
            m.entries[i][i] = TruncSeries.one(dim, n_t)
        return m

    def copy(self) -> "SeriesMatrix":
        return SeriesMatrix(self.size, self.dim, self.n_t,
                            [row[:] for row in self.entries])

    def __add__(self, other):
        out = SeriesMatrix(self.size, self.dim, self.n_t)
        for i in range(self.size):
            for j in range(self.size):
                out.entries[i][j] = self.entries[i][j] + other.entries[i][j]
        return out

    def __sub__(self, other):
        out = SeriesMatrix(self.size, self.dim, self.n_t)
        for i in range(self.size):
            for j in range(self.size):
                out.entries[i][j] = self.entries[i][j] - other.entries[i][j]
        return out

    def __neg__(self):
        out = SeriesMatrix(self.size, self.dim, self.n_t)
        for i in range(self.size):
            for j in range(self.size):
                out.entries[i][j] = -self.entries[i][j]
        return out

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, TruncSeries, BasePoly)):
            out = SeriesMatrix(self.size, self.dim, self.n_t)
            for i in range(self.size):
                for j in range(self.size):
                    out.entries[i][j] = self.entries[i][j] * other
            return out
        out = SeriesMatrix(self.size, self.dim, self.n_t)
        for i in range(self.size):
            for j in range(self.size):
                acc = TruncSeries.zero(self.dim, self.n_t)
                for k in range(self.size):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                out.entries[i][j] = acc
        return out

    def transpose(self) -> "SeriesMatrix":
        out = SeriesMatrix(self.size, self.dim, self.n_t)
        for i in range(self.size):
            for j in range(self.size):
                out.entries[i][j] = self.entries[j][i]
        return out

    def __eq__(self, other):
        if not isinstance(other, SeriesMatrix):
            return NotImplemented
        return self.size == other.size and all(
            self.entries[i][j] == other.entries[i][j]
            for i in range(self.size) for j in range(self.size))

    __hash__ = None

    def is_zero(self) -> bool:
        return all(self.entries[i][j].is_zero()
                   for i in range(self.size) for j in range(self.size))

    def is_antisymmetric(self) -> bool:
        return all((self.entries[i][j] + self.entries[j][i]).is_zero()
                   for i in range(self.size) for j in range(i, self.size))

    def t_coefficient_matrix(self, k: int):
        return [[self.entries[i][j].coeffs[k] for j in range(self.size)]
                for i in range(self.size)]

    def constant_matrix(self, k: int = 0):
        """The t^k coefficient as a scalar matrix; raises if not constant."""
        out = []
        for i in range(self.size):
            row = []
            for j in range(self.size):
                p = self.entries[i][j].coeffs[k]
                if not p.is_constant():
                    raise SeriesError(
                        f"matrix entry ({i},{j}) is not constant at t^{k}: {p}")
                row.append(p.constant_value())
            out.append(row)
        return out

    def to_json(self):
        return [[self.entries[i][j].to_json() for j in range(self.size)]
                for i in range(self.size)]

    @staticmethod
    def from_json(size, dim, n_t, data) -> "SeriesMatrix":
        m = SeriesMatrix(size, dim, n_t)
        for i in range(size):
            for j in range(size):
                m.entries[i][j] = TruncSeries.from_json(dim, n_t, data[i][j])
        return m

    def __str__(self):
        rows = []
        for row in self.entries:
            rows.append("[" + ", ".join(str(e) for e in row) + "]")
        return "[" + ",\n ".join(rows) + "]"


def scalar_matrix_inverse(mat):
    """Exact inverse of a square scalar matrix; raises SeriesError if singular."""
    size = len(mat)
    aug = [[as_scalar(mat[i][j]) for j in range(size)] +
           [Fraction(1) if k == i else Fraction(0) for k in range(size)]
           for i in range(size)]
    for col in range(size):
        pivot = None
        for r in range(col, size):
            if not scalar_is_zero(aug[r][col]):
                pivot = r
                break
        if pivot is None:
            raise SeriesError("matrix is singular over the exact scalars")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = scalar_inverse(aug[col][col])
        aug[col] = [v * inv for v in aug[col]]
        for r in range(size):
            if r == col:
                continue
            f = aug[r][col]
            if scalar_is_zero(f):
                continue
            aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[size:] for row in aug]


def invert_series_matrix(omega: SeriesMatrix) -> SeriesMatrix:
    """Exact inverse modulo t^{n_t+1}, order by order around the t^0 part.

    The t^0 coefficient matrix must be constant in the base coordinates and
    invertible; higher orders may be polynomial.
    """
    size, dim, n_t = omega.size, omega.dim, omega.n_t
    w0 = omega.constant_matrix(0)
    w0_inv = scalar_matrix_inverse(w0)

    def smul(scalars, polys):
        out = [[BasePoly.zero(dim) for _ in range(size)] for _ in range(size)]
        for i in range(size):
            for k in range(size):
                c = scalars[i][k]
                if scalar_is_zero(c):
                    continue
                for j in range(size):
                    if polys[k][j].is_zero():
                        continue
                    out[i][j] = out[i][j] + polys[k][j].scale(c)
        return out

    # phi_k = -w0_inv * sum_{m=1..k} omega_m * phi_{k-m}
    phi = [None] * (n_t + 1)
    phi[0] = [[BasePoly.const(dim, w0_inv[i][j]) for j in range(size)] for i in range(size)]
    omg = [omega.t_coefficient_matrix(k) for k in range(n_t + 1)]
    for k in range(1, n_t + 1):
        acc = [[BasePoly.zero(dim) for _ in range(size)] for _ in range(size)]
        for m in range(1, k + 1):
            for i in range(size):
                for l in range(size):
                    a = omg[m][i][l]
                    if a.is_zero():
                        continue
                    for j in range(size):
                        b = phi[k - m][l][j]
                        if b.is_zero():
                            continue
                        acc[i][j] = acc[i][j] + a * b
        neg = [[-acc[i][j] for j in range(size)] for i in range(size)]
        phi[k] = smul(w0_inv, neg)

    out = SeriesMatrix(size, dim, n_t)
    for i in range(size):
        for j in range(size):
            out.entries[i][j] = TruncSeries(dim, n_t, [phi[k][i][j] for k in range(n_t + 1)])
    return out
