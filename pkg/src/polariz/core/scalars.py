"""Exact scalars: arbitrary-precision rationals plus a Gaussian-rational extension.

Plain values are `fractions.Fraction`.  `GaussRat` adjoins a square root of
-1 for complex polarization data; arithmetic normalizes back to `Fraction`
whenever the imaginary part vanishes, so purely real results always compare
equal to their rational counterparts.
"""

from __future__ import annotations

from fractions import Fraction


def _norm(re: Fraction, im: Fraction):
    return Fraction(re) if im == 0 else GaussRat(re, im)


class GaussRat:
    """a + b*i with exact rational components and i*i = -1."""

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def __add__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return _norm(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __sub__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return _norm(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return _norm(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return _norm(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def inverse(self):
        d = self.re * self.re + self.im * self.im
        if d == 0:
            raise ZeroDivisionError("inverse of zero Gaussian rational")
        return _norm(self.re / d, -self.im / d)

    def __truediv__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = _coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __eq__(self, other):
        if isinstance(other, GaussRat):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __repr__(self):
        return f"GaussRat({self.re!r}, {self.im!r})"

    def __str__(self):
        return scalar_str(self)


def _coerce(x):
    if isinstance(x, GaussRat):
        return x
    if isinstance(x, (int, Fraction)):
        return GaussRat(x, 0)
    return None


def as_scalar(x):
    """Coerce ints, fraction strings, Fractions and GaussRats to canonical form."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, GaussRat):
        return _norm(x.re, x.im)
    raise TypeError(f"not an exact scalar: {x!r}")


def scalar_is_zero(x) -> bool:
    if isinstance(x, GaussRat):
        return not bool(x)
    return x == 0


def scalar_inverse(x):
    if isinstance(x, GaussRat):
        return x.inverse()
    return Fraction(1) / x


def scalar_str(x) -> str:
    """Canonical printable form; rationals as p/q, Gaussian as (a+b*i)."""
    if isinstance(x, GaussRat):
        return f"({x.re}+{x.im}*i)" if x.im >= 0 else f"({x.re}{x.im}*i)"
    return str(x)


def scalar_to_json(x):
    if isinstance(x, GaussRat):
        return {"re": str(x.re), "im": str(x.im)}
    return str(x)


def scalar_from_json(obj):
    if isinstance(obj, dict):
        return _norm(Fraction(obj["re"]), Fraction(obj["im"]))
    return Fraction(obj)
