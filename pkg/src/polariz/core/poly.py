"""Multivariate polynomials over exact scalars, stored sparsely by exponent tuple.

Coefficients are `Fraction` (or `GaussRat`); zero coefficients are never
stored, so equality of canonical forms is plain dict equality.  Variables are
x1..x{dim}.
"""

from __future__ import annotations

from fractions import Fraction

from polariz.core.scalars import as_scalar, scalar_is_zero, scalar_str, scalar_to_json, scalar_from_json


class PolyError(ValueError):
    pass


class BasePoly:
    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms=None):
        self.dim = dim
        self.terms = terms if terms is not None else {}

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(dim: int) -> "BasePoly":
        return BasePoly(dim)

    @staticmethod
    def const(dim: int, c) -> "BasePoly":
        c = as_scalar(c)
        if scalar_is_zero(c):
            return BasePoly(dim)
        return BasePoly(dim, {(0,) * dim: c})

    @staticmethod
    def one(dim: int) -> "BasePoly":
        return BasePoly.const(dim, 1)

    @staticmethod
    def variable(dim: int, i: int) -> "BasePoly":
        """The coordinate x{i+1} (0-based index i)."""
        if not 0 <= i < dim:
            raise PolyError(f"variable index {i} out of range for dimension {dim}")
        exps = tuple(1 if j == i else 0 for j in range(dim))
        return BasePoly(dim, {exps: Fraction(1)})

    @staticmethod
    def monomial(dim: int, exps, c) -> "BasePoly":
        exps = tuple(int(e) for e in exps)
        if len(exps) != dim or any(e < 0 for e in exps):
            raise PolyError(f"bad exponent tuple {exps} for dimension {dim}")
        c = as_scalar(c)
        if scalar_is_zero(c):
            return BasePoly(dim)
        return BasePoly(dim, {exps: c})

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def constant_value(self):
        return self.terms.get((0,) * self.dim, Fraction(0))

    def total_degree(self) -> int:
        """Degree of the polynomial; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def _check(self, other: "BasePoly"):
        if self.dim != other.dim:
            raise PolyError(f"dimension mismatch: {self.dim} vs {other.dim}")

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = BasePoly.const(self.dim, other)
        if not isinstance(other, BasePoly):
            return NotImplemented
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if scalar_is_zero(s):
                out.pop(e, None)
            else:
                out[e] = s
        return BasePoly(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return BasePoly(self.dim, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = BasePoly.const(self.dim, other)
        if not isinstance(other, BasePoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, BasePoly):
            return NotImplemented
        self._check(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, 0) + c1 * c2
                if scalar_is_zero(s):
                    out.pop(e, None)
                else:
                    out[e] = s
        return BasePoly(self.dim, out)

    __rmul__ = __mul__

    def scale(self, c) -> "BasePoly":
        c = as_scalar(c)
        if scalar_is_zero(c):
            return BasePoly(self.dim)
        return BasePoly(self.dim, {e: v * c for e, v in self.terms.items()})

    def __pow__(self, k: int) -> "BasePoly":
        if not isinstance(k, int) or k < 0:
            raise PolyError("polynomial powers must be nonnegative integers")
        out = BasePoly.one(self.dim)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = BasePoly.const(self.dim, other)
        if not isinstance(other, BasePoly):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    __hash__ = None

    # -- calculus ----------------------------------------------------------

    def derive(self, i: int) -> "BasePoly":
        """Exact partial derivative with respect to x{i+1} (0-based i)."""
        if not 0 <= i < self.dim:
            raise PolyError(f"derivative index {i} out of range for dimension {self.dim}")
        out = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            e2 = e[:i] + (e[i] - 1,) + e[i + 1:]
            s = out.get(e2, 0) + c * e[i]
            if scalar_is_zero(s):
                out.pop(e2, None)
            else:
                out[e2] = s
        return BasePoly(self.dim, out)

    def integrate_scaled(self, i: int, extra_weight: int = 0) -> "BasePoly":
        """Termwise x_i * m / (deg_i(m) + 1 + extra_weight); homotopy building block."""
        out = {}
        for e, c in self.terms.items():
            e2 = e[:i] + (e[i] + 1,) + e[i + 1:]
            out[e2] = c / Fraction(e[i] + 1 + extra_weight)
        return BasePoly(self.dim, out)

    # -- evaluation / substitution ------------------------------------------

    def eval(self, values):
        """Evaluate at a point; `values` may be scalars or any ring elements.

        Works generically: entries need +, * and integer powers, so series and
        polynomials can be substituted for the variables.
        """
        if len(values) != self.dim:
            raise PolyError("wrong number of values")
        # power cache per variable
        maxes = [0] * self.dim
        for e in self.terms:
            for i, k in enumerate(e):
                if k > maxes[i]:
                    maxes[i] = k
        powers = []
        for i, v in enumerate(values):
            row = [None] * (maxes[i] + 1)
            row[0] = None  # exponent 0 contributes nothing
            if maxes[i] >= 1:
                row[1] = v
                for k in range(2, maxes[i] + 1):
                    row[k] = row[k - 1] * v
            powers.append(row)
        total = None
        for e, c in sorted(self.terms.items()):
            term = None
            for i, k in enumerate(e):
                if k == 0:
                    continue
                term = powers[i][k] if term is None else term * powers[i][k]
            piece = c if term is None else term * c
            total = piece if total is None else total + piece
        if total is None:
            return Fraction(0)
        return total

    # -- output -------------------------------------------------------------

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            factors = []
            for i, k in enumerate(e):
                if k == 1:
                    factors.append(f"x{i + 1}")
                elif k > 1:
                    factors.append(f"x{i + 1}^{k}")
            cs = scalar_str(c)
            if factors:
                if c == 1:
                    parts.append("*".join(factors))
                elif c == -1:
                    parts.append("-" + "*".join(factors))
                else:
                    parts.append(cs + "*" + "*".join(factors))
            else:
                parts.append(cs)
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    __repr__ = __str__

    def key(self) -> str:
        """Canonical string key (stable across runs) for caching."""
        return f"{self.dim}|" + ";".join(
            f"{','.join(map(str, e))}:{scalar_str(c)}" for e, c in self.sorted_terms()
        )

    def to_json(self):
        return [[list(e), scalar_to_json(c)] for e, c in self.sorted_terms()]

    @staticmethod
    def from_json(dim, data) -> "BasePoly":
        out = {}
        for e, c in data:
            out[tuple(int(x) for x in e)] = scalar_from_json(c)
        return BasePoly(dim, out)


# -- parsing ---------------------------------------------------------------

class _Parser:
    """Recursive-descent parser for the chart-file polynomial grammar.

    Accepts integer or integer/integer coefficients, variables x1..x{dim},
    operators + - * ^ and parentheses.  No floats, no implicit products.
    """

    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.pos = 0

    def error(self, msg: str):
        raise PolyError(f"parse error at position {self.pos} in {self.text!r}: {msg}")

    def peek(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take_int(self) -> int:
        self.peek()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            self.error("expected integer")
        return int(self.text[start:self.pos])

    def parse(self) -> BasePoly:
        p = self.expr()
        if self.peek():
            self.error("trailing input")
        return p

    def expr(self) -> BasePoly:
        sign = 1
        ch = self.peek()
        if ch in "+-":
            self.pos += 1
            sign = -1 if ch == "-" else 1
        p = self.term().scale(sign)
        while True:
            ch = self.peek()
            if ch == "+":
                self.pos += 1
                p = p + self.term()
            elif ch == "-":
                self.pos += 1
                p = p - self.term()
            else:
                return p

    def term(self) -> BasePoly:
        p = self.factor()
        while self.peek() == "*":
            self.pos += 1
            p = p * self.factor()
        return p

    def factor(self) -> BasePoly:
        p = self.atom()
        if self.peek() == "^":
            self.pos += 1
            k = self.take_int()
            p = p ** k
        return p

    def atom(self) -> BasePoly:
        ch = self.peek()
        if ch == "-":
            self.pos += 1
            return -self.factor()
        if ch == "(":
            self.pos += 1
            p = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return p
        if ch == "x":
            self.pos += 1
            idx = self.take_int()
            if not 1 <= idx <= self.dim:
                self.error(f"variable x{idx} out of range (dimension {self.dim})")
            return BasePoly.variable(self.dim, idx - 1)
        if ch.isdigit():
            num = self.take_int()
            if self.peek() == "/":
                self.pos += 1
                den = self.take_int()
                if den == 0:
                    self.error("zero denominator")
                return BasePoly.const(self.dim, Fraction(num, den))
            return BasePoly.const(self.dim, num)
        self.error("expected coefficient, variable or '('")


def parse_poly(text: str, dim: int) -> BasePoly:
    return _Parser(text, dim).parse()
