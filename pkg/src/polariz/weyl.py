"""The fiberwise Weyl algebra tensored with forms, in Wick-normal-ordered storage.

Elements live over a Decomposition of the 2n-dimensional fiber into n
"P" generators (indices 0..n-1) and n "Q" generators (indices n..2n-1),
with an antisymmetric pairing phi that vanishes on PxP and QxQ.  The
product rewrites Q-generators of the left factor against P-generators of
the right factor with weight t*phi (each contraction raises the t-power by
one); a slow word-rewriting oracle implements the defining relation
x*y - y*x = t*phi(x, y) directly and referees the closed-form product.

Orientation pins (all other signs follow from these and are exercised by
the test suite):
  * generators are ordered P-block first; the standard test decomposition
    has phi(p_i, q_j) = +delta_ij;
  * `delta` moves a fiber generator to its form copy (x-hat -> dx); the
    companion operators delta_star / delta_inv satisfy the contraction
    homotopy identities exactly;
  * two-form extraction is oriented so that the distinguished fiber-pairing
    element built from a symplectic matrix squares to t times that matrix.

Every element carries a total-degree cutoff D: terms with fiber degree plus
twice the t-power above D are discarded.  Contractions preserve that grading,
so truncation is coherent: retained orders are exact.
"""

from __future__ import annotations

import math
from fractions import Fraction

from polariz.core.poly import BasePoly
from polariz.core.series import TruncSeries, SeriesMatrix, invert_series_matrix
from polariz.core.scalars import as_scalar, scalar_is_zero, scalar_str


class WeylError(ValueError):
    pass


class Decomposition:
    """Fiber data: dimension 2n, P/Q index split, pairing, truncation orders.

    phi is a SeriesMatrix over the base (entries may be base-dependent);
    the P and Q blocks must be null and the t^0 part invertible.
    """

    __slots__ = ("n", "dim", "base_dim", "n_t", "cutoff", "phi", "_pairs", "phi_inv")

    def __init__(self, n: int, phi: SeriesMatrix, n_t: int, cutoff: int, base_dim=None):
        self.n = n
        self.dim = 2 * n
        self.base_dim = base_dim if base_dim is not None else 2 * n
        self.n_t = n_t
        self.cutoff = cutoff
        if phi.size != self.dim:
            raise WeylError("pairing size does not match fiber dimension")
        if not phi.is_antisymmetric():
            raise WeylError("fiber pairing must be antisymmetric")
        for i in range(n):
            for j in range(n):
                if not phi.entries[i][j].is_zero():
                    raise WeylError("fiber pairing must vanish on P x P")
                if not phi.entries[n + i][n + j].is_zero():
                    raise WeylError("fiber pairing must vanish on Q x Q")
        self.phi = phi
        self.phi_inv = invert_series_matrix(phi)  # also checks t^0 invertibility
        # Contraction table: nonzero phi(q_{n+i}, p_j) entries as flat t-dicts.
        self._pairs = []
        for i in range(n):
            for j in range(n):
                entry = phi.entries[n + i][j]
                if not entry.is_zero():
                    flat = {k: c for k, c in enumerate(entry.coeffs) if not c.is_zero()}
                    self._pairs.append((i, j, flat))

    @staticmethod
    def standard(n: int, n_t: int, cutoff: int, orientation: int = 1) -> "Decomposition":
        """Constant pairing with phi(p_i, q_j) = orientation * delta_ij."""
        dim = 2 * n
        phi = SeriesMatrix(dim, dim, n_t)
        for i in range(n):
            phi.entries[i][n + i] = TruncSeries.const(dim, n_t, orientation)
            phi.entries[n + i][i] = TruncSeries.const(dim, n_t, -orientation)
        return Decomposition(n, phi, n_t, cutoff)

    def is_p_index(self, u: int) -> bool:
        return u < self.n

    def compatible(self, other: "Decomposition") -> bool:
        return (self.n == other.n and self.n_t == other.n_t
                and self.cutoff == other.cutoff and self.phi == other.phi)

    def __repr__(self):
        return f"Decomposition(n={self.n}, n_t={self.n_t}, cutoff={self.cutoff})"


def _merge_forms(f1, f2):
    """Wedge two sorted index tuples; returns (merged, sign) or (None, 0)."""
    if not f1:
        return f2, 1
    if not f2:
        return f1, 1
    if set(f1) & set(f2):
        return None, 0
    merged = []
    sign = 1
    i = j = 0
    while i < len(f1) and j < len(f2):
        if f1[i] < f2[j]:
            merged.append(f1[i])
            i += 1
        else:
            # f2[j] jumps over the remaining entries of f1
            if (len(f1) - i) % 2 == 1:
                sign = -sign
            merged.append(f2[j])
            j += 1
    merged.extend(f1[i:])
    merged.extend(f2[j:])
    return tuple(merged), sign


def _insert_form(F, u):
    """Wedge dx_u from the left into sorted tuple F: returns (tuple, sign) or (None, 0)."""
    if u in F:
        return None, 0
    pos = 0
    while pos < len(F) and F[pos] < u:
        pos += 1
    sign = -1 if pos % 2 == 1 else 1
    return F[:pos] + (u,) + F[pos:], sign


class WeylElement:
    """Wick-normal-ordered element: dict (t_power, fiber_exps, form_tuple) -> BasePoly."""

    __slots__ = ("decomp", "terms")

    def __init__(self, decomp: Decomposition, terms=None):
        self.decomp = decomp
        self.terms = terms if terms is not None else {}

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(decomp) -> "WeylElement":
        return WeylElement(decomp)

    @staticmethod
    def one(decomp) -> "WeylElement":
        return WeylElement.from_scalar(decomp, 1)

    @staticmethod
    def from_scalar(decomp, c) -> "WeylElement":
        c = as_scalar(c)
        if scalar_is_zero(c):
            return WeylElement(decomp)
        e0 = (0,) * decomp.dim
        return WeylElement(decomp, {(0, e0, ()): BasePoly.const(decomp.base_dim, c)})

    @staticmethod
    def from_function(decomp, f) -> "WeylElement":
        """Lift a base function (BasePoly or TruncSeries) to a central element."""
        e0 = (0,) * decomp.dim
        if isinstance(f, BasePoly):
            f = TruncSeries.from_poly(f, decomp.n_t)
        out = {}
        for k, c in enumerate(f.coeffs):
            if not c.is_zero() and 2 * k <= decomp.cutoff:
                out[(k, e0, ())] = c
        return WeylElement(decomp, out)

    @staticmethod
    def generator(decomp, u: int) -> "WeylElement":
        """The fiber generator with global index u (0-based)."""
        e = tuple(1 if v == u else 0 for v in range(decomp.dim))
        return WeylElement(decomp, {(0, e, ()): BasePoly.one(decomp.base_dim)})

    @staticmethod
    def form_generator(decomp, u: int) -> "WeylElement":
        e0 = (0,) * decomp.dim
        return WeylElement(decomp, {(0, e0, (u,)): BasePoly.one(decomp.base_dim)})

    @staticmethod
    def monomial(decomp, t_power, exps, form, coeff) -> "WeylElement":
        exps = tuple(exps)
        form = tuple(sorted(form))
        if isinstance(coeff, (int, Fraction)):
            coeff = BasePoly.const(decomp.base_dim, coeff)
        out = WeylElement(decomp)
        out._add_term(t_power, exps, form, coeff)
        return out

    # -- term bookkeeping ----------------------------------------------------

    def _keep(self, t_power: int, exps) -> bool:
        return sum(exps) + 2 * t_power <= self.decomp.cutoff

    def _add_term(self, t_power, exps, form, poly, limit=None):
        if limit is None:
            if poly.is_zero() or not self._keep(t_power, exps):
                return
        elif poly.is_zero() or sum(exps) + 2 * t_power > limit:
            return
        key = (t_power, exps, form)
        cur = self.terms.get(key)
        if cur is None:
            self.terms[key] = poly
        else:
            s = cur + poly
            if s.is_zero():
                del self.terms[key]
            else:
                self.terms[key] = s

    def _check(self, other: "WeylElement"):
        if self.decomp is not other.decomp and not self.decomp.compatible(other.decomp):
            raise WeylError("decomposition mismatch")

    # -- linear structure -----------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, WeylElement):
            return NotImplemented
        self._check(other)
        out = WeylElement(self.decomp, dict(self.terms))
        for key, poly in other.terms.items():
            out._add_term(*key, poly)
        return out

    def __neg__(self):
        return WeylElement(self.decomp, {k: -p for k, p in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, WeylElement):
            return NotImplemented
        return self + (-other)

    def scale(self, c) -> "WeylElement":
        c = as_scalar(c)
        if scalar_is_zero(c):
            return WeylElement(self.decomp)
        return WeylElement(self.decomp, {k: p.scale(c) for k, p in self.terms.items()})

    def scale_poly(self, poly: BasePoly) -> "WeylElement":
        out = WeylElement(self.decomp)
        for (t, e, F), p in self.terms.items():
            out._add_term(t, e, F, p * poly)
        return out

    def scale_series(self, s: TruncSeries) -> "WeylElement":
        out = WeylElement(self.decomp)
        for (t, e, F), p in self.terms.items():
            for k, c in enumerate(s.coeffs):
                if not c.is_zero():
                    out._add_term(t + k, e, F, p * c)
        return out

    def t_shift(self, k: int) -> "WeylElement":
        """Multiply by t^k; negative k requires the low t-parts to vanish."""
        out = WeylElement(self.decomp)
        if k < 0:
            for (t, e, F), p in self.terms.items():
                if t + k < 0:
                    raise WeylError(f"element not divisible by t^{-k}")
        for (t, e, F), p in self.terms.items():
            out._add_term(t + k, e, F, p)
        return out

    def __eq__(self, other):
        if not isinstance(other, WeylElement):
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.terms

    # -- the product -----------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, WeylElement):
            return wick_product(self, other)
        if isinstance(other, BasePoly):
            return self.scale_poly(other)
        if isinstance(other, TruncSeries):
            return self.scale_series(other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, (BasePoly, TruncSeries)):
            return self * other  # base coefficients are central
        return NotImplemented

    # -- gradings ---------------------------------------------------------------

    def form_degrees(self):
        return sorted({len(F) for (_, _, F) in self.terms})

    def form_component(self, q: int) -> "WeylElement":
        return WeylElement(self.decomp,
                           {k: p for k, p in self.terms.items() if len(k[2]) == q})

    def filtration_T(self):
        """Least fiber-degree + 2*t-degree over stored terms; +inf for zero."""
        if not self.terms:
            return math.inf
        return min(sum(e) + 2 * t for (t, e, _) in self.terms)

    def filtration_P(self):
        """Least P-block fiber degree over stored terms; +inf for zero."""
        if not self.terms:
            return math.inf
        n = self.decomp.n
        return min(sum(e[:n]) for (_, e, _) in self.terms)

    def filtration_floor(self, level: int) -> "WeylElement":
        """Drop terms whose total filtration reaches `level`.

        Operators that lower the total filtration (delta, scaled adjoint of
        the pairing element) cannot be evaluated reliably at the cutoff
        boundary; flooring isolates the reliable range.
        """
        return WeylElement(self.decomp,
                           {k: p for k, p in self.terms.items()
                            if sum(k[1]) + 2 * k[0] < level})

    def scalar_part(self) -> TruncSeries:
        """Projection onto fiber-degree 0, form-degree 0 (t-order capped)."""
        d = self.decomp
        out = [BasePoly.zero(d.base_dim) for _ in range(d.n_t + 1)]
        e0 = (0,) * d.dim
        for (t, e, F), p in self.terms.items():
            if e == e0 and not F and t <= d.n_t:
                out[t] = out[t] + p
        return TruncSeries(d.base_dim, d.n_t, out)

    def fiber_scalar_component(self) -> "WeylElement":
        """Terms with no fiber generators (forms allowed)."""
        e0 = (0,) * self.decomp.dim
        return WeylElement(self.decomp,
                           {k: p for k, p in self.terms.items() if k[1] == e0})

    def is_central_form(self) -> bool:
        """True when no term carries fiber generators."""
        e0 = (0,) * self.decomp.dim
        return all(e == e0 for (_, e, _) in self.terms)

    # -- output -------------------------------------------------------------------

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0], sum(kv[0][1]), kv[0][1], kv[0][2]))

    def __str__(self):
        if not self.terms:
            return "0"
        n = self.decomp.n
        bits = []
        for (t, e, F), p in self.sorted_terms():
            gens = []
            for u, k in enumerate(e):
                if k == 0:
                    continue
                name = f"p{u + 1}" if u < n else f"q{u - n + 1}"
                gens.append(name if k == 1 else f"{name}^{k}")
            forms = [f"d{('p' + str(u + 1)) if u < n else ('q' + str(u - n + 1))}" for u in F]
            head = f"t^{t}*" if t else ""
            body = "*".join(gens + forms) if (gens or forms) else "1"
            bits.append(f"{head}({p})*{body}")
        return " + ".join(bits)

    __repr__ = __str__

    def key(self) -> str:
        return ";".join(f"{t}|{','.join(map(str, e))}|{','.join(map(str, F))}|{p.key()}"
                        for (t, e, F), p in self.sorted_terms())

    def to_json(self):
        return [[t, list(e), list(F), p.to_json()] for (t, e, F), p in self.sorted_terms()]

    @staticmethod
    def from_json(decomp, data) -> "WeylElement":
        out = WeylElement(decomp)
        for t, e, F, p in data:
            out._add_term(int(t), tuple(int(x) for x in e), tuple(int(x) for x in F),
                          BasePoly.from_json(decomp.base_dim, p))
        return out


# -- product ------------------------------------------------------------------


def _falling(m: int, k: int) -> int:
    out = 1
    for j in range(k):
        out *= m - j
    return out


def wick_product(a: WeylElement, b: WeylElement, headroom: int = 0) -> WeylElement:
    """Closed-form normal-ordered product.

    Q-generators of `a` contract against P-generators of `b`; each single
    contraction of q_{n+i} with p_j contributes a factor t*phi(q_{n+i}, p_j).
    Validated against `reduce_word` on randomized inputs in the test suite.

    `headroom` extends the total-degree cutoff for this product; callers
    that divide the result by t need two extra levels so the division does
    not reach above the truncation.
    """
    a._check(b)
    d = a.decomp
    n = d.n
    out = WeylElement(d)
    pairs = d._pairs
    limit = d.cutoff + headroom
    for (t1, e1, F1), c1 in a.terms.items():
        beta1 = e1[n:]
        for (t2, e2, F2), c2 in b.terms.items():
            F, fsign = _merge_forms(F1, F2)
            if F is None:
                continue
            base = c1 * c2
            if base.is_zero():
                continue
            if fsign < 0:
                base = -base
            _contract(out, d, pairs, 0, list(beta1), list(e2[:n]),
                      t1 + t2, 0, Fraction(1), {0: base}, e1, e2, F, limit)
    return out


def _contract(out, d, pairs, idx, rem_q, rem_p, t_base, n_contr, comb, series, e1, e2, F, limit):
    """Recursive enumeration of contraction counts per nonzero pairing entry.

    `series` maps extra t-offsets (from base-dependent pairing coefficients)
    to accumulated polynomial factors; `comb` is the combinatorial weight.
    """
    if idx == len(pairs):
        n = d.n
        alpha = tuple(e1[j] + rem_p[j] for j in range(n))
        beta = tuple(rem_q[i] + e2[n + i] for i in range(n))
        exps = alpha + beta
        fib = sum(exps)
        for t_off, poly in series.items():
            t_tot = t_base + n_contr + t_off
            if fib + 2 * t_tot > limit:
                continue
            out._add_term(t_tot, exps, F, poly.scale(comb), limit)
        return
    qi, pj, flat = pairs[idx]
    kmax = min(rem_q[qi], rem_p[pj])
    _contract(out, d, pairs, idx + 1, rem_q, rem_p, t_base, n_contr, comb, series, e1, e2, F, limit)
    fact = 1
    cur_series = series
    q_orig, p_orig = rem_q[qi], rem_p[pj]
    for k in range(1, kmax + 1):
        fact *= k
        weight = Fraction(_falling(q_orig, k) * _falling(p_orig, k), fact)
        nxt = {}
        for t_off, poly in cur_series.items():
            for dt, c in flat.items():
                key = t_off + dt
                add = poly * c
                prev = nxt.get(key)
                nxt[key] = add if prev is None else prev + add
        cur_series = nxt
        rem_q[qi] = q_orig - k
        rem_p[pj] = p_orig - k
        _contract(out, d, pairs, idx + 1, rem_q, rem_p, t_base, n_contr + k,
                  comb * weight, cur_series, e1, e2, F, limit)
        rem_q[qi] = q_orig
        rem_p[pj] = p_orig


# -- word-rewriting oracle -------------------------------------------------------


def reduce_word(decomp: Decomposition, indices, coeff=None, form=(), t_power: int = 0) -> WeylElement:
    """Normal-order a word of fiber generators by the defining relation.

    Adjacent out-of-order pairs (larger index before smaller) are rewritten as
    x_u x_v = x_v x_u + t*phi(x_u, x_v); this terminates because each step
    lowers the number of inversions.  Slow but independent of wick_product.
    """
    d = decomp
    if coeff is None:
        coeff = BasePoly.one(d.base_dim)
    if isinstance(coeff, (int, Fraction)):
        coeff = BasePoly.const(d.base_dim, coeff)
    out = WeylElement(d)
    # stack of (word, t_power, poly)
    stack = [(tuple(indices), t_power, coeff)]
    form = tuple(sorted(form))
    while stack:
        word, t, poly = stack.pop()
        swapped = False
        for i in range(len(word) - 1):
            u, v = word[i], word[i + 1]
            if u > v:
                # x_u x_v = x_v x_u + t phi(u, v)
                stack.append((word[:i] + (v, u) + word[i + 2:], t, poly))
                phi_uv = d.phi.entries[u][v]
                rest = word[:i] + word[i + 2:]
                for k, c in enumerate(phi_uv.coeffs):
                    if not c.is_zero():
                        stack.append((rest, t + 1 + k, poly * c))
                swapped = True
                break
        if not swapped:
            exps = [0] * d.dim
            for u in word:
                exps[u] += 1
            out._add_term(t, tuple(exps), form, poly)
    return out


# -- the contraction-homotopy operators -------------------------------------------


def delta(a: WeylElement) -> WeylElement:
    """Degree +1 derivation moving one fiber generator to its form copy."""
    d = a.decomp
    out = WeylElement(d)
    for (t, e, F), p in a.terms.items():
        for u, k in enumerate(e):
            if k == 0:
                continue
            F2, sign = _insert_form(F, u)
            if F2 is None:
                continue
            e2 = e[:u] + (e[u] - 1,) + e[u + 1:]
            out._add_term(t, e2, F2, p.scale(k * sign))
    return out


def delta_star(a: WeylElement) -> WeylElement:
    """Degree -1 derivation moving one form index back to a fiber generator."""
    d = a.decomp
    out = WeylElement(d)
    for (t, e, F), p in a.terms.items():
        for pos, u in enumerate(F):
            sign = -1 if pos % 2 == 1 else 1
            e2 = e[:u] + (e[u] + 1,) + e[u + 1:]
            F2 = F[:pos] + F[pos + 1:]
            out._add_term(t, e2, F2, p.scale(sign))
    return out


def delta_inv(a: WeylElement) -> WeylElement:
    """Normalized homotopy: delta_star / (fiber degree + form degree), 0 on scalars."""
    d = a.decomp
    out = WeylElement(d)
    for (t, e, F), p in a.terms.items():
        total = sum(e) + len(F)
        if total == 0:
            continue
        w = Fraction(1, total)
        for pos, u in enumerate(F):
            sign = -1 if pos % 2 == 1 else 1
            e2 = e[:u] + (e[u] + 1,) + e[u + 1:]
            F2 = F[:pos] + F[pos + 1:]
            out._add_term(t, e2, F2, p.scale(w * sign))
    return out


def deg_op(a: WeylElement) -> WeylElement:
    """Multiply each component by its fiber-plus-form degree."""
    out = WeylElement(a.decomp)
    for (t, e, F), p in a.terms.items():
        k = sum(e) + len(F)
        if k:
            out._add_term(t, e, F, p.scale(k))
    return out


def graded_commutator(x: WeylElement, y: WeylElement, headroom: int = 0) -> WeylElement:
    """[x, y] = x y - (-1)^{|x||y|} y x for form-homogeneous x."""
    degs = x.form_degrees()
    if len(degs) > 1:
        raise WeylError("graded_commutator requires form-homogeneous left argument")
    dx = degs[0] if degs else 0
    out = wick_product(x, y, headroom)
    for q in y.form_degrees():
        yq = y.form_component(q)
        sign = -1 if (dx * q) % 2 == 1 else 1
        prod = wick_product(yq, x, headroom)
        out = out - prod.scale(sign)
    return out


def commutator_over_t(x: WeylElement, y: WeylElement) -> WeylElement:
    """(1/t) [x, y] (graded), computed with cutoff headroom so the division
    by t is exact on all retained levels; the zero-contraction parts cancel."""
    return graded_commutator(x, y, headroom=2).t_shift(-1)


def anticommutator(x: WeylElement, y: WeylElement) -> WeylElement:
    return wick_product(x, y) + wick_product(y, x)


def square_over_t(x: WeylElement) -> WeylElement:
    """(1/t) x^2 for odd x, with cutoff headroom for the division."""
    return wick_product(x, x, headroom=2).t_shift(-1)


# -- connection action ---------------------------------------------------------------


def covariant_derivative(a: WeylElement, christoffels=None) -> WeylElement:
    """Covariant exterior derivative on fiber indices and coefficients.

    `christoffels` is None (flat) or chris[k][i][j] as TruncSeries with
    cotangent action x-hat^k -> -chris[k][i][j] x-hat^j (x) dx^i.  Torsion-free
    connections act trivially on the form indices, which is assumed here.
    """
    d = a.decomp
    out = WeylElement(d)
    for (t, e, F), p in a.terms.items():
        # base differential of the coefficient
        for i in range(d.base_dim):
            dp = p.derive(i)
            if dp.is_zero():
                continue
            F2, sign = _insert_form(F, i)
            if F2 is None:
                continue
            out._add_term(t, e, F2, dp.scale(sign))
        if christoffels is None:
            continue
        # fiber replacements
        for u, k in enumerate(e):
            if k == 0:
                continue
            row = christoffels[u]
            e_less = e[:u] + (e[u] - 1,) + e[u + 1:]
            for i in range(d.dim):
                F2, sign = _insert_form(F, i)
                if F2 is None:
                    continue
                for j in range(d.dim):
                    gamma = row[i][j]
                    if gamma.is_zero():
                        continue
                    e2 = e_less[:j] + (e_less[j] + 1,) + e_less[j + 1:]
                    for dt, c in enumerate(gamma.coeffs):
                        if c.is_zero():
                            continue
                        out._add_term(t + dt, e2, F2, p * c.scale(-k * sign))
    return out


# -- sp realizations -------------------------------------------------------------------


def is_infinitesimally_symplectic(A: SeriesMatrix, decomp: Decomposition) -> bool:
    """Check A^T phi + phi A = 0 for the fiber pairing."""
    lhs = A.transpose() * decomp.phi + decomp.phi * A
    return lhs.is_zero()


def preserves_p(A: SeriesMatrix, decomp: Decomposition) -> bool:
    n = decomp.n
    return all(A.entries[i][j].is_zero() for i in range(n, 2 * n) for j in range(n))


def realize_sp(A: SeriesMatrix, decomp: Decomposition, ordering: str = "weyl") -> WeylElement:
    """Quadratic element lambda with (1/t)[lambda, e-hat] = A(e-hat) on generators.

    ordering="weyl" totally symmetrizes the quadratic symbol; ordering="wick"
    stores it normal-ordered (requires A to preserve the P block).  The two
    differ by t/2 times the P-trace.
    """
    d = decomp
    if not is_infinitesimally_symplectic(A, d):
        raise WeylError("matrix does not preserve the fiber pairing infinitesimally")
    if ordering not in ("weyl", "wick"):
        raise WeylError(f"unknown ordering {ordering!r}")
    if ordering == "wick" and not preserves_p(A, d):
        raise WeylError("wick realization requires a P-preserving matrix")
    # c = A * phi^{-1} is symmetric by the sp condition; the realization is
    # lambda = (1/2) sum_{u,v} c_uv * (symbol x_u x_v), stored symmetrized
    # ("weyl") or normal-ordered ("wick") -- the two differ centrally.
    c = A * d.phi_inv
    out = WeylElement(d)
    quarter = Fraction(1, 4)
    half = Fraction(1, 2)
    for u in range(d.dim):
        for v in range(d.dim):
            s = c.entries[u][v]
            if s.is_zero():
                continue
            if ordering == "weyl":
                piece = (reduce_word(d, (u, v)) + reduce_word(d, (v, u))).scale(quarter)
            else:
                exps = [0] * d.dim
                exps[u] += 1
                exps[v] += 1
                piece = WeylElement.monomial(d, 0, tuple(exps), (), half)
            out = out + piece.scale_series(s)
    return out


def trace_p(A: SeriesMatrix, decomp: Decomposition) -> TruncSeries:
    """Trace of the restriction of A to the P block."""
    if not preserves_p(A, decomp):
        raise WeylError("trace over P requires a P-preserving matrix")
    out = TruncSeries.zero(A.dim, A.n_t)
    for i in range(decomp.n):
        out = out + A.entries[i][i]
    return out


# -- two-form conversion -----------------------------------------------------------------


def form_matrix(a: WeylElement) -> SeriesMatrix:
    """Read a fiber-scalar 2-form element as an antisymmetric matrix.

    Oriented so that the distinguished pairing element delta-tilde built from
    a symplectic matrix w satisfies form_matrix(delta_tilde^2) = t*w.
    """
    d = a.decomp
    out = SeriesMatrix(d.dim, d.base_dim, d.n_t)
    e0 = (0,) * d.dim
    for (t, e, F), p in a.terms.items():
        if e != e0 or len(F) != 2:
            raise WeylError("form_matrix requires a fiber-scalar 2-form element")
        if t > d.n_t:
            continue
        i, j = F
        out.entries[i][j] = out.entries[i][j] - TruncSeries.from_poly(p, d.n_t, t)
        out.entries[j][i] = out.entries[j][i] + TruncSeries.from_poly(p, d.n_t, t)
    return out


def two_form_element(decomp: Decomposition, m: SeriesMatrix) -> WeylElement:
    """Inverse of form_matrix: embed an antisymmetric matrix as a scalar 2-form."""
    if not m.is_antisymmetric():
        raise WeylError("two_form_element requires an antisymmetric matrix")
    d = decomp
    out = WeylElement(d)
    e0 = (0,) * d.dim
    for i in range(d.dim):
        for j in range(i + 1, d.dim):
            s = m.entries[i][j]
            for k, c in enumerate(s.coeffs):
                if not c.is_zero():
                    out._add_term(k, e0, (i, j), -c)
    return out
