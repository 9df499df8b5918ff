"""Flat-connection construction on the fiberwise Weyl algebra of a chart.

All computation happens in adapted coordinates, where the symplectic matrix
is the constant standard one and the fiber pairing has phi(p_i, q_j) =
-delta_ij (matching {a_i, f_j} = -delta_ij for the conjugate frame).

Operator conventions, derived from the flat-section recursion and pinned by
the test suite rather than assumed:

  * delta is the positive fiber-to-form derivation of the weyl module;
  * the distinguished pairing element is delta_tilde = sum omega_ij
    x-hat^i (x) dx^j, whose scaled adjoint action is the NEGATIVE of delta
    on generators -- the connection D = nabla + (1/t) ad(delta_tilde + r)
    therefore acts as nabla - delta + (1/t) ad(r);
  * flat sections are produced by iterating
        a <- f + delta_inv(nabla(a) + (1/t)[r, a]),
    which converges in exactly `cutoff` steps by the strict filtration gain;
  * the correction r solves  delta(r) = R + nabla(r) + (1/t) r^2 - alpha
    with alpha the two-form element of (omega_prime - omega), iterated
    through delta_inv from zero in exactly cutoff - 2 steps.

The scalar curvature of D then equals omega_prime on retained orders, and
the symmetrized-ordering curvature differs from it by -(t/2) times the
polarization-trace form of the connection.
"""

from __future__ import annotations

from fractions import Fraction

from polariz.core.poly import BasePoly
from polariz.core.series import TruncSeries, SeriesMatrix
from polariz.geometry.charts import ChartData, standard_omega
from polariz.geometry.connections import curvature, zero_christoffels, CurvatureData
from polariz.weyl import (WeylElement, wick_product, covariant_derivative, delta, delta_inv,
                          commutator_over_t, square_over_t, two_form_element, form_matrix,
                          WeylError)


class FedosovError(ValueError):
    pass


def build_delta_tilde(chart: ChartData) -> WeylElement:
    """The pairing element sum_ij omega_ij x-hat^i (x) dx^j in adapted coordinates."""
    d = chart.decomp
    om = standard_omega(chart.n, chart.dim, chart.n_t)
    out = WeylElement.zero(d)
    for i in range(chart.dim):
        for j in range(chart.dim):
            s = om.entries[i][j]
            if s.is_zero():
                continue
            e = tuple(1 if u == i else 0 for u in range(chart.dim))
            out = out + WeylElement.monomial(d, 0, e, (j,), Fraction(1)).scale_series(s)
    return out


class FedosovData:
    """Chart + connection + flat-connection correction and curvature elements."""

    def __init__(self, chart: ChartData, curv: CurvatureData, delta_tilde, r,
                 omega_prime_ad: SeriesMatrix):
        self.chart = chart
        self.curv = curv
        self.delta_tilde = delta_tilde
        self.r = r
        self.omega_prime_ad = omega_prime_ad
        self._tau_cache = {}

    @property
    def decomp(self):
        return self.chart.decomp

    @property
    def gamma(self):
        g = self.chart.gamma_ad
        return g if g is not None else zero_christoffels(self.chart.dim, self.chart.n_t)

    def apply_d(self, a: WeylElement) -> WeylElement:
        """The flat connection: nabla - delta + (1/t) ad(r)."""
        out = covariant_derivative(a, self.gamma) - delta(a)
        if not self.r.is_zero():
            out = out + commutator_over_t(self.r, a)
        return out


def solve_r(chart: ChartData, curv: CurvatureData, omega_prime_ad: SeriesMatrix,
            expect_p_filtration=None) -> WeylElement:
    """Iterate the correction r to the prescribed scalar curvature.

    Exactly cutoff - 2 steps of r <- delta_inv(R - alpha + nabla r + r^2/t)
    from zero, then the defining equation is asserted to hold on all retained
    orders.  The strict filtration bound F^T(r) >= 3 is asserted; the
    P-filtration bound F^P(r) >= 1 is asserted only when requested (it holds
    for an unshifted target, and for polarized shifts only in the refined
    form that also counts first-block form indices).
    """
    d = chart.decomp
    gamma = chart.gamma_ad if chart.gamma_ad is not None \
        else zero_christoffels(chart.dim, chart.n_t)
    alpha_mat = omega_prime_ad - standard_omega(chart.n, chart.dim, chart.n_t)
    low = [e.order() for row in alpha_mat.entries for e in row if not e.is_zero()]
    if low and min(low) < 1:
        raise FedosovError("prescribed curvature must agree with omega at t^0")
    alpha = two_form_element(d, alpha_mat)
    source = curv.r_wick - alpha
    r = WeylElement.zero(d)
    steps = max(chart.cutoff - 2, 1)
    for _ in range(steps):
        rhs = source + covariant_derivative(r, gamma)
        if not r.is_zero():
            rhs = rhs + square_over_t(r)
        r = delta_inv(rhs)
    resid = delta(r) - (source + covariant_derivative(r, gamma)
                        + (square_over_t(r) if not r.is_zero()
                           else WeylElement.zero(d)))
    # delta lowers the total filtration by one, so the defining equation is
    # only evaluable strictly below the cutoff; r itself is exact on all
    # retained levels because the iteration uses raising operators only.
    if not resid.filtration_floor(chart.cutoff).is_zero():
        raise FedosovError(
            f"correction equation residual is nonzero below the total-degree cutoff "
            f"(currently {chart.cutoff}); the cutoff is too small for this chart")
    if not r.is_zero() and r.filtration_T() < 3:
        raise FedosovError("correction violates the total-degree filtration bound")
    if expect_p_filtration and not r.is_zero() and r.filtration_P() < 1:
        raise FedosovError("correction violates the P-filtration bound")
    return r


def scalar_curvatures(fed: FedosovData):
    """The two scalar curvature matrices (normal-ordered and symmetrized).

    Omega = R + nabla(gamma) + (1/t) gamma^2 with gamma = delta_tilde + r;
    both must be central scalar two-forms, the first equal to the prescribed
    omega_prime, the second lower by (t/2) times the trace form.
    """
    d = fed.decomp
    gam = fed.delta_tilde + fed.r
    nabla_gam = covariant_derivative(gam, fed.gamma)
    gam_sq = square_over_t(gam)
    body = nabla_gam + gam_sq
    om_wick = fed.curv.r_wick + body
    om_weyl = fed.curv.r_weyl + body
    om_wick = om_wick.filtration_floor(d.cutoff)
    om_weyl = om_weyl.filtration_floor(d.cutoff)
    if not om_wick.is_central_form() or not om_weyl.is_central_form():
        raise FedosovError("scalar curvature has non-central terms (internal inconsistency)")
    return form_matrix(om_wick), form_matrix(om_weyl)


def build_fedosov(chart: ChartData, omega_prime_ad=None, chern_shift=False,
                  verify=True) -> FedosovData:
    """Assemble the flat-connection data for a prescribed scalar curvature.

    omega_prime_ad is a SeriesMatrix in adapted coordinates (defaults to the
    chart's transported target, or to omega itself); chern_shift adds
    (t/2) times the connection's polarization-trace form.
    """
    if chart.decomp is None:
        raise FedosovError("chart has no adaptation; validate it first")
    curv = curvature(chart)
    if omega_prime_ad is None:
        omega_prime_ad = chart.adapted_omega_prime()
    if chern_shift:
        half_t = TruncSeries.t(chart.dim, chart.n_t).scale(Fraction(1, 2))
        omega_prime_ad = omega_prime_ad + curv.trace_form * half_t
    shifted = not (omega_prime_ad - standard_omega(chart.n, chart.dim, chart.n_t)).is_zero()
    r = solve_r(chart, curv, omega_prime_ad, expect_p_filtration=not shifted)
    fed = FedosovData(chart, curv, build_delta_tilde(chart), r, omega_prime_ad)
    if verify:
        om_w, om_f = scalar_curvatures(fed)
        if not (om_w - omega_prime_ad).is_zero():
            raise FedosovError("scalar curvature does not match the prescribed target")
        half_t = TruncSeries.t(chart.dim, chart.n_t).scale(Fraction(1, 2))
        if not (om_f - (om_w - curv.trace_form * half_t)).is_zero():
            raise FedosovError("ordering-curvature identity failed (internal inconsistency)")
    return fed


def tau(fed: FedosovData, f) -> WeylElement:
    """Flat lift of a base function (adapted coordinates); cached.

    Runs exactly `cutoff` iterations of the fixed-point recursion, then
    asserts flatness and the section normalization.
    """
    chart = fed.chart
    if isinstance(f, (str, BasePoly)):
        f = chart.series(f)
    key = f.key()
    hit = fed._tau_cache.get(key)
    if hit is not None:
        return hit
    d = fed.decomp
    f_elt = WeylElement.from_function(d, f)
    a = f_elt
    gamma = fed.gamma
    for _ in range(chart.cutoff):
        step = covariant_derivative(a, gamma)
        if not fed.r.is_zero():
            step = step + commutator_over_t(fed.r, a)
        a = f_elt + delta_inv(step)
    if not fed.apply_d(a).filtration_floor(chart.cutoff).is_zero():
        raise FedosovError("flat lift did not converge within the cutoff")
    if a.scalar_part() != f:
        raise FedosovError("flat lift does not project back to its seed")
    fed._tau_cache[key] = a
    return a


def sigma_project(a: WeylElement) -> TruncSeries:
    """Projection of a Weyl element onto its scalar (center) part."""
    return a.scalar_part()


def star_adapted(fed: FedosovData, f, g) -> TruncSeries:
    """Product of two adapted-coordinate functions through the flat lifts."""
    return sigma_project(wick_product(tau(fed, f), tau(fed, g)))


def star(fed: FedosovData, f, g) -> TruncSeries:
    """Star product of chart functions (user coordinates)."""
    chart = fed.chart
    fa = chart.to_adapted(f)
    ga = chart.to_adapted(g)
    return chart.from_adapted(star_adapted(fed, fa, ga))
