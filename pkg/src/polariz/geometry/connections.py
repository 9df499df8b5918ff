"""Polarization-compatible symplectic connections and their fiber curvature.

Connections are stored as Christoffel symbols gamma[k][i][j] (cotangent
action x-hat^k -> -gamma[k][i][j] x-hat^j (x) dx^i).  Invariants are checked
in adapted coordinates, where the symplectic matrix is constant: symmetry of
the lower indices, preservation of the symplectic pairing, preservation of
the first-block coframe, and flatness of that block along the polarization
directions.
"""

from __future__ import annotations

from fractions import Fraction

from polariz.core.poly import BasePoly
from polariz.core.series import TruncSeries, SeriesMatrix
from polariz.geometry.charts import ChartData, ChartError, standard_omega
from polariz.geometry.diff import two_form_is_closed
from polariz.geometry.maps import transform_christoffels
from polariz import weyl
from polariz.weyl import WeylElement, covariant_derivative, commutator_over_t, \
    realize_sp, form_matrix, delta


class ConnectionError(ValueError):
    def __init__(self, invariant, message):
        self.invariant = invariant
        super().__init__(f"[{invariant}] {message}")


def zero_christoffels(dim, n_t):
    return [[[TruncSeries.zero(dim, n_t) for _ in range(dim)] for _ in range(dim)]
            for _ in range(dim)]


def christoffels_are_zero(gamma) -> bool:
    return all(gamma[k][i][j].is_zero()
               for k in range(len(gamma)) for i in range(len(gamma)) for j in range(len(gamma)))


def check_p_connection(gamma, n, omega: SeriesMatrix):
    """All P-connection invariants against a constant symplectic matrix."""
    dim = 2 * n
    om0 = omega.constant_matrix(0)  # raises if not constant; higher orders below
    for k in range(omega.n_t + 1):
        for i in range(dim):
            for j in range(dim):
                if not omega.entries[i][j].coeffs[k].is_constant():
                    raise ConnectionError("constancy",
                                          "connection checks need a constant symplectic matrix")
    for k in range(dim):
        for i in range(dim):
            for j in range(i + 1, dim):
                if gamma[k][i][j] != gamma[k][j][i]:
                    raise ConnectionError("torsion",
                                          f"gamma^{k+1}_{i+1}{j+1} is not symmetric")
    # nabla omega = 0: sum_l gamma^l_ik om_lj + gamma^l_ij om_kl = 0
    for i in range(dim):
        for kk in range(dim):
            for j in range(dim):
                acc = TruncSeries.zero(dim, omega.n_t)
                for l in range(dim):
                    acc = acc + gamma[l][i][kk] * omega.entries[l][j] \
                        + gamma[l][i][j] * omega.entries[kk][l]
                if not acc.is_zero():
                    raise ConnectionError("symplectic",
                                          f"nabla(omega) component ({i+1},{kk+1},{j+1}) = {acc}")
    # preserves the first-block coframe
    for p in range(n):
        for i in range(dim):
            for j in range(n, dim):
                if not gamma[p][i][j].is_zero():
                    raise ConnectionError("polarization",
                                          f"gamma^{p+1}_{i+1}{j+1} breaks the conjugate split")


def curvature_matrices(gamma, chart: ChartData):
    """sp-valued curvature two-form: dict (l, i) l<i -> SeriesMatrix A with
    nabla^2 (x-hat^k) = sum_m A[m][k] x-hat^m (x) dx^l wedge dx^i."""
    decomp = chart.decomp
    dim, n_t = chart.dim, chart.n_t
    out = {}
    for k in range(dim):
        gen = WeylElement.generator(decomp, k)
        dd = covariant_derivative(covariant_derivative(gen, gamma), gamma)
        for (t, e, F), p in dd.terms.items():
            if len(F) != 2 or sum(e) != 1 or t > n_t:
                raise ConnectionError("curvature", "unexpected term in nabla^2 on a generator")
            m = e.index(1)
            key = (F[0], F[1])
            if key not in out:
                out[key] = SeriesMatrix(dim, dim, n_t)
            cur = out[key].entries[m][k]
            out[key].entries[m][k] = cur + TruncSeries.from_poly(p, n_t, t)
    return out


class CurvatureData:
    """Wick- and fully-symmetrized curvature elements plus the trace form."""

    def __init__(self, r_wick, r_weyl, trace_form):
        self.r_wick = r_wick
        self.r_weyl = r_weyl
        self.trace_form = trace_form


def curvature(chart: ChartData, gamma=None) -> CurvatureData:
    """Fiber curvature of the chart connection in adapted coordinates.

    Returns the normal-ordered realization R, the symmetrized realization
    R^F, and the polarization-trace two-form (the concrete first-Chern
    representative, pinned by R - R^F = (t/2) * trace_form).
    """
    decomp = chart.decomp
    dim, n_t = chart.dim, chart.n_t
    if gamma is None:
        gamma = chart.gamma_ad if chart.gamma_ad is not None \
            else zero_christoffels(dim, n_t)
    mats = curvature_matrices(gamma, chart)
    r_wick = WeylElement.zero(decomp)
    r_weyl = WeylElement.zero(decomp)
    e0 = (0,) * dim
    for (l, i), A in sorted(mats.items()):
        lam_w = realize_sp(A, decomp, "wick")
        lam_e = realize_sp(A, decomp, "weyl")
        form = WeylElement.monomial(decomp, 0, e0, (l, i), Fraction(1))
        r_wick = r_wick + weyl.wick_product(lam_w, form)
        r_weyl = r_weyl + weyl.wick_product(lam_e, form)
    # defining property and structural identities
    for k in range(dim):
        gen = WeylElement.generator(decomp, k)
        dd = covariant_derivative(covariant_derivative(gen, gamma), gamma)
        if commutator_over_t(r_wick, gen) != dd or commutator_over_t(r_weyl, gen) != dd:
            raise ConnectionError("curvature", "realized curvature does not reproduce nabla^2")
    if not delta(r_wick).is_zero() or not delta(r_weyl).is_zero():
        raise ConnectionError("curvature", "curvature element is not delta-closed")
    if not r_wick.is_zero() and r_wick.filtration_P() < 1:
        raise ConnectionError("curvature", "normal-ordered curvature has vanishing P-filtration")
    diff = r_wick - r_weyl
    if not diff.is_central_form():
        raise ConnectionError("curvature", "ordering difference is not central")
    trace_form = form_matrix(diff.t_shift(-1)) * 2 if not diff.is_zero() \
        else SeriesMatrix(dim, dim, n_t)
    if not two_form_is_closed(trace_form):
        raise ConnectionError("curvature", "polarization-trace form is not closed")
    return CurvatureData(r_wick, r_weyl, trace_form)


def check_p_flatness(gamma, chart: ChartData):
    """Curvature restricted to the first block vanishes along the polarization."""
    n, dim = chart.n, chart.dim
    mats = curvature_matrices(gamma, chart)
    for (l, i), A in mats.items():
        if l >= n and i >= n:
            for m in range(dim):
                for k in range(n):
                    if not A.entries[m][k].is_zero():
                        raise ConnectionError(
                            "p-flatness",
                            f"curvature in polarization directions ({l+1},{i+1}) "
                            f"acts on the a-block coframe")


def attach_connection(chart: ChartData, gamma_user=None):
    """Transform (or build) the chart connection and verify all invariants.

    With gamma_user None the frame-flat connection is used: it vanishes in
    adapted coordinates, so its user-coordinate symbols are pure
    second-derivative terms of the adaptation.
    """
    dim, n_t = chart.dim, chart.n_t
    if gamma_user is None:
        gamma_ad = zero_christoffels(dim, n_t)
        gamma_user = transform_christoffels(None, chart.adapt_inv, chart.adapt_fwd)
    else:
        gamma_ad = transform_christoffels(gamma_user, chart.adapt_fwd, chart.adapt_inv)
    check_p_connection(gamma_ad, chart.n, standard_omega(chart.n, dim, n_t))
    check_p_flatness(gamma_ad, chart)
    chart.christoffels = gamma_user
    chart.gamma_ad = gamma_ad
    return chart


def build_p_connection(chart: ChartData):
    """The connection flat in the commuting Hamiltonian frame.

    Requires the 2n frame fields (a- and f-frame Hamiltonians) to commute
    pairwise; they do automatically once the conjugate relations hold, and
    this is re-verified exactly.
    """
    from polariz.geometry.charts import hamiltonian_field, lie_bracket_fields
    fields = [chart.field(a) for a in chart.a_frame] + \
             [chart.field(f) for f in chart.f_frame]
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            br = lie_bracket_fields(fields[i], fields[j], chart.dim, chart.n_t)
            if not all(c.is_zero() for c in br):
                raise ConnectionError("frame",
                                      f"frame fields {i+1} and {j+1} do not commute")
    return attach_connection(chart, None)
