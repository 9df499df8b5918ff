"""Polynomial Darboux charts with polarization frames and conjugate coordinates.

A chart is validated against exact invariants (closedness, constant leading
symplectic part, commuting independent a-frame, conjugate bracket relations)
and equipped with a polynomial conjugate-coordinate adaptation in which the
symplectic matrix becomes the constant standard one.  All downstream
construction runs in adapted coordinates and transports back.

Bracket conventions (pinned; the test suite asserts them):
  {f, g} = sum_ij phi^ij (d_i f)(d_j g) with phi the exact inverse of omega;
  the canonical chart has omega[i][n+i] = +1, so {f_i, a_j} = delta_ij for
  a_i = x_i, f_i = x_{n+i}, and X_f = phi(df, .) satisfies X_f(g) = {f, g}.
"""

from __future__ import annotations

import random
from fractions import Fraction

from polariz.core.poly import BasePoly, parse_poly
from polariz.core.series import TruncSeries, SeriesMatrix, SeriesError, invert_series_matrix
from polariz.geometry.diff import two_form_is_closed, two_form_closedness_witness, \
    wedge_one_forms, poincare_primitive_two_form, d_of_one_form
from polariz.geometry.maps import FormalMap, invert_map, transform_christoffels, exp_flow, MapError
from polariz.geometry.solvers import PolarizationComplex, dolbeault_solve, de_rham_solve, \
    OForm, SolveError
from polariz.weyl import Decomposition


class ChartError(ValueError):
    def __init__(self, invariant, message):
        self.invariant = invariant
        super().__init__(f"[{invariant}] {message}")


def standard_omega(n: int, dim: int, n_t: int) -> SeriesMatrix:
    m = SeriesMatrix(dim, dim, n_t)
    for i in range(n):
        m.entries[i][n + i] = TruncSeries.one(dim, n_t)
        m.entries[n + i][i] = TruncSeries.const(dim, n_t, -1)
    return m


def poisson_bracket(phi: SeriesMatrix, f: TruncSeries, g: TruncSeries) -> TruncSeries:
    dim, n_t = phi.dim, phi.n_t
    out = TruncSeries.zero(dim, n_t)
    for i in range(dim):
        df = f.derive(i)
        if df.is_zero():
            continue
        for j in range(dim):
            p = phi.entries[i][j]
            if p.is_zero():
                continue
            dg = g.derive(j)
            if dg.is_zero():
                continue
            out = out + p * df * dg
    return out


def hamiltonian_field(phi: SeriesMatrix, f: TruncSeries) -> list:
    """Components of X_f = phi(df, .); X_f(g) = {f, g}."""
    dim, n_t = phi.dim, phi.n_t
    out = []
    for j in range(dim):
        acc = TruncSeries.zero(dim, n_t)
        for i in range(dim):
            p = phi.entries[i][j]
            if not p.is_zero():
                df = f.derive(i)
                if not df.is_zero():
                    acc = acc + p * df
        out.append(acc)
    return out


def lie_bracket_fields(x, y, dim, n_t) -> list:
    out = []
    for k in range(dim):
        acc = TruncSeries.zero(dim, n_t)
        for j in range(dim):
            if not x[j].is_zero():
                acc = acc + x[j] * y[k].derive(j)
            if not y[j].is_zero():
                acc = acc - y[j] * x[k].derive(j)
        out.append(acc)
    return out


class ChartData:
    """Validated chart: symplectic data, frames, connection, adaptation."""

    def __init__(self, n, n_t, cutoff, omega, phi, a_frame, f_frame, seed):
        self.n = n
        self.dim = 2 * n
        self.n_t = n_t
        self.cutoff = cutoff
        self.omega = omega
        self.phi = phi
        self.a_frame = a_frame          # list of BasePoly
        self.f_frame = f_frame          # list of TruncSeries
        self.seed = seed
        self.christoffels = None        # user coordinates, [k][i][j] TruncSeries
        self.target = None              # user-coordinate prescribed curvature matrix
        self.adapt_fwd = None           # FormalMap x -> (a, f)
        self.adapt_inv = None
        self.gamma_ad = None            # christoffels in adapted coordinates
        self.target_ad = None
        self.decomp = None              # pipeline Decomposition (adapted frame)

    # -- helpers ------------------------------------------------------------

    def series(self, p) -> TruncSeries:
        if isinstance(p, str):
            p = parse_poly(p, self.dim)
        if isinstance(p, BasePoly):
            return TruncSeries.from_poly(p, self.n_t)
        return p

    def bracket(self, f, g) -> TruncSeries:
        return poisson_bracket(self.phi, self.series(f), self.series(g))

    def field(self, f) -> list:
        return hamiltonian_field(self.phi, self.series(f))

    def to_adapted(self, f) -> TruncSeries:
        """Express a chart function in conjugate coordinates."""
        return self.adapt_inv.pullback_function(self.series(f))

    def from_adapted(self, f: TruncSeries) -> TruncSeries:
        return self.adapt_fwd.pullback_function(f)

    def is_o_function(self, f) -> bool:
        """Constant along the polarization: killed by all {a_i, .}."""
        s = self.series(f)
        return all(self.bracket(a, s).is_zero() for a in self.a_frame)

    def adapted_omega_prime(self) -> SeriesMatrix:
        return self.target_ad if self.target_ad is not None \
            else standard_omega(self.n, self.dim, self.n_t)

    def polarization_complex_t0(self) -> PolarizationComplex:
        """The {a_i, .} derivations in adapted coordinates (standard rows)."""
        rows = []
        for i in range(self.n):
            row = [TruncSeries.zero(self.dim, self.n_t) for _ in range(self.dim)]
            row[self.n + i] = TruncSeries.const(self.dim, self.n_t, -1)
            rows.append(row)
        return PolarizationComplex(self.dim, self.n_t, rows)


def _sample_points(dim, seed, count=4):
    rng = random.Random(seed ^ 0x5EED)
    pool = [Fraction(0), Fraction(1), Fraction(-1), Fraction(1, 2),
            Fraction(-1, 3), Fraction(2), Fraction(-2), Fraction(3, 2)]
    pts = [[Fraction(0)] * dim]
    for _ in range(count):
        pts.append([rng.choice(pool) for _ in range(dim)])
    return pts


def _scalar_rank(rows):
    rows = [list(r) for r in rows]
    ncols = len(rows[0]) if rows else 0
    rank = 0
    for col in range(ncols):
        piv = None
        for r in range(rank, len(rows)):
            if rows[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = Fraction(1) / rows[rank][col]
        rows[rank] = [v * inv for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def validate_chart(n, omega, a_frame, f_frame=None, n_t=4, cutoff=10, seed=0,
                   find_frame=True) -> ChartData:
    """Check all chart invariants exactly and build the adapted description.

    Raises ChartError naming the violated invariant.  When f_frame is absent
    and find_frame is set, conjugates are constructed.
    """
    dim = 2 * n
    if omega.size != dim:
        raise ChartError("dimension", f"omega is {omega.size}x{omega.size}, expected {dim}")
    if not omega.is_antisymmetric():
        raise ChartError("antisymmetry", "omega must be antisymmetric")
    witness = two_form_closedness_witness(omega)
    if witness is not None:
        i, j, k, s = witness
        raise ChartError("closedness", f"d(omega) has entry ({i+1},{j+1},{k+1}) = {s}")
    for i in range(dim):
        for j in range(dim):
            if not omega.entries[i][j].coeffs[0].is_constant():
                raise ChartError("leading-constancy",
                                 f"omega t^0 entry ({i+1},{j+1}) is not constant")
    try:
        phi = invert_series_matrix(omega)
    except SeriesError as exc:
        raise ChartError("nondegeneracy", str(exc))

    if len(a_frame) != n:
        raise ChartError("frame-size", f"a-frame must have {n} entries")
    chart = ChartData(n, n_t, cutoff, omega, phi, list(a_frame), None, seed)

    for i in range(n):
        for j in range(i + 1, n):
            br = chart.bracket(a_frame[i], a_frame[j])
            if not br.is_zero():
                raise ChartError("involutivity",
                                 f"{{a_{i+1}, a_{j+1}}} = {br} (must vanish)")
    # pointwise independence of da_i at the origin and on a seeded sample grid
    for pt in _sample_points(dim, seed):
        rows = [[a_frame[i].derive(j).eval(pt) for j in range(dim)] for i in range(n)]
        if _scalar_rank(rows) != n:
            raise ChartError("independence",
                             f"da-frame drops rank at sample point {pt}")

    if f_frame is None and find_frame:
        f_frame = find_conjugates(chart)
    if f_frame is not None:
        chart.f_frame = [chart.series(f) for f in f_frame]
        _check_conjugates(chart)
        _build_adaptation(chart)
    return chart


def _check_conjugates(chart: ChartData):
    n = chart.n
    for i in range(n):
        for j in range(n):
            br = chart.bracket(chart.f_frame[i], chart.a_frame[j])
            want = TruncSeries.const(chart.dim, chart.n_t, 1 if i == j else 0)
            if br != want:
                raise ChartError("conjugacy",
                                 f"{{f_{i+1}, a_{j+1}}} = {br}, expected {1 if i == j else 0}")
    for i in range(n):
        for j in range(i + 1, n):
            br = chart.bracket(chart.f_frame[i], chart.f_frame[j])
            if not br.is_zero():
                raise ChartError("conjugacy", f"{{f_{i+1}, f_{j+1}}} = {br} (must vanish)")
    # certificate omega = sum_i wedge(df_i, da_i) in the pinned orientation
    acc = SeriesMatrix(chart.dim, chart.dim, chart.n_t)
    for i in range(n):
        df = [chart.f_frame[i].derive(j) for j in range(chart.dim)]
        da = [chart.series(chart.a_frame[i]).derive(j) for j in range(chart.dim)]
        acc = acc + wedge_one_forms(df, da, chart.dim, chart.n_t)
    if not (acc - chart.omega).is_zero():
        raise ChartError("frame-decomposition",
                         "omega does not decompose as sum of df_i wedge da_i")


def _build_adaptation(chart: ChartData):
    comps = [chart.series(a) for a in chart.a_frame] + list(chart.f_frame)
    fwd = FormalMap(comps)
    try:
        inv = invert_map(fwd)
    except MapError as exc:
        raise ChartError("adaptation",
                         f"conjugate coordinates are not a polynomial automorphism: {exc}")
    chart.adapt_fwd = fwd
    chart.adapt_inv = inv
    om_ad = inv.pullback_two_form(chart.omega)
    if not (om_ad - standard_omega(chart.n, chart.dim, chart.n_t)).is_zero():
        raise ChartError("adaptation",
                         "transported symplectic form is not the standard constant one")
    chart.decomp = Decomposition.standard(chart.n, chart.n_t, chart.cutoff, orientation=-1)


def half_adaptation(chart: ChartData):
    """Coordinates (a_1..a_n, x_{n+1}..x_{2n}) and the transported Poisson rows."""
    dim, n_t, n = chart.dim, chart.n_t, chart.n
    comps = [chart.series(a) for a in chart.a_frame] + \
        [TruncSeries.from_poly(BasePoly.variable(dim, j), n_t) for j in range(n, dim)]
    fwd = FormalMap(comps)
    try:
        inv = invert_map(fwd)
    except MapError as exc:
        raise ChartError("adaptation",
                         f"the a-frame does not extend to polynomial coordinates: {exc}")
    jac = fwd.jacobian()
    pushed = jac * chart.phi * jac.transpose()
    phi_half = SeriesMatrix(dim, dim, n_t)
    for a in range(dim):
        for b in range(dim):
            phi_half.entries[a][b] = pushed.entries[a][b].eval_series(inv.components)
    return fwd, inv, phi_half


def find_conjugates(chart: ChartData) -> list:
    """Functions f_i with {f_i, a_j} = delta_ij and {f_i, f_j} = 0, exactly.

    Solved in half-adapted coordinates: first the polarization complex gives
    seeds g_i with d-bar g_i = -(d-bar)^i, then the pairwise-bracket defect,
    a closed O-two-form, is removed by a de Rham primitive with db = -g.
    """
    dim, n_t, n = chart.dim, chart.n_t, chart.n
    fwd, inv, phi_half = half_adaptation(chart)
    rows = [phi_half.entries[i][:] for i in range(n)]
    cx = PolarizationComplex(dim, n_t, rows)
    seeds = []
    for i in range(n):
        gamma = [TruncSeries.const(dim, n_t, -1 if j == i else 0) for j in range(n)]
        try:
            u = dolbeault_solve(cx, gamma)
        except SolveError as exc:
            raise ChartError("conjugate-construction", str(exc))
        seeds.append(u)
    defect = OForm(n, dim, n_t, 2)
    for i in range(n):
        for j in range(i + 1, n):
            gij = poisson_bracket(phi_half, seeds[i], seeds[j])
            if not gij.is_zero():
                defect.set((i, j), gij)
    if not defect.is_zero():
        try:
            b = de_rham_solve(defect.scale(-1))
        except SolveError as exc:
            raise ChartError("conjugate-construction",
                             f"pairwise-bracket defect is not removable: {exc}")
        seeds = [seeds[i] + b.get((i,)) for i in range(n)]
    return [fwd.pullback_function(s) for s in seeds]


def normalize_deformation(chart_a: ChartData, chart_b: ChartData, max_stages=None,
                          target_frame=None):
    """Formal automorphism carrying chart_a's (omega, a-frame) to chart_b's.

    Both charts must agree at t^0.  `target_frame` optionally replaces
    chart_b's a-frame with a t-deformed frame (TruncSeries list, same t^0,
    pairwise Poisson-commuting for chart_b's bracket).  Returns
    (psi, psi_inv, stages) with the transport convention f -> f o psi_inv
    and omega -> pullback under psi_inv; stages lists ("omega", k) and
    ("frame", k) steps.
    """
    n, dim, n_t = chart_a.n, chart_a.dim, chart_a.n_t
    if target_frame is None:
        target_frame = [chart_b.series(chart_b.a_frame[i]) for i in range(n)]
    else:
        target_frame = [chart_b.series(f) for f in target_frame]
        for i in range(n):
            for j in range(i + 1, n):
                br = poisson_bracket(chart_b.phi, target_frame[i], target_frame[j])
                if not br.is_zero():
                    raise ChartError("deformation",
                                     "target frame entries do not Poisson-commute")
    if (chart_b.omega.t_coefficient_matrix(0) != chart_a.omega.t_coefficient_matrix(0)
            or any(not (chart_a.series(chart_a.a_frame[i])
                        - target_frame[i]).coeffs[0].is_zero()
                   for i in range(n))):
        raise ChartError("deformation", "charts do not agree at t^0")
    psi = FormalMap.identity(dim, n_t)
    psi_inv = FormalMap.identity(dim, n_t)
    stages = []

    def omega_cur():
        return psi_inv.pullback_two_form(chart_a.omega)

    def a_cur(i):
        return psi_inv.pullback_function(chart_a.series(chart_a.a_frame[i]))

    budget = max_stages if max_stages is not None else 2 * n_t + 2
    # stage one: match the symplectic forms order by order
    for _ in range(budget):
        diff = chart_b.omega - omega_cur()
        if diff.is_zero():
            break
        order = min(e.order() for row in diff.entries for e in row if not e.is_zero())
        if order == 0:
            raise ChartError("deformation", "symplectic forms differ at t^0")
        poly_mat = SeriesMatrix(dim, dim, n_t)
        for i in range(dim):
            for j in range(dim):
                poly_mat.entries[i][j] = TruncSeries.from_poly(
                    diff.entries[i][j].coeffs[order], n_t)
        lam = poincare_primitive_two_form(poly_mat)
        phi_cur = invert_series_matrix(omega_cur())
        field = []
        for j in range(dim):
            acc = TruncSeries.zero(dim, n_t)
            for i in range(dim):
                if not phi_cur.entries[i][j].is_zero() and not lam[i].is_zero():
                    acc = acc + phi_cur.entries[i][j] * lam[i]
            field.append(acc)
        flow_inv = exp_flow([-f for f in field], order, dim, n_t)
        flow_fwd = exp_flow(field, order, dim, n_t)
        new_inv = psi_inv.compose(flow_inv)
        test = new_inv.pullback_two_form(chart_a.omega)
        resid = chart_b.omega - test
        new_order = min((e.order() for row in resid.entries for e in row
                         if not e.is_zero()), default=n_t + 1)
        if new_order <= order:
            # orientation of the sharp map flips with the wedge pin; use the inverse flow
            flow_fwd, flow_inv = flow_inv, flow_fwd
            new_inv = psi_inv.compose(flow_inv)
            test = new_inv.pullback_two_form(chart_a.omega)
            resid = chart_b.omega - test
            new_order = min((e.order() for row in resid.entries for e in row
                             if not e.is_zero()), default=n_t + 1)
            if new_order <= order:
                raise ChartError("deformation",
                                 f"flow failed to improve the match at order t^{order}")
        psi_inv = new_inv
        psi = flow_fwd.compose(psi)
        stages.append(("omega", order))
    diff = chart_b.omega - omega_cur()
    if not diff.is_zero():
        raise ChartError("deformation", "symplectic matching did not converge")

    # stage two: match the polarization frames with Hamiltonian flows
    cx = chart_b.polarization_complex_t0()
    fwd0 = [p.coeffs[0] for p in chart_b.adapt_fwd.components]
    inv0 = [p.coeffs[0] for p in chart_b.adapt_inv.components]
    for _ in range(budget):
        diffs = [target_frame[i] - a_cur(i) for i in range(n)]
        if all(d.is_zero() for d in diffs):
            break
        order = min(d.order() for d in diffs if not d.is_zero())
        if order == 0:
            raise ChartError("deformation", "a-frames differ at t^0")
        def _compose0(p, comps):
            if p.is_zero():
                return BasePoly.zero(dim)
            v = p.eval(comps)
            return v if isinstance(v, BasePoly) else BasePoly.const(dim, v)

        b_ad = [TruncSeries.from_poly(_compose0(diffs[i].coeffs[order], inv0), n_t)
                for i in range(n)]
        try:
            g_ad = dolbeault_solve(cx, b_ad)
        except SolveError as exc:
            raise ChartError("deformation", f"frame correction failed at t^{order}: {exc}")
        g = TruncSeries.from_poly(_compose0(g_ad.coeffs[0], fwd0), n_t)
        field = hamiltonian_field(chart_b.phi, g)
        improved = False
        for sign in (1, -1):
            f_inv = exp_flow([f.scale(-sign) for f in field], order, dim, n_t)
            f_fwd = exp_flow([f.scale(sign) for f in field], order, dim, n_t)
            new_inv = psi_inv.compose(f_inv)
            nd = [target_frame[i]
                  - new_inv.pullback_function(chart_a.series(chart_a.a_frame[i]))
                  for i in range(n)]
            new_order = min((d.order() for d in nd if not d.is_zero()), default=n_t + 1)
            if new_order > order:
                psi_inv = new_inv
                psi = f_fwd.compose(psi)
                stages.append(("frame", order))
                improved = True
                break
        if not improved:
            raise ChartError("deformation",
                             f"frame flow failed to improve the match at order t^{order}")
    diffs = [target_frame[i] - a_cur(i) for i in range(n)]
    if not all(d.is_zero() for d in diffs):
        raise ChartError("deformation", "frame matching did not converge")
    resid = chart_b.omega - omega_cur()
    if not resid.is_zero():
        raise ChartError("deformation", "frame flows disturbed the symplectic match")
    return psi, psi_inv, stages
