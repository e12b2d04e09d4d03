"""Constructions producing algebroids equipped with component tuples.

Every constructor output is meant to pass the generic checkers; the
test suite re-runs them on each constructed instance, so nothing here
is trusted on faith.
"""

from __future__ import annotations

from dataclasses import dataclass

from .rationals import Q
from .symkernel import Chart, PolyMap, ScalarFn, all_zero, freeze, zeros
from .geometry import (
    ConnectionData,
    ProductChart,
    ShapeMismatch,
    VectorField,
    check_projectable,
    chart_product,
    curvature_of,
    lie_derivative_connection,
    symmetric_part,
    torsion_of,
)
from .algebroid import AlgebroidData
from .imconn import IMConnComponents
from .jets import JetScope
from .reports import DefectReport


class ConstructionError(ValueError):
    """Constructor input violates a structural requirement."""

    def __init__(self, condition: str, message: str, details=None):
        super().__init__(message)
        self.condition = condition
        self.details = details


class ProjectabilityError(ConstructionError):
    pass


# -- vertical bundle of a fibration -------------------------------------------


def _coordinate_split(pi: PolyMap):
    """Base/fiber variable positions of a coordinate projection."""
    base_positions = []
    for comp in pi.components:
        if len(comp.terms) != 1:
            raise ConstructionError(
                "coordinate_projection", "projection components must be single variables"
            )
        (expo, coeff), = comp.iter_terms()
        if coeff != 1 or sum(expo) != 1:
            raise ConstructionError(
                "coordinate_projection", "projection components must be single variables"
            )
        base_positions.append(expo.index(1))
    fiber_positions = [i for i in range(pi.source.dim) if i not in base_positions]
    return base_positions, fiber_positions


def vertical_bundle_im(pi: PolyMap, section: PolyMap, nabla_m: ConnectionData):
    """Components on the vertical bundle of a coordinate projection.

    The base connection must project along ``pi`` (verified against the
    candidate solved along the section); the bundle connection is the
    restriction to vertical directions, the quadratic operator the
    derivative of the base connection along vertical frame fields, and
    the contraction map the vertical part of the torsion contracted with
    frame fields.
    """
    if nabla_m.base_chart != pi.source or not nabla_m.is_tangent():
        raise ShapeMismatch("need a tangent connection on the projection source")
    ok, _, rel = check_projectable(nabla_m, pi, section)
    if not ok:
        path, leaf = rel.witness()
        raise ProjectabilityError(
            "projectable_base_connection",
            "the base connection does not project along the fibration",
            (path, str(leaf)),
        )
    base_pos, fiber_pos = _coordinate_split(pi)
    chart = pi.source
    n = chart.dim
    r = len(fiber_pos)

    anchor = [
        [ScalarFn.const(chart, 1 if mu == fiber_pos[i] else 0) for mu in range(n)]
        for i in range(r)
    ]
    algebroid = AlgebroidData(chart, r, anchor, zeros(chart, r, r, r))

    ga = [
        [
            [nabla_m.gamma[mu][fiber_pos[i]][fiber_pos[j]] for j in range(r)]
            for i in range(r)
        ]
        for mu in range(n)
    ]

    f_op = []
    for i in range(r):
        lie = lie_derivative_connection(
            VectorField(
                chart,
                tuple(
                    ScalarFn.const(chart, 1 if mu == fiber_pos[i] else 0)
                    for mu in range(n)
                ),
            ),
            nabla_m,
        )
        for mu in range(n):
            for nu in range(n):
                for b in base_pos:
                    if not lie[mu][nu][b].is_zero():
                        raise ConstructionError(
                            "vertical_valued_derivative",
                            "derivative of the base connection leaves the vertical bundle",
                        )
        f_op.append(
            [
                [[lie[mu][nu][fiber_pos[k]] for k in range(r)] for nu in range(n)]
                for mu in range(n)
            ]
        )

    tm = torsion_of(nabla_m)
    for i in range(r):
        for nu in range(n):
            for b in base_pos:
                if not tm.comps[fiber_pos[i]][nu][b].is_zero():
                    raise ConstructionError(
                        "vertical_valued_torsion",
                        "torsion contracted with vertical directions leaves the vertical bundle",
                    )
    l_map = [
        [[tm.comps[fiber_pos[i]][nu][fiber_pos[k]] for k in range(r)] for nu in range(n)]
        for i in range(r)
    ]

    comps = IMConnComponents(
        algebroid,
        f_op,
        ConnectionData(chart, r, ga),
        nabla_m,
        l_map,
    )
    return algebroid, comps


def coordinate_projection(chart: Chart, base: Chart, base_vars: list[str]) -> tuple[PolyMap, PolyMap]:
    """Projection dropping all but the named variables, with the zero section."""
    pi = PolyMap(chart, base, tuple(ScalarFn.named_var(chart, v) for v in base_vars))
    section_comps = []
    for v in chart.vars:
        if v in base_vars:
            section_comps.append(ScalarFn.named_var(base, base.vars[base_vars.index(v)]))
        else:
            section_comps.append(ScalarFn.zero(base))
    section = PolyMap(base, chart, tuple(section_comps))
    return pi, section


# -- transitive algebroids with a flat structure connection --------------------


@dataclass(frozen=True)
class TransitiveAbelianData:
    """Inputs for the split transitive construction.

    The structure connection must be flat and the twisting 2-form
    closed for its covariant differential; both are verified here.
    """

    nabla_k: ConnectionData
    c_form: tuple  # [mu][nu][a], antisymmetric in (mu, nu)
    nabla_m: ConnectionData
    theta: tuple  # [mu][nu][a]

    def __post_init__(self):
        object.__setattr__(self, "c_form", freeze(self.c_form))
        object.__setattr__(self, "theta", freeze(self.theta))
        chart = self.nabla_k.base_chart
        n, k = chart.dim, self.nabla_k.rank
        if self.nabla_m.base_chart != chart or not self.nabla_m.is_tangent():
            raise ShapeMismatch("base connection must be tangent on the same chart")
        for arr, what in ((self.c_form, "twisting form"), (self.theta, "mixing tensor")):
            if len(arr) != n or any(len(row) != n for row in arr) or any(
                len(col) != k for row in arr for col in row
            ):
                raise ShapeMismatch(f"{what} must have shape dim x dim x rank")
        for mu in range(n):
            for nu in range(n):
                for a in range(k):
                    if not (self.c_form[mu][nu][a] + self.c_form[nu][mu][a]).is_zero():
                        raise ShapeMismatch("twisting form must be antisymmetric")
        if not all_zero(curvature_of(self.nabla_k)):
            raise ConstructionError(
                "flat_structure_connection", "the structure connection is not flat"
            )
        if not all_zero(self._covariant_differential()):
            raise ConstructionError(
                "closed_twisting_form",
                "the twisting form is not closed for the structure connection differential",
            )

    def _covariant_differential(self):
        chart = self.nabla_k.base_chart
        n, k = chart.dim, self.nabla_k.rank
        kap = self.nabla_k.gamma  # [mu][b][a]

        def cov(mu, nu, lam, a):
            acc = self.c_form[nu][lam][a].partial(mu)
            for b in range(k):
                g = kap[mu][b][a]
                if not g.is_zero():
                    acc = acc + g * self.c_form[nu][lam][b]
            return acc

        out = []
        for mu in range(n):
            for nu in range(n):
                for lam in range(n):
                    for a in range(k):
                        out.append(cov(mu, nu, lam, a) - cov(nu, mu, lam, a) + cov(lam, mu, nu, a))
        return tuple(out)


def transitive_abelian_im(data: TransitiveAbelianData):
    """Algebroid and component tuple of the split transitive construction.

    The frame is the coordinate frame followed by the structure-bundle
    frame.  Any base connection and mixing tensor are accepted; the
    checker validates the output.
    """
    chart = data.nabla_k.base_chart
    n, k = chart.dim, data.nabla_k.rank
    r = n + k
    kap = data.nabla_k.gamma
    g_m = data.nabla_m.gamma
    zero = ScalarFn.zero(chart)

    anchor = [
        [ScalarFn.const(chart, 1 if mu == i else 0) for mu in range(n)] for i in range(n)
    ] + [[zero for _ in range(n)] for _ in range(k)]

    structure = [[[zero for _ in range(r)] for _ in range(r)] for _ in range(r)]
    for mu in range(n):
        for nu in range(n):
            for a in range(k):
                structure[mu][nu][n + a] = -data.c_form[mu][nu][a]
        for b in range(k):
            for a in range(k):
                g = kap[mu][b][a]
                structure[mu][n + b][n + a] = g
                structure[n + b][mu][n + a] = -g
    algebroid = AlgebroidData(chart, r, anchor, structure)

    ga = [[[zero for _ in range(r)] for _ in range(r)] for _ in range(n)]
    for mu in range(n):
        for nu in range(n):
            for lam in range(n):
                ga[mu][nu][lam] = g_m[mu][nu][lam]
            for a in range(k):
                ga[mu][nu][n + a] = data.theta[mu][nu][a]
        for b in range(k):
            for a in range(k):
                ga[mu][n + b][n + a] = kap[mu][b][a]

    tm = torsion_of(data.nabla_m)
    l_map = [[[zero for _ in range(r)] for _ in range(n)] for _ in range(r)]
    for mu in range(n):
        for nu in range(n):
            for lam in range(n):
                l_map[mu][nu][lam] = tm.comps[mu][nu][lam]
            for a in range(k):
                l_map[mu][nu][n + a] = (
                    data.theta[mu][nu][a] - data.theta[nu][mu][a] + data.c_form[mu][nu][a]
                )

    f_op = [
        [[[zero for _ in range(r)] for _ in range(n)] for _ in range(n)]
        for _ in range(r)
    ]
    for mu in range(n):
        lie = None
        for nu in range(n):
            for lam in range(n):
                for sig in range(n):
                    f_op[mu][nu][lam][sig] = g_m[nu][lam][sig].partial(mu)
                for a in range(k):
                    acc = data.theta[nu][lam][a].partial(mu)
                    for b in range(k):
                        g = kap[mu][b][a]
                        if not g.is_zero():
                            acc = acc + g * data.theta[nu][lam][b]
                        g = kap[nu][b][a]
                        if not g.is_zero():
                            acc = acc + g * data.c_form[mu][lam][b]
                    acc = acc + data.c_form[mu][lam][a].partial(nu)
                    for sig in range(n):
                        g = g_m[nu][lam][sig]
                        if not g.is_zero():
                            acc = acc - g * data.c_form[mu][sig][a]
                    f_op[mu][nu][lam][n + a] = acc
    for b in range(k):
        for nu in range(n):
            for lam in range(n):
                for a in range(k):
                    acc = kap[lam][b][a].partial(nu)
                    for c in range(k):
                        g = kap[nu][c][a]
                        if not g.is_zero():
                            acc = acc + g * kap[lam][b][c]
                    for sig in range(n):
                        g = g_m[nu][lam][sig]
                        if not g.is_zero():
                            acc = acc - g * kap[sig][b][a]
                    f_op[n + b][nu][lam][n + a] = acc

    comps = IMConnComponents(
        algebroid,
        f_op,
        ConnectionData(chart, r, ga),
        data.nabla_m,
        l_map,
    )
    return algebroid, comps


def transitive_abelian_extract(comps: IMConnComponents, k: int):
    """Recover the free parameters (base connection, mixing tensor) from a
    constructed component tuple; inverse of the construction."""
    chart = comps.algebroid.base
    n = chart.dim
    theta = [
        [[comps.conn_a.gamma[mu][nu][n + a] for a in range(k)] for nu in range(n)]
        for mu in range(n)
    ]
    return comps.conn_m, freeze(theta)


# -- secondary components ------------------------------------------------------


@dataclass(frozen=True)
class SecondaryComponents:
    """Free data of a symmetric fiber-wise linear connection: a bundle
    connection, a symmetric base connection, and a symmetric quadratic
    bundle map with no relations between them."""

    nabla_a: ConnectionData
    nabla_m: ConnectionData
    fmap: tuple  # [i][mu][nu][k], symmetric in (mu, nu)

    def __post_init__(self):
        object.__setattr__(self, "fmap", freeze(self.fmap))
        chart = self.nabla_a.base_chart
        n, r = chart.dim, self.nabla_a.rank
        if self.nabla_m.base_chart != chart or not self.nabla_m.is_tangent():
            raise ShapeMismatch("base connection must be tangent on the same chart")
        if not all_zero(torsion_of(self.nabla_m).comps):
            raise ConstructionError(
                "symmetric_base_connection", "the base connection must be torsion-free"
            )
        for i in range(r):
            for mu in range(n):
                for nu in range(n):
                    for kk in range(r):
                        if not (self.fmap[i][mu][nu][kk] - self.fmap[i][nu][mu][kk]).is_zero():
                            raise ConstructionError(
                                "symmetric_quadratic_map",
                                "the quadratic bundle map must be symmetric",
                            )


def quadratic_left_inverse(nabla_a: ConnectionData, nabla_m: ConnectionData):
    """Frame values of the canonical second-order operator determined by
    the two connections alone (symmetrized second derivative minus the
    transport along the base connection)."""
    chart = nabla_a.base_chart
    n, r = chart.dim, nabla_a.rank
    ga = nabla_a.gamma
    gm = nabla_m.gamma
    half = Q(1, 2)
    out = []
    for i in range(r):
        rows = []
        for mu in range(n):
            row = []
            for nu in range(n):
                entry = []
                for kk in range(r):
                    acc = (ga[nu][i][kk].partial(mu) + ga[mu][i][kk].partial(nu)) * half
                    for j in range(r):
                        acc = acc + (ga[nu][i][j] * ga[mu][j][kk] + ga[mu][i][j] * ga[nu][j][kk]) * half
                    for lam in range(n):
                        g = gm[mu][nu][lam]
                        if not g.is_zero():
                            acc = acc - g * ga[lam][i][kk]
                    entry.append(acc)
                row.append(entry)
            rows.append(row)
        out.append(rows)
    return freeze(out)


def secondary_to_plain(sec: SecondaryComponents, algebroid: AlgebroidData) -> IMConnComponents:
    chart = algebroid.base
    n, r = chart.dim, algebroid.rank
    base = quadratic_left_inverse(sec.nabla_a, sec.nabla_m)
    f_op = [
        [
            [
                [base[i][mu][nu][kk] + sec.fmap[i][mu][nu][kk] for kk in range(r)]
                for nu in range(n)
            ]
            for mu in range(n)
        ]
        for i in range(r)
    ]
    return IMConnComponents(
        algebroid, f_op, sec.nabla_a, sec.nabla_m, zeros(chart, r, n, r)
    )


def plain_to_secondary(comps: IMConnComponents) -> SecondaryComponents:
    n, r = comps.algebroid.base.dim, comps.algebroid.rank
    if not all_zero(comps.l_map):
        raise ConstructionError(
            "vanishing_contraction_map", "secondary form needs a zero contraction map"
        )
    for i in range(r):
        for mu in range(n):
            for nu in range(n):
                for kk in range(r):
                    if not (comps.f_op[i][mu][nu][kk] - comps.f_op[i][nu][mu][kk]).is_zero():
                        raise ConstructionError(
                            "symmetric_quadratic_operator",
                            "secondary form needs symmetric operator values",
                        )
    base = quadratic_left_inverse(comps.conn_a, comps.conn_m)
    fmap = [
        [
            [
                [comps.f_op[i][mu][nu][kk] - base[i][mu][nu][kk] for kk in range(r)]
                for nu in range(n)
            ]
            for mu in range(n)
        ]
        for i in range(r)
    ]
    return SecondaryComponents(comps.conn_a, comps.conn_m, fmap)


# -- the flat-bundle-connection criterion ---------------------------------------


@dataclass(frozen=True)
class FlatSecondaryResult:
    report: DefectReport
    criteria_pass: bool
    plain_check_pass: bool
    agree: bool


def check_flat_secondary(
    sec: SecondaryComponents, algebroid: AlgebroidData, jet_degree: int = 2
) -> FlatSecondaryResult:
    """Five pointwise criteria equivalent (for a flat bundle connection)
    to the component tuple assembled from the secondary data passing the
    full checker; both routes are computed and compared."""
    from .imconn import check_im_connection
    from .algebroid import _bracket_raw

    if not all_zero(curvature_of(sec.nabla_a)):
        raise ConstructionError(
            "flat_bundle_connection", "the bundle connection is not flat"
        )
    chart = algebroid.base
    n, r = chart.dim, algebroid.rank
    report = DefectReport()

    scope = JetScope.build(chart, [("a", r), ("b", r)], jet_degree)
    ch = scope.chart
    anchor = scope.lift_all(algebroid.anchor)
    structure = scope.lift_all(algebroid.structure)
    ga = scope.lift_all(sec.nabla_a.gamma)
    a = scope.generic("a")
    b = scope.generic("b")

    def rho(u):
        return tuple(
            sum(
                (anchor[i][mu] * u[i] for i in range(r) if not anchor[i][mu].is_zero()),
                ScalarFn.zero(ch),
            )
            for mu in range(n)
        )

    def nab(x, u):
        out = []
        for kk in range(r):
            acc = ScalarFn.zero(ch)
            for mu in range(n):
                term = u[kk].partial(mu)
                for i in range(r):
                    g = ga[mu][i][kk]
                    if not g.is_zero():
                        term = term + g * u[i]
                if not x[mu].is_zero():
                    acc = acc + x[mu] * term
            out.append(acc)
        return out

    br = _bracket_raw(anchor, structure, n, r, a, b, ch)
    na = nab(rho(a), b)
    nb = nab(rho(b), a)
    report.add("flat_bracket", tuple(br[kk] - na[kk] + nb[kk] for kk in range(r)))

    par = []
    gm = sec.nabla_m.gamma
    for mu in range(n):
        for i in range(r):
            for lam in range(n):
                acc = algebroid.anchor[i][lam].partial(mu)
                for nu in range(n):
                    g = gm[mu][nu][lam]
                    if not g.is_zero():
                        acc = acc + g * algebroid.anchor[i][nu]
                for j in range(r):
                    g = sec.nabla_a.gamma[mu][i][j]
                    if not g.is_zero():
                        acc = acc - g * algebroid.anchor[j][lam]
                par.append(acc)
    report.add("anchor_parallel", tuple(par))

    rm = curvature_of(sec.nabla_m)
    anchor_quad = []
    for i in range(r):
        for mu in range(n):
            for nu in range(n):
                for lam in range(n):
                    acc = ScalarFn.zero(chart)
                    for kk in range(r):
                        g = algebroid.anchor[kk][lam]
                        if not g.is_zero():
                            acc = acc + g * sec.fmap[i][mu][nu][kk]
                    for sig in range(n):
                        g = algebroid.anchor[i][sig]
                        if not g.is_zero():
                            acc = acc - g * rm[sig][mu][nu][lam]
                    anchor_quad.append(acc)
    report.add("anchor_of_quadratic_map", tuple(anchor_quad))

    ortho = []
    for i in range(r):
        for j in range(r):
            for nu in range(n):
                for kk in range(r):
                    acc = ScalarFn.zero(chart)
                    for mu in range(n):
                        g = algebroid.anchor[j][mu]
                        if not g.is_zero():
                            acc = acc + g * sec.fmap[i][mu][nu][kk]
                    ortho.append(acc)
    report.add("quadratic_map_anchor_orthogonal", tuple(ortho))

    def covar_f(mu, i, nu, lam, kk):
        acc = sec.fmap[i][nu][lam][kk].partial(mu)
        for sig in range(n):
            g = gm[mu][nu][sig]
            if not g.is_zero():
                acc = acc - g * sec.fmap[i][sig][lam][kk]
            g = gm[mu][lam][sig]
            if not g.is_zero():
                acc = acc - g * sec.fmap[i][nu][sig][kk]
        for j in range(r):
            g = sec.nabla_a.gamma[mu][j][kk]
            if not g.is_zero():
                acc = acc + g * sec.fmap[i][nu][lam][j]
            g = sec.nabla_a.gamma[mu][i][j]
            if not g.is_zero():
                acc = acc - g * sec.fmap[j][nu][lam][kk]
        return acc

    sym = []
    for i in range(r):
        for j in range(r):
            for nu in range(n):
                for lam in range(n):
                    for kk in range(r):
                        acc = ScalarFn.zero(chart)
                        for mu in range(n):
                            g = algebroid.anchor[i][mu]
                            if not g.is_zero():
                                acc = acc + g * covar_f(mu, j, nu, lam, kk)
                            g = algebroid.anchor[j][mu]
                            if not g.is_zero():
                                acc = acc - g * covar_f(mu, i, nu, lam, kk)
                        sym.append(acc)
    report.add("quadratic_map_symmetric_derivative", tuple(sym))

    plain = secondary_to_plain(sec, algebroid)
    plain_pass = check_im_connection(plain, jet_degree).passed
    return FlatSecondaryResult(
        report, report.passed, plain_pass, report.passed == plain_pass
    )


# -- the nilpotent group toy family ---------------------------------------------


HEISENBERG_STRUCTURE = {(1, 2): (1, 0, 0), (2, 1): (-1, 0, 0)}
# brackets of the abstract frame: only the (second, third) pair is nonzero,
# landing on the first frame vector


def heisenberg_bracket(v, w):
    """Bracket of coefficient triples in the step-2 nilpotent model."""
    coeff = v[1] * w[2] - v[2] * w[1]
    return (coeff, Q(0), Q(0))


@dataclass(frozen=True)
class GroupModel:
    chart: Chart
    product: ProductChart
    mult: PolyMap
    inverse: PolyMap
    frame: tuple          # frame[i][lam]: invariant frame in coordinates
    coframe: tuple        # coframe[i][lam]: coordinate fields in the frame


def heisenberg_group() -> GroupModel:
    """Polynomial model of the step-2 nilpotent group on three coordinates."""
    g = Chart("H", ("x1", "x2", "x3"))
    prod = chart_product("HxH", [g, g])
    pc = prod.chart
    a1, a2, a3, b1, b2, b3 = (ScalarFn.named_var(pc, v) for v in pc.vars)
    mult = PolyMap(pc, g, (a1 + b1, a2 + b2, a3 + b3 + a1 * b2))
    x1, x2, x3 = (ScalarFn.named_var(g, v) for v in g.vars)
    inverse = PolyMap(g, g, (-x1, -x2, -x3 + x1 * x2))
    zero = ScalarFn.zero(g)
    one = ScalarFn.const(g, 1)
    frame = (
        (zero, zero, one),          # first frame vector: last coordinate direction
        (zero, one, zero),          # second: middle direction
        (one, zero, x2),            # third: first direction plus x2 times last
    )
    # coframe rows express coordinate fields in the frame, [coordinate][frame
    # index]: the first coordinate field is frame3 minus x2 frame1
    coframe = (
        (-x2, zero, one),
        (zero, one, zero),
        (one, zero, zero),
    )
    return GroupModel(g, prod, mult, inverse, freeze(frame), freeze(coframe))


def right_invariant_connection(model: GroupModel) -> ConnectionData:
    """The flat connection whose parallel sections are the invariant frame."""
    g = model.chart
    n = g.dim
    gamma = [[[ScalarFn.zero(g) for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for mu in range(n):
        for nu in range(n):
            for i in range(n):
                d = model.coframe[nu][i].partial(mu)
                if d.is_zero():
                    continue
                for lam in range(n):
                    e = model.frame[i][lam]
                    if not e.is_zero():
                        gamma[mu][nu][lam] = gamma[mu][nu][lam] + d * e
    return ConnectionData(g, n, gamma)


class ToyConditionError(ConstructionError):
    pass


@dataclass(frozen=True)
class HeisenbergToy:
    endomorphism: tuple
    model: GroupModel
    flat_connection: ConnectionData      # invariant-frame flat connection, coordinates
    base_connection: ConnectionData      # its symmetric part
    algebroid: AlgebroidData
    components: IMConnComponents


def heisenberg_toy(r_matrix) -> HeisenbergToy:
    """Anchor the tangent bundle of the nilpotent group through a constant
    endomorphism of the frame and equip it with the symmetric component
    tuple built from the invariant flat connection.

    The endomorphism must kill the derived subalgebra and its image must
    bracket to zero twice; violations are reported with the witnessing
    frame indices.
    """
    rmat = tuple(tuple(Q(x) for x in row) for row in r_matrix)
    if len(rmat) != 3 or any(len(row) != 3 for row in rmat):
        raise ShapeMismatch("endomorphism must be a 3x3 rational matrix")

    basis = [
        (Q(1), Q(0), Q(0)),
        (Q(0), Q(1), Q(0)),
        (Q(0), Q(0), Q(1)),
    ]

    def apply_r(v):
        return tuple(sum((rmat[i][j] * v[j] for j in range(3)), Q(0)) for i in range(3))

    for i in range(3):
        for j in range(3):
            br = heisenberg_bracket(basis[i], basis[j])
            if any(x != 0 for x in apply_r(br)):
                raise ToyConditionError(
                    "bracket_image_in_kernel",
                    "the endomorphism does not kill frame brackets",
                    (i + 1, j + 1),
                )
    for i in range(3):
        for j in range(3):
            for k in range(3):
                inner = heisenberg_bracket(apply_r(basis[i]), basis[j])
                if any(x != 0 for x in heisenberg_bracket(inner, basis[k])):
                    raise ToyConditionError(
                        "image_brackets_twice_to_zero",
                        "double brackets of the endomorphism image do not vanish",
                        (i + 1, j + 1, k + 1),
                    )

    model = heisenberg_group()
    g = model.chart
    flat = right_invariant_connection(model)
    base = symmetric_part(flat)

    # anchor of the i-th frame section: the invariant extension of the
    # image of the i-th frame vector
    anchor = []
    for i in range(3):
        row = []
        for lam in range(3):
            acc = ScalarFn.zero(g)
            for j in range(3):
                if rmat[j][i] != 0:
                    acc = acc + model.frame[j][lam] * rmat[j][i]
            row.append(acc)
        anchor.append(row)
    algebroid = AlgebroidData(g, 3, anchor, zeros(g, 3, 3, 3))

    sec = SecondaryComponents(
        ConnectionData.flat(g, 3),  # the flat connection has zero Christoffels in the frame
        base,
        zeros(g, 3, 3, 3, 3),
    )
    comps = secondary_to_plain(sec, algebroid)
    return HeisenbergToy(rmat, model, flat, base, algebroid, comps)
