"""Coordinate Lie groupoids with polynomial structure maps.

Fiber products of arrows are explicit parametrized charts with
polynomial embeddings and retractions, so every compatibility statement
becomes an exact identity between polynomial maps.  Supported built-in
families: pair and submersion groupoids of coordinate projections, and
group groupoids over a point (abelian and the step-2 nilpotent model).

Cochain conventions for the degree complex attached to same-source
tuples of arrows:

* degree -1: ``comps[i][mu][nu]`` on the object chart (values in the
  kernel frame of the source differential along units),
* degree 0: ``comps[a][A][B]`` on the arrow chart, an s-projectable
  (2,1)-tensor with M-projection ``m_proj[mu][nu][lam]``,
* degree 1: ``comps[a][A][B]`` on the same-source pair chart, values at
  the division point, M-projection on the arrow chart with values at
  the target,
* degree 2: ``comps[a][A][B]`` on the same-source triple chart, values
  at the division of the first two arrows, M-projection on the pair
  chart.
"""

from __future__ import annotations

from dataclasses import dataclass

from .rationals import Q
from .reports import DefectReport
from .symkernel import (
    Chart,
    PolyMap,
    ScalarFn,
    all_zero,
    first_nonzero,
    freeze,
    jacobian,
    map_scalars,
    pullback,
    zeros,
)
from .geometry import (
    ConnectionData,
    FiberedChart,
    MalformedFiberedChart,
    ProductChart,
    Relatedness,
    ShapeMismatch,
    TensorField,
    VectorField,
    chart_product,
    check_related_connections,
    check_related_tensors,
    check_related_vector_fields,
    connection_difference,
    connection_minus_tensor,
    geodesic_spray,
    pair_map,
    product_connection,
    product_tensor21,
    project_connection,
    restrict_tensor21,
    restrict_to_fibered,
    tangent_chart,
    tangent_lift,
    torsion_of,
)
from .algebroid import AlgebroidData
from .imconn import IMConnComponents
from .constructors import heisenberg_group
from .linsolve import solve_exact


class GroupoidError(ValueError):
    pass


class NotProjectable(GroupoidError):
    pass


class NotMultiplicative(GroupoidError):
    pass


@dataclass(frozen=True)
class TupleChart:
    """A parametrized chart of arrow tuples inside an explicit product."""

    chart: Chart
    product: ProductChart
    embed: PolyMap
    retract: PolyMap

    def __post_init__(self):
        if self.retract.compose(self.embed) != PolyMap.identity(self.chart):
            raise MalformedFiberedChart("tuple chart retraction is not a left inverse")

    def proj(self, k: int) -> PolyMap:
        return self.product.projections[k].compose(self.embed)


def located_map(tup, maps: list[PolyMap]) -> PolyMap:
    """Parametrize the tuple of maps inside a tuple/fibered chart.

    Verified: embedding the result reproduces the tuple of maps, which
    certifies the composite independently of the retraction choice.
    """
    paired = pair_map(maps, tup.product)
    into = tup.retract.compose(paired)
    if tup.embed.compose(into) != paired:
        raise MalformedFiberedChart("maps do not land in the parametrized locus")
    return into


@dataclass(frozen=True)
class CoordGroupoid:
    kind: str
    chart_g: Chart
    chart_m: Chart
    source: PolyMap
    target: PolyMap
    unit: PolyMap
    inverse: PolyMap
    composable: FiberedChart
    mult: PolyMap
    same_source: FiberedChart
    division: PolyMap
    triples: TupleChart
    comp_triples: TupleChart
    algebroid: AlgebroidData
    a_frame: tuple        # [i][A] on chart_m: kernel frame along units
    unit_proj: tuple      # [i][A] on chart_m: projection onto the frame
    invariant_frames: tuple  # [i][A] on chart_g: invariant extensions

    def f_map(self, i: int, j: int) -> PolyMap:
        """Division of the i-th and j-th entries of a same-source triple."""
        point = located_map(
            self.same_source, [self.triples.proj(i), self.triples.proj(j)]
        )
        return self.division.compose(point)

    def epsilon(self, which: int) -> PolyMap:
        """Embeddings of arrows into composable pairs (unit on the other leg)."""
        if which == 1:
            maps = [self.unit.compose(self.target), PolyMap.identity(self.chart_g)]
        else:
            maps = [PolyMap.identity(self.chart_g), self.unit.compose(self.source)]
        return located_map(self.composable, maps)

    # -- structural identities -------------------------------------------------

    def check_axioms(self) -> DefectReport:
        report = DefectReport()
        g_id = PolyMap.identity(self.chart_g)
        m_id = PolyMap.identity(self.chart_m)

        def map_defect(name, left, right):
            defect = tuple(a - b for a, b in zip(left.components, right.components))
            report.add(name, defect)

        map_defect("source_of_unit", self.source.compose(self.unit), m_id)
        map_defect("target_of_unit", self.target.compose(self.unit), m_id)
        map_defect("inverse_involution", self.inverse.compose(self.inverse), g_id)
        map_defect("source_of_inverse", self.source.compose(self.inverse), self.target)
        map_defect("target_of_inverse", self.target.compose(self.inverse), self.source)

        pr1, pr2 = (self.same_source.proj(k) for k in (0, 1))
        map_defect(
            "source_of_division",
            self.source.compose(self.division),
            self.target.compose(pr2),
        )
        map_defect(
            "target_of_division",
            self.target.compose(self.division),
            self.target.compose(pr1),
        )

        map_defect("left_unit_law", self.mult.compose(self.epsilon(1)), g_id)
        map_defect("right_unit_law", self.mult.compose(self.epsilon(2)), g_id)

        with_inverse = located_map(self.composable, [g_id, self.inverse])
        map_defect(
            "right_inverse_law",
            self.mult.compose(with_inverse),
            self.unit.compose(self.target),
        )
        inv_first = located_map(self.composable, [self.inverse, g_id])
        map_defect(
            "left_inverse_law",
            self.mult.compose(inv_first),
            self.unit.compose(self.source),
        )

        p1, p2, p3 = (self.comp_triples.proj(k) for k in range(3))
        m12 = self.mult.compose(located_map(self.composable, [p1, p2]))
        m23 = self.mult.compose(located_map(self.composable, [p2, p3]))
        left = self.mult.compose(located_map(self.composable, [m12, p3]))
        right = self.mult.compose(located_map(self.composable, [p1, m23]))
        map_defect("associativity", left, right)

        div_via_mult = self.mult.compose(
            located_map(self.composable, [pr1, self.inverse.compose(pr2)])
        )
        map_defect("division_via_inverse", self.division, div_via_mult)

        f12 = self.f_map(0, 1)
        f13 = self.f_map(0, 2)
        f23 = self.f_map(1, 2)
        chained = self.division.compose(located_map(self.same_source, [f13, f23]))
        map_defect("triple_division_compatibility", chained, f12)
        return report


# -- built-in families ----------------------------------------------------------


def builtin_groupoid(kind: str, **params) -> CoordGroupoid:
    if kind == "pair":
        return _submersion_groupoid(0, params.get("dim", 1), "pair")
    if kind == "submersion":
        return _submersion_groupoid(params["base_dim"], params["fiber_dim"], "submersion")
    if kind == "abelian":
        return _group_groupoid_abelian(params.get("dim", 1))
    if kind == "heisenberg":
        return _group_groupoid_heisenberg()
    raise GroupoidError(f"unknown built-in groupoid kind {kind!r}")


def _submersion_groupoid(b: int, f: int, kind: str) -> CoordGroupoid:
    if f < 1 or b < 0:
        raise GroupoidError("need at least one fiber dimension")
    base_vars = tuple(f"b{i + 1}" for i in range(b))
    m_chart = Chart("M", base_vars + tuple(f"y{i + 1}" for i in range(f)))
    g_chart = Chart(
        "G",
        base_vars
        + tuple(f"p{i + 1}" for i in range(f))
        + tuple(f"q{i + 1}" for i in range(f)),
    )

    def gv(name):
        return ScalarFn.named_var(g_chart, name)

    def mv(name):
        return ScalarFn.named_var(m_chart, name)

    bs = [gv(v) for v in base_vars]
    ps = [gv(f"p{i + 1}") for i in range(f)]
    qs = [gv(f"q{i + 1}") for i in range(f)]
    source = PolyMap(g_chart, m_chart, tuple(bs + qs))
    target = PolyMap(g_chart, m_chart, tuple(bs + ps))
    mb = [mv(v) for v in base_vars]
    my = [mv(f"y{i + 1}") for i in range(f)]
    unit = PolyMap(m_chart, g_chart, tuple(mb + my + my))
    inverse = PolyMap(g_chart, g_chart, tuple(bs + qs + ps))

    prod = chart_product("GxG", [g_chart, g_chart])
    pc = prod.chart

    def pv(name):
        return ScalarFn.named_var(pc, name)

    # composable pairs: source of the first arrow equals target of the second
    comp_chart = Chart(
        "G2c",
        base_vars
        + tuple(f"p{i + 1}" for i in range(f))
        + tuple(f"w{i + 1}" for i in range(f))
        + tuple(f"q{i + 1}" for i in range(f)),
    )

    def cv(name):
        return ScalarFn.named_var(comp_chart, name)

    cb = [cv(v) for v in base_vars]
    cp = [cv(f"p{i + 1}") for i in range(f)]
    cw = [cv(f"w{i + 1}") for i in range(f)]
    cq = [cv(f"q{i + 1}") for i in range(f)]
    comp_embed = PolyMap(comp_chart, pc, tuple(cb + cp + cw + cb + cw + cq))
    comp_retract = PolyMap(
        pc,
        comp_chart,
        tuple(
            [pv(v + "_1") for v in base_vars]
            + [pv(f"p{i + 1}_1") for i in range(f)]
            + [pv(f"q{i + 1}_1") for i in range(f)]
            + [pv(f"q{i + 1}_2") for i in range(f)]
        ),
    )
    composable = FiberedChart(
        chart=comp_chart,
        product=prod,
        embed=comp_embed,
        retract=comp_retract,
        base=m_chart,
        sigma=source,
        tau=target,
        sigma_section=unit,
    )
    mult = PolyMap(comp_chart, g_chart, tuple(cb + cp + cq))

    # same-source pairs
    div_chart = Chart(
        "G2s",
        base_vars
        + tuple(f"p{i + 1}" for i in range(f))
        + tuple(f"w{i + 1}" for i in range(f))
        + tuple(f"q{i + 1}" for i in range(f)),
    )

    def dv(name):
        return ScalarFn.named_var(div_chart, name)

    db = [dv(v) for v in base_vars]
    dp = [dv(f"p{i + 1}") for i in range(f)]
    dw = [dv(f"w{i + 1}") for i in range(f)]
    dq = [dv(f"q{i + 1}") for i in range(f)]
    ss_embed = PolyMap(div_chart, pc, tuple(db + dp + dq + db + dw + dq))
    ss_retract = PolyMap(
        pc,
        div_chart,
        tuple(
            [pv(v + "_1") for v in base_vars]
            + [pv(f"p{i + 1}_1") for i in range(f)]
            + [pv(f"p{i + 1}_2") for i in range(f)]
            + [pv(f"q{i + 1}_1") for i in range(f)]
        ),
    )
    same_source = FiberedChart(
        chart=div_chart,
        product=prod,
        embed=ss_embed,
        retract=ss_retract,
        base=m_chart,
        sigma=source,
        tau=source,
        sigma_section=unit,
    )
    division = PolyMap(div_chart, g_chart, tuple(db + dp + dw))

    prod3 = chart_product("GxGxG", [g_chart, g_chart, g_chart])
    p3c = prod3.chart

    def p3v(name):
        return ScalarFn.named_var(p3c, name)

    tri_chart = Chart(
        "G3s",
        base_vars
        + tuple(f"p{i + 1}_a" for i in range(f))
        + tuple(f"p{i + 1}_b" for i in range(f))
        + tuple(f"p{i + 1}_c" for i in range(f))
        + tuple(f"q{i + 1}" for i in range(f)),
    )

    def tv(name):
        return ScalarFn.named_var(tri_chart, name)

    tb = [tv(v) for v in base_vars]
    ta = [tv(f"p{i + 1}_a") for i in range(f)]
    tbb = [tv(f"p{i + 1}_b") for i in range(f)]
    tc = [tv(f"p{i + 1}_c") for i in range(f)]
    tq = [tv(f"q{i + 1}") for i in range(f)]
    tri_embed = PolyMap(
        tri_chart, p3c, tuple(tb + ta + tq + tb + tbb + tq + tb + tc + tq)
    )
    tri_retract = PolyMap(
        p3c,
        tri_chart,
        tuple(
            [p3v(v + "_1") for v in base_vars]
            + [p3v(f"p{i + 1}_1") for i in range(f)]
            + [p3v(f"p{i + 1}_2") for i in range(f)]
            + [p3v(f"p{i + 1}_3") for i in range(f)]
            + [p3v(f"q{i + 1}_1") for i in range(f)]
        ),
    )
    triples = TupleChart(tri_chart, prod3, tri_embed, tri_retract)

    ctri_chart = Chart(
        "G3c",
        base_vars
        + tuple(f"p{i + 1}" for i in range(f))
        + tuple(f"w{i + 1}" for i in range(f))
        + tuple(f"v{i + 1}" for i in range(f))
        + tuple(f"q{i + 1}" for i in range(f)),
    )

    def ct(name):
        return ScalarFn.named_var(ctri_chart, name)

    ctb = [ct(v) for v in base_vars]
    ctp = [ct(f"p{i + 1}") for i in range(f)]
    ctw = [ct(f"w{i + 1}") for i in range(f)]
    ctv = [ct(f"v{i + 1}") for i in range(f)]
    ctq = [ct(f"q{i + 1}") for i in range(f)]
    ctri_embed = PolyMap(
        ctri_chart, p3c, tuple(ctb + ctp + ctw + ctb + ctw + ctv + ctb + ctv + ctq)
    )
    ctri_retract = PolyMap(
        p3c,
        ctri_chart,
        tuple(
            [p3v(v + "_1") for v in base_vars]
            + [p3v(f"p{i + 1}_1") for i in range(f)]
            + [p3v(f"q{i + 1}_1") for i in range(f)]
            + [p3v(f"q{i + 1}_2") for i in range(f)]
            + [p3v(f"q{i + 1}_3") for i in range(f)]
        ),
    )
    comp_triples = TupleChart(ctri_chart, prod3, ctri_embed, ctri_retract)

    # vertical algebroid data: fibers of the object chart
    anchor = [
        [ScalarFn.const(m_chart, 1 if mu == b + i else 0) for mu in range(m_chart.dim)]
        for i in range(f)
    ]
    algebroid = AlgebroidData(m_chart, f, anchor, zeros(m_chart, f, f, f))

    a_frame = [
        [ScalarFn.const(m_chart, 1 if A == b + i else 0) for A in range(g_chart.dim)]
        for i in range(f)
    ]
    unit_proj = [
        [
            ScalarFn.const(
                m_chart, 1 if A == b + i else (-1 if A == b + f + i else 0)
            )
            for A in range(g_chart.dim)
        ]
        for i in range(f)
    ]
    invariant_frames = [
        [ScalarFn.const(g_chart, 1 if A == b + i else 0) for A in range(g_chart.dim)]
        for i in range(f)
    ]
    return CoordGroupoid(
        kind,
        g_chart,
        m_chart,
        source,
        target,
        unit,
        inverse,
        composable,
        mult,
        same_source,
        division,
        triples,
        comp_triples,
        algebroid,
        freeze(a_frame),
        freeze(unit_proj),
        freeze(invariant_frames),
    )


def _group_groupoid(
    kind: str,
    g_chart: Chart,
    prod: ProductChart,
    mult_map: PolyMap,
    inverse: PolyMap,
    frames,
    structure,
):
    m_chart = Chart("pt", ())
    source = PolyMap(g_chart, m_chart, ())
    target = PolyMap(g_chart, m_chart, ())
    unit = PolyMap(m_chart, g_chart, tuple(ScalarFn.zero(m_chart) for _ in g_chart.vars))

    ident = PolyMap.identity(prod.chart)
    composable = FiberedChart(
        chart=prod.chart,
        product=prod,
        embed=ident,
        retract=ident,
        base=m_chart,
        sigma=source,
        tau=target,
        sigma_section=unit,
    )
    same_source = FiberedChart(
        chart=prod.chart,
        product=prod,
        embed=ident,
        retract=ident,
        base=m_chart,
        sigma=source,
        tau=source,
        sigma_section=unit,
    )
    division = mult_map.compose(
        pair_map([prod.projections[0], inverse.compose(prod.projections[1])], prod)
    )

    prod3 = chart_product(g_chart.name + "3", [g_chart, g_chart, g_chart])
    ident3 = PolyMap.identity(prod3.chart)
    triples = TupleChart(prod3.chart, prod3, ident3, ident3)
    comp_triples = triples

    n = g_chart.dim
    algebroid = AlgebroidData(
        m_chart,
        n,
        tuple(() for _ in range(n)),
        structure,
        fiber_names=tuple(f"u{i + 1}" for i in range(n)),
    )
    a_frame = [
        [ScalarFn.const(m_chart, 1 if A == i else 0) for A in range(n)] for i in range(n)
    ]
    unit_proj = a_frame
    return CoordGroupoid(
        kind,
        g_chart,
        m_chart,
        source,
        target,
        unit,
        inverse,
        composable,
        mult_map,
        same_source,
        division,
        triples,
        comp_triples,
        algebroid,
        freeze(a_frame),
        freeze(unit_proj),
        freeze(frames),
    )


def _group_groupoid_abelian(dim: int) -> CoordGroupoid:
    g_chart = Chart("V", tuple(f"x{i + 1}" for i in range(dim)))
    prod = chart_product("VxV", [g_chart, g_chart])
    pc = prod.chart
    mult_map = PolyMap(
        pc,
        g_chart,
        tuple(
            ScalarFn.named_var(pc, f"x{i + 1}_1") + ScalarFn.named_var(pc, f"x{i + 1}_2")
            for i in range(dim)
        ),
    )
    inverse = PolyMap(
        g_chart, g_chart, tuple(-ScalarFn.var(g_chart, i) for i in range(dim))
    )
    frames = [
        [ScalarFn.const(g_chart, 1 if A == i else 0) for A in range(dim)]
        for i in range(dim)
    ]
    m_chart = Chart("pt", ())
    structure = zeros(m_chart, dim, dim, dim)
    return _group_groupoid("abelian", g_chart, prod, mult_map, inverse, frames, structure)


def _group_groupoid_heisenberg() -> CoordGroupoid:
    model = heisenberg_group()
    m_chart = Chart("pt", ())
    zero = ScalarFn.zero(m_chart)
    one = ScalarFn.const(m_chart, 1)
    structure = [[[zero for _ in range(3)] for _ in range(3)] for _ in range(3)]
    structure[1][2][0] = one
    structure[2][1][0] = -one
    return _group_groupoid(
        "heisenberg",
        model.chart,
        model.product,
        model.mult,
        model.inverse,
        model.frame,
        structure,
    )


# -- projectability and multiplicativity ----------------------------------------


@dataclass(frozen=True)
class ProjectabilityResult:
    s_related: bool
    t_related: bool
    candidate: ConnectionData

    @property
    def st_projectable(self) -> bool:
        return self.s_related and self.t_related


def check_st_projectable(gpd: CoordGroupoid, conn: ConnectionData) -> ProjectabilityResult:
    """Solve the projected connection along units, then verify exact
    relatedness through both the source and the target."""
    if conn.base_chart != gpd.chart_g or not conn.is_tangent():
        raise ShapeMismatch("need a tangent connection on the arrow chart")
    candidate = project_connection(conn, gpd.source, gpd.unit)
    s_ok = check_related_connections(conn, candidate, gpd.source).related
    t_ok = check_related_connections(conn, candidate, gpd.target).related
    return ProjectabilityResult(s_ok, t_ok, candidate)


def _tensor_projection(gpd: CoordGroupoid, t: TensorField):
    """Candidate object-chart (2,1)-tensor solved along units."""
    m = gpd.chart_m
    ju = jacobian(gpd.unit)
    js = map_scalars(jacobian(gpd.source), lambda f: pullback(f, gpd.unit))
    t_at_units = map_scalars(t.comps, lambda f: pullback(f, gpd.unit))
    dim_g = gpd.chart_g.dim
    comps = []
    for mu in range(m.dim):
        row = []
        for nu in range(m.dim):
            entry = []
            for lam in range(m.dim):
                acc = ScalarFn.zero(m)
                for A in range(dim_g):
                    if ju[A][mu].is_zero():
                        continue
                    for B in range(dim_g):
                        if ju[B][nu].is_zero():
                            continue
                        for C in range(dim_g):
                            val = t_at_units[A][B][C]
                            if val.is_zero() or js[lam][C].is_zero():
                                continue
                            acc = acc + ju[A][mu] * ju[B][nu] * val * js[lam][C]
                entry.append(acc)
            row.append(entry)
        comps.append(row)
    return TensorField(m, 2, 1, comps)


@dataclass(frozen=True)
class TensorMultiplicativity:
    s_related: bool
    t_related: bool
    restricts: bool
    mult_related: bool

    @property
    def multiplicative(self) -> bool:
        return self.s_related and self.t_related and self.restricts and self.mult_related


def check_multiplicative_tensor(gpd: CoordGroupoid, t: TensorField) -> TensorMultiplicativity:
    candidate = _tensor_projection(gpd, t)
    s_ok = check_related_tensors(t, candidate, gpd.source).related
    t_ok = check_related_tensors(t, candidate, gpd.target).related
    if not (s_ok and t_ok):
        return TensorMultiplicativity(s_ok, t_ok, False, False)
    prod_t = product_tensor21([t, t], gpd.composable.product)
    restricted = restrict_tensor21(prod_t, gpd.composable)
    restricts = check_related_tensors(restricted, prod_t, gpd.composable.embed).related
    if not restricts:
        return TensorMultiplicativity(s_ok, t_ok, False, False)
    mult_ok = check_related_tensors(restricted, t, gpd.mult).related
    return TensorMultiplicativity(s_ok, t_ok, restricts, mult_ok)


def tangent_groupoid_maps(gpd: CoordGroupoid):
    """Tangent lifts of the structure maps between tangent charts."""
    return {
        "source": tangent_lift(gpd.source),
        "target": tangent_lift(gpd.target),
        "unit": tangent_lift(gpd.unit),
        "mult": tangent_lift(gpd.mult),
        "division": tangent_lift(gpd.division),
    }


def tangent_fibered(fib: FiberedChart) -> FiberedChart:
    """Tangent lift of a fibered chart; the ambient product of tangent
    charts differs from the tangent chart of the product only by a
    variable reordering, performed by name."""
    left = fib.product.projections[0].target
    right = fib.product.projections[1].target
    t_prod = chart_product(fib.product.chart.name + "_t", [tangent_chart(left), tangent_chart(right)])
    t_of_prod = tangent_chart(fib.product.chart)
    reorder = PolyMap(
        t_of_prod,
        t_prod.chart,
        tuple(ScalarFn.named_var(t_of_prod, v) for v in t_prod.chart.vars),
    )
    reorder_inv = PolyMap(
        t_prod.chart,
        t_of_prod,
        tuple(ScalarFn.named_var(t_prod.chart, v) for v in t_of_prod.vars),
    )
    return FiberedChart(
        chart=tangent_chart(fib.chart),
        product=t_prod,
        embed=reorder.compose(tangent_lift(fib.embed)),
        retract=tangent_lift(fib.retract).compose(reorder_inv),
        base=tangent_chart(fib.base) if fib.base is not None else None,
        sigma=tangent_lift(fib.sigma) if fib.sigma is not None else None,
        tau=tangent_lift(fib.tau) if fib.tau is not None else None,
        sigma_section=tangent_lift(fib.sigma_section)
        if fib.sigma_section is not None
        else None,
    )


def product_field(fields: list[VectorField], prod: ProductChart) -> VectorField:
    comps: list[ScalarFn] = []
    for z, pr in zip(fields, prod.projections):
        comps.extend(pullback(c, pr) for c in z.components)
    return VectorField(prod.chart, tuple(comps))


def restrict_field(z_pair: VectorField, fib: FiberedChart):
    """Restrict an ambient product field to the parametrized chart and
    report whether the restriction is related to the ambient field."""
    jr = jacobian(fib.retract)
    comps = []
    for gam in range(fib.chart.dim):
        acc = ScalarFn.zero(fib.chart)
        for B in range(fib.product.chart.dim):
            entry = pullback(jr[gam][B], fib.embed)
            if entry.is_zero():
                continue
            acc = acc + entry * pullback(z_pair.components[B], fib.embed)
        comps.append(acc)
    restricted = VectorField(fib.chart, tuple(comps))
    rel = check_related_vector_fields(restricted, z_pair, fib.embed)
    return restricted, rel.related


@dataclass(frozen=True)
class FieldMultiplicativity:
    s_related: bool
    t_related: bool
    restricts: bool
    mult_related: bool

    @property
    def multiplicative(self) -> bool:
        return self.s_related and self.t_related and self.restricts and self.mult_related


def check_multiplicative_field(gpd: CoordGroupoid, z: VectorField) -> FieldMultiplicativity:
    """Multiplicativity of a vector field on the tangent groupoid of the
    arrow chart (used for geodesic sprays)."""
    maps = tangent_groupoid_maps(gpd)
    ts, tt, tu, tm = maps["source"], maps["target"], maps["unit"], maps["mult"]
    if z.chart != ts.source:
        raise ShapeMismatch("field must live on the tangent chart of the arrows")
    ju = jacobian(tu)
    js = jacobian(ts)
    base_comps = []
    for mu in range(ts.target.dim):
        acc = ScalarFn.zero(ts.target)
        for A in range(ts.source.dim):
            entry = pullback(js[mu][A], tu)
            if entry.is_zero():
                continue
            acc = acc + entry * pullback(z.components[A], tu)
        base_comps.append(acc)
    z_m = VectorField(ts.target, tuple(base_comps))
    s_ok = check_related_vector_fields(z, z_m, ts).related
    t_ok = check_related_vector_fields(z, z_m, tt).related
    if not (s_ok and t_ok):
        return FieldMultiplicativity(s_ok, t_ok, False, False)
    t_comp = tangent_fibered(gpd.composable)
    zz = product_field([z, z], t_comp.product)
    restricted, restricts = restrict_field(zz, t_comp)
    if not restricts:
        return FieldMultiplicativity(s_ok, t_ok, False, False)
    mult_ok = check_related_vector_fields(restricted, z, tm).related
    return FieldMultiplicativity(s_ok, t_ok, restricts, mult_ok)


@dataclass(frozen=True)
class MultiplicativityResult:
    route_mult: bool
    route_division: bool
    route_spray: bool
    projection: ProjectabilityResult
    torsion: TensorMultiplicativity
    spray: FieldMultiplicativity

    @property
    def agree(self) -> bool:
        return self.route_mult == self.route_division == self.route_spray

    @property
    def multiplicative(self) -> bool:
        return self.route_mult


def check_multiplicative(gpd: CoordGroupoid, conn: ConnectionData) -> MultiplicativityResult:
    """Three independent characterizations, computed and compared:
    relatedness through the multiplication of the restricted product,
    relatedness through the division map, and multiplicativity of the
    torsion tensor together with the geodesic spray."""
    proj = check_st_projectable(gpd, conn)

    route_mult = False
    if proj.st_projectable:
        restricted = restrict_to_fibered(conn, conn, gpd.composable, proj.candidate)
        route_mult = check_related_connections(restricted, conn, gpd.mult).related

    route_div = False
    if proj.s_related:
        restricted_s = restrict_to_fibered(conn, conn, gpd.same_source, proj.candidate)
        route_div = check_related_connections(restricted_s, conn, gpd.division).related

    torsion_result = check_multiplicative_tensor(gpd, torsion_of(conn))
    spray_result = check_multiplicative_field(gpd, geodesic_spray(conn))
    route_spray = torsion_result.multiplicative and spray_result.multiplicative

    return MultiplicativityResult(
        route_mult, route_div, route_spray, proj, torsion_result, spray_result
    )


def check_simpl_conn(gpd: CoordGroupoid, conn: ConnectionData) -> DefectReport:
    """Unit, leg-embedding and inversion compatibilities of a
    multiplicative connection."""
    result = check_multiplicative(gpd, conn)
    if not result.multiplicative:
        raise NotMultiplicative("the connection is not multiplicative")
    report = DefectReport()
    nabla_m = result.projection.candidate
    rel_u = check_related_connections(nabla_m, conn, gpd.unit)
    report.add("unit_relatedness", rel_u.defect)
    restricted = restrict_to_fibered(conn, conn, gpd.composable, nabla_m)
    for which in (1, 2):
        rel = check_related_connections(conn, restricted, gpd.epsilon(which))
        report.add(f"leg_embedding_{which}", rel.defect)
    rel_i = check_related_connections(conn, conn, gpd.inverse)
    report.add("inversion_self_relatedness", rel_i.defect)
    return report


# -- the degree complex ----------------------------------------------------------


@dataclass(frozen=True)
class DefCochain:
    groupoid: CoordGroupoid
    degree: int
    comps: tuple
    m_proj: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "comps", freeze(self.comps))
        if self.m_proj is not None:
            object.__setattr__(self, "m_proj", freeze(self.m_proj))
        if self.degree not in (-1, 0, 1, 2):
            raise GroupoidError("cochain degree out of the supported range")

    def is_zero(self) -> bool:
        return all_zero(self.comps) and (self.m_proj is None or all_zero(self.m_proj))

    def check_invariant(self) -> bool:
        """The projection square: source differential of the values
        against the M-projection contracted with the projected slots."""
        gpd = self.groupoid
        if self.degree == -1:
            return True
        if self.m_proj is None:
            return False
        if self.degree == 0:
            chart = gpd.chart_g
            js_val = jacobian(gpd.source)
            slot_jac = jacobian(gpd.source)
            mp = map_scalars(self.m_proj, lambda f: pullback(f, gpd.source))
        elif self.degree == 1:
            chart = gpd.same_source.chart
            js_val = map_scalars(
                jacobian(gpd.source), lambda f: pullback(f, gpd.division)
            )
            pr2 = gpd.same_source.proj(1)
            slot_jac = jacobian(pr2)
            mp = map_scalars(self.m_proj, lambda f: pullback(f, pr2))
        else:
            chart = gpd.triples.chart
            f12 = gpd.f_map(0, 1)
            js_val = map_scalars(jacobian(gpd.source), lambda f: pullback(f, f12))
            pr23 = located_map(
                gpd.same_source, [gpd.triples.proj(1), gpd.triples.proj(2)]
            )
            slot_jac = jacobian(pr23)
            mp = map_scalars(self.m_proj, lambda f: pullback(f, pr23))
        m_dim = gpd.chart_m.dim
        dim = chart.dim
        inner = len(mp[0]) if m_dim else 0
        for mu in range(m_dim):
            for A in range(dim):
                for B in range(dim):
                    acc = ScalarFn.zero(chart)
                    for a in range(len(self.comps)):
                        val = self.comps[a][A][B]
                        if not val.is_zero() and not js_val[mu][a].is_zero():
                            acc = acc + js_val[mu][a] * val
                    for p in range(inner):
                        if slot_jac[p][A].is_zero():
                            continue
                        for q in range(inner):
                            val = mp[mu][p][q]
                            if val.is_zero() or slot_jac[q][B].is_zero():
                                continue
                            acc = acc - val * slot_jac[p][A] * slot_jac[q][B]
                    if not acc.is_zero():
                        return False
        return True


def _bilinear_pullback(comps, value_dim, phi: PolyMap):
    """Pull a [a][A][B] component family back along a chart map in the two
    slot indices (the value index is untouched; values are further
    relocated by the caller)."""
    jac = jacobian(phi)
    src = phi.source.dim
    tgt = phi.target.dim
    pulled = map_scalars(comps, lambda f: pullback(f, phi))
    out = []
    for a in range(value_dim):
        row = []
        for A in range(src):
            entry = []
            for B in range(src):
                acc = ScalarFn.zero(phi.source)
                for C in range(tgt):
                    if jac[C][A].is_zero():
                        continue
                    for D in range(tgt):
                        val = pulled[a][C][D]
                        if val.is_zero() or jac[D][B].is_zero():
                            continue
                        acc = acc + jac[C][A] * val * jac[D][B]
                entry.append(acc)
            row.append(entry)
        out.append(row)
    return out


def _push_pair_through_division(gpd, point_pair: PolyMap, left_vals, right_vals, chart):
    """Apply the division differential to a pair of arrow-tangent value
    families located by ``point_pair`` (a map into the ambient product
    whose image lies over the same-source locus)."""
    g_dim = gpd.chart_g.dim
    into = gpd.same_source.retract.compose(point_pair)
    jr = map_scalars(jacobian(gpd.same_source.retract), lambda f: pullback(f, point_pair))
    jm = map_scalars(jacobian(gpd.division), lambda f: pullback(f, into))
    out = []
    for a in range(g_dim):
        acc_row = []
        for idx in range(len(left_vals[0])):
            entry = []
            for jdx in range(len(left_vals[0][0])):
                acc = ScalarFn.zero(chart)
                for C in range(gpd.same_source.chart.dim):
                    if jm[a][C].is_zero():
                        continue
                    inner = ScalarFn.zero(chart)
                    for B in range(g_dim):
                        v1 = left_vals[B][idx][jdx]
                        if not v1.is_zero() and not jr[C][B].is_zero():
                            inner = inner + jr[C][B] * v1
                        v2 = right_vals[B][idx][jdx]
                        if not v2.is_zero() and not jr[C][g_dim + B].is_zero():
                            inner = inner + jr[C][g_dim + B] * v2
                    if not inner.is_zero():
                        acc = acc + jm[a][C] * inner
                entry.append(acc)
            acc_row.append(entry)
        out.append(acc_row)
    return out


def deformation_differential(gpd: CoordGroupoid, u: DefCochain) -> DefCochain:
    """One step of the degree complex; the output invariant is
    re-verified and its projection is computed from the boundary formula
    and cross-checked."""
    if u.groupoid is not gpd and u.groupoid != gpd:
        raise GroupoidError("cochain belongs to a different groupoid")
    if u.degree == -1:
        return _differential_minus1(gpd, u)
    if u.degree == 0:
        return _differential_0(gpd, u)
    if u.degree == 1:
        return _differential_1(gpd, u)
    raise GroupoidError("the differential is supported in degrees -1, 0, 1")


def _differential_minus1(gpd: CoordGroupoid, u: DefCochain) -> DefCochain:
    g = gpd.chart_g
    m_dim = gpd.chart_m.dim
    g_dim = g.dim
    jt = jacobian(gpd.target)
    js = jacobian(gpd.source)
    ji = jacobian(gpd.inverse)

    # kernel-frame values carried to arrow charts
    frame_t = [
        [pullback(gpd.a_frame[i][A], gpd.target) for A in range(g_dim)]
        for i in range(len(gpd.a_frame))
    ]
    frame_s = [
        [pullback(gpd.a_frame[i][A], gpd.source) for A in range(g_dim)]
        for i in range(len(gpd.a_frame))
    ]
    u_t = map_scalars(u.comps, lambda f: pullback(f, gpd.target))
    u_s = map_scalars(u.comps, lambda f: pullback(f, gpd.source))

    # first summand: right translation of the target-pulled values
    left_vals = []
    for B in range(g_dim):
        rows = []
        for A in range(g_dim):
            entry = []
            for Bb in range(g_dim):
                acc = ScalarFn.zero(g)
                for i in range(len(gpd.a_frame)):
                    fb = frame_t[i][B]
                    if fb.is_zero():
                        continue
                    for mu in range(m_dim):
                        if jt[mu][A].is_zero():
                            continue
                        for nu in range(m_dim):
                            val = u_t[i][mu][nu]
                            if val.is_zero() or jt[nu][Bb].is_zero():
                                continue
                            acc = acc + fb * jt[mu][A] * val * jt[nu][Bb]
                entry.append(acc)
            rows.append(entry)
        left_vals.append(rows)
    zero_vals = [
        [[ScalarFn.zero(g) for _ in range(g_dim)] for _ in range(g_dim)]
        for _ in range(g_dim)
    ]
    unit_target = gpd.unit.compose(gpd.target)
    pair1 = pair_map([unit_target, PolyMap.identity(g)], gpd.composable.product)
    into1 = gpd.composable.retract.compose(pair1)
    jr1 = map_scalars(jacobian(gpd.composable.retract), lambda f: pullback(f, pair1))
    jm1 = map_scalars(jacobian(gpd.mult), lambda f: pullback(f, into1))

    # second summand: inversion then left translation of the source-pulled values
    inv_at_unit_source = map_scalars(
        jacobian(gpd.inverse), lambda f: pullback(f, gpd.unit.compose(gpd.source))
    )
    right_vals = []
    for B in range(g_dim):
        rows = []
        for A in range(g_dim):
            entry = []
            for Bb in range(g_dim):
                acc = ScalarFn.zero(g)
                for C in range(g_dim):
                    jinv = inv_at_unit_source[B][C]
                    if jinv.is_zero():
                        continue
                    for i in range(len(gpd.a_frame)):
                        fb = frame_s[i][C]
                        if fb.is_zero():
                            continue
                        for mu in range(m_dim):
                            if js[mu][A].is_zero():
                                continue
                            for nu in range(m_dim):
                                val = u_s[i][mu][nu]
                                if val.is_zero() or js[nu][Bb].is_zero():
                                    continue
                                acc = acc + jinv * fb * js[mu][A] * val * js[nu][Bb]
                entry.append(acc)
            rows.append(entry)
        right_vals.append(rows)
    unit_source = gpd.unit.compose(gpd.source)
    pair2 = pair_map([PolyMap.identity(g), unit_source], gpd.composable.product)
    into2 = gpd.composable.retract.compose(pair2)
    jr2 = map_scalars(jacobian(gpd.composable.retract), lambda f: pullback(f, pair2))
    jm2 = map_scalars(jacobian(gpd.mult), lambda f: pullback(f, into2))

    comps = []
    for a in range(g_dim):
        rows = []
        for A in range(g_dim):
            entry = []
            for B in range(g_dim):
                acc = ScalarFn.zero(g)
                for C in range(gpd.composable.chart.dim):
                    if not jm1[a][C].is_zero():
                        inner = ScalarFn.zero(g)
                        for Bb in range(g_dim):
                            v = left_vals[Bb][A][B]
                            if not v.is_zero() and not jr1[C][Bb].is_zero():
                                inner = inner + jr1[C][Bb] * v
                        if not inner.is_zero():
                            acc = acc + jm1[a][C] * inner
                    if not jm2[a][C].is_zero():
                        inner = ScalarFn.zero(g)
                        for Bb in range(g_dim):
                            v = right_vals[Bb][A][B]
                            if not v.is_zero() and not jr2[C][g_dim + Bb].is_zero():
                                inner = inner + jr2[C][g_dim + Bb] * v
                        if not inner.is_zero():
                            acc = acc + jm2[a][C] * inner
                entry.append(acc)
            rows.append(entry)
        comps.append(rows)

    # boundary projection: anchor composed with the values
    m = gpd.chart_m
    a_data = gpd.algebroid
    m_proj = [
        [
            [
                sum(
                    (
                        a_data.anchor[i][mu] * u.comps[i][nu][lam]
                        for i in range(a_data.rank)
                        if not a_data.anchor[i][mu].is_zero()
                    ),
                    ScalarFn.zero(m),
                )
                for lam in range(m.dim)
            ]
            for nu in range(m.dim)
        ]
        for mu in range(m.dim)
    ]
    out = DefCochain(gpd, 0, comps, m_proj)
    if not out.check_invariant():
        raise GroupoidError("differential output violates the projection square")
    return out


def _differential_0(gpd: CoordGroupoid, u: DefCochain) -> DefCochain:
    g_dim = gpd.chart_g.dim
    ss = gpd.same_source
    chart = ss.chart
    pr1, pr2 = ss.proj(0), ss.proj(1)

    term2 = _bilinear_pullback(u.comps, g_dim, gpd.division)

    u1 = _bilinear_pullback(u.comps, g_dim, pr1)
    u2 = _bilinear_pullback(u.comps, g_dim, pr2)
    pair_point = ss.embed  # the identity pair over the same-source chart
    term1 = _push_pair_through_division(gpd, pair_point, u1, u2, chart)

    comps = [
        [
            [term2[a][A][B] - term1[a][A][B] for B in range(chart.dim)]
            for A in range(chart.dim)
        ]
        for a in range(g_dim)
    ]

    # projection: minus the target differential of the values plus the
    # input projection pulled through the target of the slots
    m_dim = gpd.chart_m.dim
    jt = jacobian(gpd.target)
    mp = []
    for mu in range(m_dim):
        row = []
        for A in range(g_dim):
            entry = []
            for B in range(g_dim):
                acc = ScalarFn.zero(gpd.chart_g)
                for a in range(g_dim):
                    val = u.comps[a][A][B]
                    if not val.is_zero() and not jt[mu][a].is_zero():
                        acc = acc - jt[mu][a] * val
                if u.m_proj is not None:
                    for nu in range(m_dim):
                        if jt[nu][A].is_zero():
                            continue
                        for lam in range(m_dim):
                            val = pullback(u.m_proj[mu][nu][lam], gpd.target)
                            if val.is_zero() or jt[lam][B].is_zero():
                                continue
                            acc = acc + val * jt[nu][A] * jt[lam][B]
                entry.append(acc)
            row.append(entry)
        mp.append(row)
    out = DefCochain(gpd, 1, comps, mp)
    if not out.check_invariant():
        raise GroupoidError("differential output violates the projection square")
    return out


def _differential_1(gpd: CoordGroupoid, u: DefCochain) -> DefCochain:
    g_dim = gpd.chart_g.dim
    tri = gpd.triples
    chart = tri.chart

    q12 = located_map(gpd.same_source, [tri.proj(0), tri.proj(1)])
    q13 = located_map(gpd.same_source, [tri.proj(0), tri.proj(2)])
    q23 = located_map(gpd.same_source, [tri.proj(1), tri.proj(2)])
    f13 = gpd.division.compose(q13)
    f23 = gpd.division.compose(q23)
    qm = located_map(gpd.same_source, [f13, f23])

    term2 = _bilinear_pullback(u.comps, g_dim, q12)
    term3 = _bilinear_pullback(u.comps, g_dim, qm)

    u13 = _bilinear_pullback(u.comps, g_dim, q13)
    u23 = _bilinear_pullback(u.comps, g_dim, q23)
    pair_point = pair_map([f13, f23], gpd.same_source.product)
    term1 = _push_pair_through_division(gpd, pair_point, u13, u23, chart)

    comps = [
        [
            [
                term2[a][A][B] - term1[a][A][B] - term3[a][A][B]
                for B in range(chart.dim)
            ]
            for A in range(chart.dim)
        ]
        for a in range(g_dim)
    ]

    # projection on the pair chart
    m_dim = gpd.chart_m.dim
    ss_chart = gpd.same_source.chart
    jt = map_scalars(jacobian(gpd.target), lambda f: pullback(f, gpd.division))
    pr1 = gpd.same_source.proj(0)
    jpr1 = jacobian(pr1)
    jdiv = jacobian(gpd.division)
    mp = []
    for mu in range(m_dim):
        row = []
        for A in range(ss_chart.dim):
            entry = []
            for B in range(ss_chart.dim):
                acc = ScalarFn.zero(ss_chart)
                for a in range(g_dim):
                    val = u.comps[a][A][B]
                    if not val.is_zero() and not jt[mu][a].is_zero():
                        acc = acc - jt[mu][a] * val
                if u.m_proj is not None:
                    for p in range(g_dim):
                        for q in range(g_dim):
                            v1 = pullback(u.m_proj[mu][p][q], pr1)
                            if not v1.is_zero():
                                acc = acc + v1 * jpr1[p][A] * jpr1[q][B]
                            v2 = pullback(u.m_proj[mu][p][q], gpd.division)
                            if not v2.is_zero():
                                acc = acc - v2 * jdiv[p][A] * jdiv[q][B]
                entry.append(acc)
            row.append(entry)
        mp.append(row)
    out = DefCochain(gpd, 2, comps, mp)
    if not out.check_invariant():
        raise GroupoidError("differential output violates the projection square")
    return out


def tensor_cochain(gpd: CoordGroupoid, t: TensorField, t_m: TensorField) -> DefCochain:
    """Degree-0 cochain of an s-projectable (2,1)-tensor."""
    out = DefCochain(
        gpd,
        0,
        tuple(
            tuple(tuple(t.comps[A][B][a] for B in range(gpd.chart_g.dim)) for A in range(gpd.chart_g.dim))
            for a in range(gpd.chart_g.dim)
        ),
        tuple(
            tuple(tuple(t_m.comps[nu][lam][mu] for lam in range(gpd.chart_m.dim)) for nu in range(gpd.chart_m.dim))
            for mu in range(gpd.chart_m.dim)
        ),
    )
    if not out.check_invariant():
        raise GroupoidError("tensor is not projectable with the given projection")
    return out


def atiyah_cocycle(gpd: CoordGroupoid, conn: ConnectionData) -> DefCochain:
    """Obstruction cochain of an s-projectable connection: the failure of
    the division map to intertwine the restricted product connection with
    the connection itself, recorded as a degree-1 cochain.

    The companion projection measures the failure of the target to
    intertwine the connection with its projection; the projection square
    relating the two is verified on construction.
    """
    proj = check_st_projectable(gpd, conn)
    if not proj.s_related:
        raise NotProjectable("connection is not source-projectable")
    restricted = restrict_to_fibered(conn, conn, gpd.same_source, proj.candidate)
    rel = check_related_connections(restricted, conn, gpd.division)
    g_dim = gpd.chart_g.dim
    # sign convention: the cochain is the relatedness defect itself, so
    # that differences of connections (vector-slot components) satisfy
    # the coboundary identity with a plus sign
    comps = [
        [
            [rel.defect[a][A][B] for B in range(gpd.same_source.chart.dim)]
            for A in range(gpd.same_source.chart.dim)
        ]
        for a in range(g_dim)
    ]
    rel_t = check_related_connections(conn, proj.candidate, gpd.target)
    m_proj = [
        [
            [rel_t.defect[mu][A][B] for B in range(g_dim)]
            for A in range(g_dim)
        ]
        for mu in range(gpd.chart_m.dim)
    ]
    out = DefCochain(gpd, 1, comps, m_proj)
    if not out.check_invariant():
        raise GroupoidError("obstruction cochain violates the projection square")
    return out


def cochain_sub(u: DefCochain, v: DefCochain) -> DefCochain:
    if u.degree != v.degree:
        raise GroupoidError("cochain degrees differ")

    def sub(x, y):
        if isinstance(x, tuple):
            return tuple(sub(p, q) for p, q in zip(x, y))
        return x - y

    m_proj = None
    if u.m_proj is not None and v.m_proj is not None:
        m_proj = sub(u.m_proj, v.m_proj)
    return DefCochain(u.groupoid, u.degree, sub(u.comps, v.comps), m_proj)


@dataclass(frozen=True)
class ObstructionReport:
    cocycle_ok: bool
    coboundary_difference_ok: bool
    vanishes_for_multiplicative: bool | None


def obstruction_tests(
    gpd: CoordGroupoid, conn: ConnectionData, other: ConnectionData
) -> ObstructionReport:
    """Cocycle and coboundary-difference statements for the obstruction
    cochains of two source-projectable connections."""
    at1 = atiyah_cocycle(gpd, conn)
    at2 = atiyah_cocycle(gpd, other)
    cocycle_ok = deformation_differential(gpd, at1).is_zero()

    diff_tensor = connection_difference(conn, other)
    proj1 = check_st_projectable(gpd, conn)
    proj2 = check_st_projectable(gpd, other)
    diff_m = TensorField(
        gpd.chart_m,
        2,
        1,
        [
            [
                [
                    proj1.candidate.gamma[mu][nu][lam] - proj2.candidate.gamma[mu][nu][lam]
                    for lam in range(gpd.chart_m.dim)
                ]
                for nu in range(gpd.chart_m.dim)
            ]
            for mu in range(gpd.chart_m.dim)
        ],
    )
    u = tensor_cochain(gpd, diff_tensor, diff_m)
    boundary = deformation_differential(gpd, u)
    coboundary_ok = cochain_sub(at1, at2).comps == boundary.comps

    mult = check_multiplicative(gpd, conn)
    vanishes = at1.is_zero() if mult.multiplicative else None
    return ObstructionReport(cocycle_ok, coboundary_ok, vanishes)


# -- solving for a primitive of the obstruction cochain ---------------------------


def _poly_coeff_vector(f: ScalarFn, index: dict):
    out = {}
    for key, coeff in f.terms.items():
        out[index.setdefault(key, len(index))] = coeff
    return out


def solve_coboundary(gpd: CoordGroupoid, target: DefCochain, max_degree: int = 2):
    """Search for a degree-0 cochain with polynomial components of bounded
    degree whose differential is the given degree-1 cochain.

    Returns the cochain, or None when the bounded-degree system is
    inconsistent (inconclusive at this degree bound).
    """
    from .jets import monomials

    g = gpd.chart_g
    m = gpd.chart_m
    g_dim, m_dim = g.dim, m.dim
    g_monos = monomials(g_dim, max_degree)
    m_monos = monomials(m_dim, max_degree)

    unknowns = []
    for a in range(g_dim):
        for A in range(g_dim):
            for B in range(g_dim):
                for mono in g_monos:
                    unknowns.append(("g", a, A, B, mono))
    for mu in range(m_dim):
        for nu in range(m_dim):
            for lam in range(m_dim):
                for mono in m_monos:
                    unknowns.append(("m", mu, nu, lam, mono))
    def basis_cochain(u_key):
        comps = [[[ScalarFn.zero(g) for _ in range(g_dim)] for _ in range(g_dim)] for _ in range(g_dim)]
        mp = [[[ScalarFn.zero(m) for _ in range(m_dim)] for _ in range(m_dim)] for _ in range(m_dim)]
        kind, i1, i2, i3, mono = u_key
        if kind == "g":
            comps[i1][i2][i3] = ScalarFn(g, {mono: 1})
        else:
            mp[i1][i2][i3] = ScalarFn(m, {mono: 1})
        return comps, mp

    eq_rows: dict = {}

    def add_entries(matrix_col, comps_nested):
        for a in range(len(comps_nested)):
            for A in range(len(comps_nested[a])):
                for B in range(len(comps_nested[a][A])):
                    for key, coeff in comps_nested[a][A][B].terms.items():
                        eq_key = ("d", a, A, B, key)
                        row = eq_rows.setdefault(eq_key, {})
                        row[matrix_col] = row.get(matrix_col, Q(0)) + coeff

    def add_proj_entries(matrix_col, comps_nested, mp_nested):
        # projectability rows: source differential of the values minus
        # the projection contracted with source-pushed slots
        js = jacobian(gpd.source)
        for mu in range(m_dim):
            for A in range(g_dim):
                for B in range(g_dim):
                    acc = ScalarFn.zero(g)
                    for a in range(g_dim):
                        val = comps_nested[a][A][B]
                        if not val.is_zero() and not js[mu][a].is_zero():
                            acc = acc + js[mu][a] * val
                    for nu in range(m_dim):
                        if js[nu][A].is_zero():
                            continue
                        for lam in range(m_dim):
                            val = mp_nested[mu][nu][lam]
                            if val.is_zero() or js[lam][B].is_zero():
                                continue
                            acc = acc - pullback(val, gpd.source) * js[nu][A] * js[lam][B]
                    for key, coeff in acc.terms.items():
                        eq_key = ("p", mu, A, B, key)
                        row = eq_rows.setdefault(eq_key, {})
                        row[matrix_col] = row.get(matrix_col, Q(0)) + coeff

    for col, u_key in enumerate(unknowns):
        comps, mp = basis_cochain(u_key)
        cochain = DefCochain(gpd, 0, comps, mp)
        boundary = _differential_0_raw(gpd, cochain)
        add_entries(col, boundary)
        add_proj_entries(col, comps, mp)

    # right-hand side from the target cochain
    ss_dim = gpd.same_source.chart.dim
    rhs_map: dict = {}
    for a in range(g_dim):
        for A in range(ss_dim):
            for B in range(ss_dim):
                f = target.comps[a][A][B]
                for key, coeff in f.terms.items():
                    rhs_map[("d", a, A, B, key)] = coeff

    keys = sorted(set(eq_rows) | set(rhs_map), key=repr)
    matrix = []
    vector = []
    for eq_key in keys:
        row = eq_rows.get(eq_key, {})
        matrix.append([row.get(col, Q(0)) for col in range(len(unknowns))])
        vector.append(rhs_map.get(eq_key, Q(0)))

    solution = solve_exact(matrix, vector)
    if solution is None:
        return None
    comps = [[[ScalarFn.zero(g) for _ in range(g_dim)] for _ in range(g_dim)] for _ in range(g_dim)]
    mp = [[[ScalarFn.zero(m) for _ in range(m_dim)] for _ in range(m_dim)] for _ in range(m_dim)]
    for u_key, value in zip(unknowns, solution):
        if value == 0:
            continue
        kind, i1, i2, i3, mono = u_key
        add = ScalarFn(g if kind == "g" else m, {mono: value})
        if kind == "g":
            comps[i1][i2][i3] = comps[i1][i2][i3] + add
        else:
            mp[i1][i2][i3] = mp[i1][i2][i3] + add
    out = DefCochain(gpd, 0, comps, mp)
    if not out.check_invariant():
        return None
    if deformation_differential(gpd, out).comps != target.comps:
        return None
    return out


def _differential_0_raw(gpd: CoordGroupoid, u: DefCochain):
    """Degree-0 differential without the output invariant check (used for
    basis cochains that are not individually projectable)."""
    g_dim = gpd.chart_g.dim
    ss = gpd.same_source
    chart = ss.chart
    pr1, pr2 = ss.proj(0), ss.proj(1)
    term2 = _bilinear_pullback(u.comps, g_dim, gpd.division)
    u1 = _bilinear_pullback(u.comps, g_dim, pr1)
    u2 = _bilinear_pullback(u.comps, g_dim, pr2)
    term1 = _push_pair_through_division(gpd, ss.embed, u1, u2, chart)
    return [
        [
            [term2[a][A][B] - term1[a][A][B] for B in range(chart.dim)]
            for A in range(chart.dim)
        ]
        for a in range(g_dim)
    ]


# -- differentiation of a multiplicative connection -------------------------------


def lie_functor(gpd: CoordGroupoid, conn: ConnectionData) -> IMConnComponents:
    """Component tuple of the algebroid data induced by a multiplicative
    connection: derivatives of the connection along invariant extensions
    of the kernel frame, projected to the kernel along units."""
    from .geometry import lie_derivative_connection

    result = check_multiplicative(gpd, conn)
    if not result.multiplicative:
        raise NotMultiplicative("differentiation requires a multiplicative connection")

    a_data = gpd.algebroid
    m = gpd.chart_m
    g_dim = gpd.chart_g.dim
    n, r = m.dim, a_data.rank
    ju = jacobian(gpd.unit)

    f_op = []
    ga = [[[None] * r for _ in range(r)] for _ in range(n)]
    l_map = [[[None] * r for _ in range(n)] for _ in range(r)]
    tor = torsion_of(conn)
    for i in range(r):
        frame_field = VectorField(gpd.chart_g, gpd.invariant_frames[i])
        lie = lie_derivative_connection(frame_field, conn)
        lie_u = map_scalars(lie, lambda f: pullback(f, gpd.unit))
        rows = []
        for mu in range(n):
            row = []
            for nu in range(n):
                entry = []
                for k in range(r):
                    acc = ScalarFn.zero(m)
                    for A in range(g_dim):
                        if ju[A][mu].is_zero():
                            continue
                        for B in range(g_dim):
                            if ju[B][nu].is_zero():
                                continue
                            for C in range(g_dim):
                                val = lie_u[A][B][C]
                                if val.is_zero() or gpd.unit_proj[k][C].is_zero():
                                    continue
                                acc = acc + ju[A][mu] * ju[B][nu] * val * gpd.unit_proj[k][C]
                    entry.append(acc)
                row.append(entry)
            rows.append(row)
        f_op.append(rows)

        # bundle connection: derivative of the invariant extension
        for mu in range(n):
            for k in range(r):
                acc = ScalarFn.zero(m)
                for A in range(g_dim):
                    if ju[A][mu].is_zero():
                        continue
                    for C in range(g_dim):
                        d = gpd.invariant_frames[i][C].partial(A)
                        for B in range(g_dim):
                            gam = conn.gamma[A][B][C]
                            if not gam.is_zero() and not gpd.invariant_frames[i][B].is_zero():
                                d = d + gam * gpd.invariant_frames[i][B]
                        if d.is_zero() or gpd.unit_proj[k][C].is_zero():
                            continue
                        acc = acc + ju[A][mu] * pullback(d, gpd.unit) * gpd.unit_proj[k][C]
                ga[mu][i][k] = acc

        # contraction map: torsion contracted with the invariant extension
        for nu in range(n):
            for k in range(r):
                acc = ScalarFn.zero(m)
                for B in range(g_dim):
                    if ju[B][nu].is_zero():
                        continue
                    for A in range(g_dim):
                        fr = gpd.invariant_frames[i][A]
                        if fr.is_zero():
                            continue
                        for C in range(g_dim):
                            val = tor.comps[A][B][C]
                            if val.is_zero() or gpd.unit_proj[k][C].is_zero():
                                continue
                            acc = acc + ju[B][nu] * pullback(val * fr, gpd.unit) * gpd.unit_proj[k][C]
                l_map[i][nu][k] = acc

    nabla_m = result.projection.candidate
    return IMConnComponents(
        a_data,
        f_op,
        ConnectionData(m, r, ga),
        nabla_m,
        l_map,
    )
