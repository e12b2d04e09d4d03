"""Lie algebroid data in coordinates.

An algebroid is presented by a base chart, a rank, an anchor matrix
``anchor[i][mu]`` (the mu-th coordinate component of the anchor of the
i-th frame section), and antisymmetric structure functions
``structure[i][j][k]`` (the k-th coefficient of the bracket of the
i-th and j-th frame sections).

The coordinate bracket of sections a = a^i e_i, b = b^j e_j is

    [a, b]^k = rho^mu_i a^i d_mu b^k  -  rho^mu_j b^j d_mu a^k
               + c^k_ij a^i b^j.

Section components in identity checks may live on a jet-extended chart
whose leading variables are the base variables; all derivatives range
over the base block only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .jets import JetScope
from .reports import DefectReport
from .symkernel import (
    Chart,
    ChartMismatch,
    PolyMap,
    ScalarFn,
    all_zero,
    freeze,
    jacobian,
    map_scalars,
    pullback,
    zeros,
)
from .geometry import ShapeMismatch, VectorField, tangent_chart


class NotLinearField(ValueError):
    """The vector field is not linear over the bundle projection."""


@dataclass(frozen=True)
class AlgebroidData:
    base: Chart
    rank: int
    anchor: tuple  # [i][mu]
    structure: tuple  # [i][j][k], antisymmetric in (i, j)
    fiber_names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "anchor", freeze(self.anchor))
        object.__setattr__(self, "structure", freeze(self.structure))
        r, n = self.rank, self.base.dim
        if len(self.anchor) != r or any(len(row) != n for row in self.anchor):
            raise ShapeMismatch("anchor must be rank x dim")
        if len(self.structure) != r or any(
            len(row) != r or any(len(col) != r for col in row) for row in self.structure
        ):
            raise ShapeMismatch("structure must be rank x rank x rank")
        for i in range(r):
            for j in range(r):
                for k in range(r):
                    if not (self.structure[i][j][k] + self.structure[j][i][k]).is_zero():
                        raise ShapeMismatch("structure functions must be antisymmetric")
        if not self.fiber_names:
            object.__setattr__(
                self, "fiber_names", tuple(f"u{i + 1}" for i in range(r))
            )
        if len(self.fiber_names) != r:
            raise ShapeMismatch("need one fiber name per frame element")

    def total_chart(self) -> Chart:
        """Chart of the total space: base variables then fiber variables."""
        return Chart(self.base.name + "_tot", self.base.vars + self.fiber_names)

    def anchor_of(self, comps):
        """Anchor applied to a section given by components (possibly on an
        extended chart with leading base variables)."""
        chart = comps[0].chart
        out = []
        for mu in range(self.base.dim):
            acc = ScalarFn.zero(chart)
            for i in range(self.rank):
                rho = self.anchor[i][mu]
                if not rho.is_zero():
                    acc = acc + rho.on_chart(chart) * comps[i]
            out.append(acc)
        return tuple(out)


@dataclass(frozen=True)
class SectionExpr:
    """A section in the global frame, one coefficient per frame element."""

    coefficients: tuple[ScalarFn, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(self.coefficients))


def _bracket_raw(anchor, structure, n_base, rank, a, b, chart):
    """Coordinate bracket on raw component tuples over ``chart`` (leading
    base variables)."""
    out = []
    for k in range(rank):
        acc = ScalarFn.zero(chart)
        for i in range(rank):
            ai = a[i]
            if not ai.is_zero():
                for mu in range(n_base):
                    rho = anchor[i][mu]
                    if not rho.is_zero():
                        acc = acc + rho * ai * b[k].partial(mu)
        for j in range(rank):
            bj = b[j]
            if not bj.is_zero():
                for mu in range(n_base):
                    rho = anchor[j][mu]
                    if not rho.is_zero():
                        acc = acc - rho * bj * a[k].partial(mu)
        for i in range(rank):
            if a[i].is_zero():
                continue
            for j in range(rank):
                c = structure[i][j][k]
                if not c.is_zero() and not b[j].is_zero():
                    acc = acc + c * a[i] * b[j]
        out.append(acc)
    return tuple(out)


def bracket_sections(algebroid: AlgebroidData, a: SectionExpr, b: SectionExpr) -> SectionExpr:
    if len(a.coefficients) != algebroid.rank or len(b.coefficients) != algebroid.rank:
        raise ShapeMismatch("section components do not match the rank")
    chart = a.coefficients[0].chart
    anchor = map_scalars(algebroid.anchor, lambda f: f.on_chart(chart))
    structure = map_scalars(algebroid.structure, lambda f: f.on_chart(chart))
    return SectionExpr(
        _bracket_raw(
            anchor,
            structure,
            algebroid.base.dim,
            algebroid.rank,
            a.coefficients,
            b.coefficients,
            chart,
        )
    )


def frame_section(algebroid: AlgebroidData, i: int, chart: Chart | None = None) -> SectionExpr:
    chart = chart or algebroid.base
    return SectionExpr(
        tuple(
            ScalarFn.const(chart, 1 if j == i else 0) for j in range(algebroid.rank)
        )
    )


def check_algebroid(algebroid: AlgebroidData) -> DefectReport:
    """Verify the anchor is a bracket morphism and the Jacobiator
    vanishes, on all frame pairs/triples (both defects are tensorial
    once the Leibniz rule holds, which the coordinate bracket satisfies
    by construction; the Leibniz property itself is covered by a
    property test on jets)."""
    report = DefectReport()
    r, n = algebroid.rank, algebroid.base.dim
    chart = algebroid.base

    # anchor morphism: anchor of the bracket equals the field bracket of anchors
    morph = []
    for i in range(r):
        row = []
        for j in range(r):
            entry = []
            for mu in range(n):
                acc = ScalarFn.zero(chart)
                for k in range(r):
                    c = algebroid.structure[i][j][k]
                    if not c.is_zero():
                        acc = acc + c * algebroid.anchor[k][mu]
                for nu in range(n):
                    acc = acc - algebroid.anchor[i][nu] * algebroid.anchor[j][mu].partial(nu)
                    acc = acc + algebroid.anchor[j][nu] * algebroid.anchor[i][mu].partial(nu)
                entry.append(acc)
            row.append(entry)
        morph.append(row)
    report.add("anchor_bracket_morphism", morph)

    # Jacobiator on frame triples
    frames = [frame_section(algebroid, i) for i in range(r)]
    jac_defect = []
    for i in range(r):
        row_i = []
        for j in range(r):
            row_j = []
            for k in range(r):
                inner_jk = bracket_sections(algebroid, frames[j], frames[k])
                inner_ki = bracket_sections(algebroid, frames[k], frames[i])
                inner_ij = bracket_sections(algebroid, frames[i], frames[j])
                t1 = bracket_sections(algebroid, frames[i], inner_jk)
                t2 = bracket_sections(algebroid, frames[j], inner_ki)
                t3 = bracket_sections(algebroid, frames[k], inner_ij)
                row_j.append(
                    tuple(
                        t1.coefficients[m] + t2.coefficients[m] + t3.coefficients[m]
                        for m in range(r)
                    )
                )
            row_i.append(row_j)
        jac_defect.append(row_i)
    report.add("jacobi_identity", jac_defect)
    return report


def tangent_prolongation(algebroid: AlgebroidData) -> AlgebroidData:
    """The induced algebroid on the tangent chart, rank doubled.

    Frame ordering: tangent lifts of the original frame first, then the
    vertical (core) lifts.  Brackets of lifts reproduce lifts of
    brackets; anchors are the complete and vertical lifts of the
    original anchors.
    """
    n, r = algebroid.base.dim, algebroid.rank
    tch = tangent_chart(algebroid.base)

    def lift(f: ScalarFn) -> ScalarFn:
        return f.on_chart(tch)

    def fiber_derivative(f: ScalarFn) -> ScalarFn:
        # derivative along the velocity: v^nu times d_nu f, lifted
        acc = ScalarFn.zero(tch)
        for nu in range(n):
            df = f.partial(nu)
            if not df.is_zero():
                acc = acc + lift(df) * ScalarFn.var(tch, n + nu)
        return acc

    anchor = []
    for i in range(r):
        row = [lift(algebroid.anchor[i][mu]) for mu in range(n)]
        row += [fiber_derivative(algebroid.anchor[i][mu]) for mu in range(n)]
        anchor.append(row)
    for i in range(r):
        row = [ScalarFn.zero(tch) for _ in range(n)]
        row += [lift(algebroid.anchor[i][mu]) for mu in range(n)]
        anchor.append(row)

    structure = [[[ScalarFn.zero(tch) for _ in range(2 * r)] for _ in range(2 * r)] for _ in range(2 * r)]
    for i in range(r):
        for j in range(r):
            for k in range(r):
                c = algebroid.structure[i][j][k]
                if c.is_zero():
                    continue
                structure[i][j][k] = lift(c)
                structure[i][j][r + k] = fiber_derivative(c)
                structure[i][r + j][r + k] = lift(c)
                structure[r + j][i][r + k] = -lift(c)

    fiber_names = algebroid.fiber_names + tuple("v_" + f for f in algebroid.fiber_names)
    return AlgebroidData(tch, 2 * r, anchor, structure, fiber_names)


def prolongation_flip(algebroid: AlgebroidData) -> PolyMap:
    """Chart isomorphism from the tangent chart of the total space to the
    total chart of the tangent prolongation (a variable reordering)."""
    src = tangent_chart(algebroid.total_chart())  # (x, u, v_x, v_u)
    ta = tangent_prolongation(algebroid)
    tgt = ta.total_chart()  # (x, v_x, u, v_u)
    comps = tuple(ScalarFn.named_var(src, name) for name in tgt.vars)
    return PolyMap(src, tgt, comps)


def transport_field(z: VectorField, phi: PolyMap, phi_inv: PolyMap) -> VectorField:
    """Push a vector field through an invertible polynomial chart map."""
    jac = jacobian(phi)
    comps = []
    for b in range(phi.target.dim):
        acc = ScalarFn.zero(phi.source)
        for a in range(phi.source.dim):
            entry = jac[b][a]
            if not entry.is_zero():
                acc = acc + entry * z.components[a]
        comps.append(pullback(acc, phi_inv))
    return VectorField(phi.target, tuple(comps))


def scaling_field_of_prolongation(algebroid: AlgebroidData) -> VectorField:
    """The fiber-scaling field of the tangent fibration, written on the
    total chart of the tangent prolongation.

    Its flow rescales velocities, which acts by algebroid maps on the
    prolongation; it is the canonical nontrivial example of a linear
    field passing the infinitesimal-multiplicativity test.
    """
    ta = tangent_prolongation(algebroid)
    tot = ta.total_chart()
    n, r = algebroid.base.dim, algebroid.rank
    comps = [ScalarFn.zero(tot) for _ in range(tot.dim)]
    for mu in range(n):
        comps[n + mu] = ScalarFn.var(tot, n + mu)  # v_x block
    for i in range(r):
        comps[2 * n + r + i] = ScalarFn.var(tot, 2 * n + r + i)  # v_u block
    return VectorField(tot, tuple(comps))


def _strip_to_base(f: ScalarFn, base: Chart, n_base: int) -> ScalarFn:
    terms = {}
    for expo, coeff in f.iter_terms():
        if any(expo[n_base:]):
            raise NotLinearField("component depends on fiber variables")
        terms[expo[:n_base]] = coeff
    return ScalarFn(base, terms)


@dataclass(frozen=True)
class LinearFieldData:
    """Base field and frame matrix of a fiber-wise linear vector field."""

    base_field: tuple[ScalarFn, ...]
    matrix: tuple  # [i][j] with fiber component i = sum_j matrix[i][j] u^j


def split_linear_field(algebroid: AlgebroidData, z: VectorField) -> LinearFieldData:
    tot = algebroid.total_chart()
    if z.chart != tot:
        raise ChartMismatch("field must live on the algebroid total chart")
    n, r = algebroid.base.dim, algebroid.rank
    base_field = tuple(_strip_to_base(z.components[mu], algebroid.base, n) for mu in range(n))
    matrix = []
    for i in range(r):
        comp = z.components[n + i]
        rows = [dict() for _ in range(r)]
        for expo, coeff in comp.iter_terms():
            fiber = expo[n:]
            if sum(fiber) != 1:
                raise NotLinearField("fiber component is not homogeneous linear")
            j = fiber.index(1)
            rows[j][expo[:n]] = coeff
        matrix.append(tuple(ScalarFn(algebroid.base, rows[j]) for j in range(r)))
    return LinearFieldData(base_field, tuple(matrix))


def check_im_vector_field(algebroid: AlgebroidData, z: VectorField, jet_degree: int = 2):
    """Extract the derivation of a linear field and test that it derives
    the bracket and intertwines the anchor, on generic jet arguments.

    Returns (ok, report); raises NotLinearField when the field is not
    linear over the bundle projection.
    """
    data = split_linear_field(algebroid, z)
    n, r = algebroid.base.dim, algebroid.rank
    scope = JetScope.build(algebroid.base, [("a", r), ("b", r)], jet_degree)
    ch = scope.chart
    anchor = scope.lift_all(algebroid.anchor)
    structure = scope.lift_all(algebroid.structure)
    base_field = tuple(scope.lift(f) for f in data.base_field)
    matrix = scope.lift_all(data.matrix)

    def derivation(sec):
        out = []
        for i in range(r):
            acc = ScalarFn.zero(ch)
            for mu in range(n):
                if not base_field[mu].is_zero():
                    acc = acc + base_field[mu] * sec[i].partial(mu)
            for j in range(r):
                m = matrix[i][j]
                if not m.is_zero():
                    acc = acc - m * sec[j]
            out.append(acc)
        return tuple(out)

    a = scope.generic("a")
    b = scope.generic("b")
    br = _bracket_raw(anchor, structure, n, r, a, b, ch)
    lhs = derivation(br)
    rhs1 = _bracket_raw(anchor, structure, n, r, derivation(a), b, ch)
    rhs2 = _bracket_raw(anchor, structure, n, r, a, derivation(b), ch)
    defect1 = tuple(lhs[k] - rhs1[k] - rhs2[k] for k in range(r))

    # anchor compatibility: anchor of the derivation against the bracket
    # of the base field with the anchor image
    rho_a = [ScalarFn.zero(ch) for _ in range(n)]
    for mu in range(n):
        for i in range(r):
            if not anchor[i][mu].is_zero():
                rho_a[mu] = rho_a[mu] + anchor[i][mu] * a[i]
    da = derivation(a)
    defect2 = []
    for mu in range(n):
        acc = ScalarFn.zero(ch)
        for i in range(r):
            if not anchor[i][mu].is_zero():
                acc = acc + anchor[i][mu] * da[i]
        for nu in range(n):
            acc = acc - base_field[nu] * rho_a[mu].partial(nu)
            acc = acc + rho_a[nu] * base_field[mu].partial(nu)
        defect2.append(acc)

    report = DefectReport()
    report.add("bracket_derivation", defect1)
    report.add("anchor_intertwines", tuple(defect2))
    return report.passed, report


def tangent_algebroid(chart: Chart) -> AlgebroidData:
    """The tangent bundle as an algebroid: identity anchor, zero structure."""
    n = chart.dim
    anchor = [
        [ScalarFn.const(chart, 1 if i == mu else 0) for mu in range(n)] for i in range(n)
    ]
    return AlgebroidData(chart, n, anchor, zeros(chart, n, n, n))
