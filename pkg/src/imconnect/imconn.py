"""Component calculus for compatible fiber-wise linear connections on the
tangent bundle of a Lie algebroid.

A component tuple holds

* ``f_op[i][mu][nu][k]``: values of the second-order operator on frame
  sections (two covariant base slots, frame output),
* ``conn_a``: a connection on the algebroid bundle (rank r over the base),
* ``conn_m``: a tangent connection on the base,
* ``l_map[i][nu][k]``: a bundle map into base-covector-valued sections.

The operator extends from frame values to arbitrary sections by the
second-order Leibniz rule

    F(f a) = f F(a) + (Hess f) (x) a + df . conn_a a + df (x) l(a),

which in coordinates adds Hessian, symmetrized first-derivative and
l-contraction terms; the extension is computed on demand for generic
jet sections, so every defining identity is checked as an exact
polynomial zero test.
"""

from __future__ import annotations

from dataclasses import dataclass

from .jets import JetScope
from .reports import DefectReport
from .rationals import Q
from .symkernel import (
    Chart,
    PolyMap,
    ScalarFn,
    all_zero,
    freeze,
    map_scalars,
    zeros,
)
from .geometry import (
    ConnectionData,
    ShapeMismatch,
    TensorField,
    geodesic_spray,
    torsion_of,
)
from .algebroid import (
    AlgebroidData,
    _bracket_raw,
    check_im_vector_field,
    prolongation_flip,
    tangent_prolongation,
    transport_field,
)


class NotFiberwiseLinear(ValueError):
    """Christoffel data does not match the fiber-wise linear shape."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class IMConnComponents:
    algebroid: AlgebroidData
    f_op: tuple  # [i][mu][nu][k]
    conn_a: ConnectionData
    conn_m: ConnectionData
    l_map: tuple  # [i][nu][k]

    def __post_init__(self):
        object.__setattr__(self, "f_op", freeze(self.f_op))
        object.__setattr__(self, "l_map", freeze(self.l_map))
        n, r = self.algebroid.base.dim, self.algebroid.rank
        _expect_shape(self.f_op, (r, n, n, r), "quadratic operator values")
        _expect_shape(self.l_map, (r, n, r), "contraction map values")
        if self.conn_a.base_chart != self.algebroid.base or self.conn_a.rank != r:
            raise ShapeMismatch("bundle connection does not match the algebroid")
        if self.conn_m.base_chart != self.algebroid.base or not self.conn_m.is_tangent():
            raise ShapeMismatch("base connection must be a tangent connection")


@dataclass(frozen=True)
class IMFormComponents:
    algebroid: AlgebroidData
    d_op: tuple  # [i][mu][nu][k], antisymmetric in (mu, nu)
    l_map: tuple  # [i][nu][k]
    tm: TensorField  # skew (2,1) base tensor

    def __post_init__(self):
        object.__setattr__(self, "d_op", freeze(self.d_op))
        object.__setattr__(self, "l_map", freeze(self.l_map))
        n, r = self.algebroid.base.dim, self.algebroid.rank
        _expect_shape(self.d_op, (r, n, n, r), "first-order operator values")
        _expect_shape(self.l_map, (r, n, r), "contraction map values")
        for i in range(r):
            for mu in range(n):
                for nu in range(n):
                    for k in range(r):
                        if not (self.d_op[i][mu][nu][k] + self.d_op[i][nu][mu][k]).is_zero():
                            raise ShapeMismatch("operator values must be antisymmetric")
        if self.tm.chart != self.algebroid.base or not self.tm.skew:
            raise ShapeMismatch("base tensor must be a skew (2,1)-tensor on the base")


def _expect_shape(nested, shape, what):
    if not shape:
        if isinstance(nested, (tuple, list)):
            raise ShapeMismatch(f"{what}: too deeply nested for shape")
        return
    if not isinstance(nested, (tuple, list)) or len(nested) != shape[0]:
        raise ShapeMismatch(f"{what}: expected shape {shape}")
    for child in nested:
        _expect_shape(child, shape[1:], what)


def zero_components(algebroid: AlgebroidData) -> IMConnComponents:
    n, r = algebroid.base.dim, algebroid.rank
    ch = algebroid.base
    return IMConnComponents(
        algebroid,
        zeros(ch, r, n, n, r),
        ConnectionData.flat(ch, r),
        ConnectionData.flat(ch, n),
        zeros(ch, r, n, r),
    )


def components_difference(c1: IMConnComponents, c2: IMConnComponents) -> IMConnComponents:
    if c1.algebroid is not c2.algebroid and c1.algebroid != c2.algebroid:
        raise ShapeMismatch("component difference needs a common algebroid")
    n, r = c1.algebroid.base.dim, c1.algebroid.rank
    sub = lambda a, b: a - b
    f_op = tuple(
        tuple(
            tuple(
                tuple(sub(c1.f_op[i][mu][nu][k], c2.f_op[i][mu][nu][k]) for k in range(r))
                for nu in range(n)
            )
            for mu in range(n)
        )
        for i in range(r)
    )
    ga = tuple(
        tuple(
            tuple(sub(c1.conn_a.gamma[mu][b][c], c2.conn_a.gamma[mu][b][c]) for c in range(r))
            for b in range(r)
        )
        for mu in range(n)
    )
    gm = tuple(
        tuple(
            tuple(sub(c1.conn_m.gamma[mu][b][c], c2.conn_m.gamma[mu][b][c]) for c in range(n))
            for b in range(n)
        )
        for mu in range(n)
    )
    l_map = tuple(
        tuple(
            tuple(sub(c1.l_map[i][nu][k], c2.l_map[i][nu][k]) for k in range(r))
            for nu in range(n)
        )
        for i in range(r)
    )
    return IMConnComponents(
        c1.algebroid,
        f_op,
        ConnectionData(c1.algebroid.base, r, ga),
        ConnectionData(c1.algebroid.base, n, gm),
        l_map,
    )


class _Eval:
    """Lifted component data on a jet-extended chart, with the coordinate
    realizations of all operators appearing in the defining identities."""

    def __init__(self, comps: IMConnComponents, slots, degree):
        a = comps.algebroid
        self.n, self.r = a.base.dim, a.rank
        self.scope = JetScope.build(a.base, slots, degree)
        ch = self.scope.chart
        self.ch = ch
        lift = self.scope.lift_all
        self.anchor = lift(a.anchor)
        self.structure = lift(a.structure)
        self.f = lift(comps.f_op)
        self.ga = lift(comps.conn_a.gamma)  # [mu][i][k]
        self.gm = lift(comps.conn_m.gamma)  # [mu][nu][lam]
        self.l = lift(comps.l_map)

    # sections ---------------------------------------------------------------

    def generic(self, name):
        return self.scope.generic(name)

    def brk(self, a, b):
        return _bracket_raw(self.anchor, self.structure, self.n, self.r, a, b, self.ch)

    def rho(self, a):
        out = []
        for mu in range(self.n):
            acc = ScalarFn.zero(self.ch)
            for i in range(self.r):
                rho = self.anchor[i][mu]
                if not rho.is_zero():
                    acc = acc + rho * a[i]
            out.append(acc)
        return tuple(out)

    def field_bracket(self, x, y):
        out = []
        for mu in range(self.n):
            acc = ScalarFn.zero(self.ch)
            for nu in range(self.n):
                acc = acc + x[nu] * y[mu].partial(nu) - y[nu] * x[mu].partial(nu)
            out.append(acc)
        return tuple(out)

    def nabla_a(self, x, b):
        """Bundle-connection derivative of section b along base field x."""
        out = []
        for k in range(self.r):
            acc = ScalarFn.zero(self.ch)
            for mu in range(self.n):
                term = b[k].partial(mu)
                for i in range(self.r):
                    g = self.ga[mu][i][k]
                    if not g.is_zero():
                        term = term + g * b[i]
                if not x[mu].is_zero():
                    acc = acc + x[mu] * term
            out.append(acc)
        return tuple(out)

    def f_of(self, a):
        """Second-order operator on a section: [mu][nu][k] array."""
        n, r = self.n, self.r
        da = [[a[k].partial(mu) for k in range(r)] for mu in range(n)]
        out = []
        for mu in range(n):
            row = []
            for nu in range(n):
                entry = []
                for k in range(r):
                    acc = da[mu][k].partial(nu)  # Hessian of the k-th coefficient
                    for i in range(r):
                        g = self.f[i][mu][nu][k]
                        if not g.is_zero():
                            acc = acc + g * a[i]
                    for lam in range(n):
                        g = self.gm[mu][nu][lam]
                        if not g.is_zero():
                            acc = acc - g * da[lam][k]
                    for i in range(r):
                        g1 = self.ga[nu][i][k]
                        if not g1.is_zero():
                            acc = acc + da[mu][i] * g1
                        g2 = self.ga[mu][i][k]
                        if not g2.is_zero():
                            acc = acc + da[nu][i] * g2
                        g3 = self.l[i][nu][k]
                        if not g3.is_zero():
                            acc = acc + da[mu][i] * g3
                    entry.append(acc)
                row.append(entry)
            out.append(row)
        return out

    def d_of(self, a, f_vals=None):
        f_vals = f_vals if f_vals is not None else self.f_of(a)
        n, r = self.n, self.r
        return [
            [[f_vals[mu][nu][k] - f_vals[nu][mu][k] for k in range(r)] for nu in range(n)]
            for mu in range(n)
        ]

    def l_of(self, a):
        n, r = self.n, self.r
        out = []
        for nu in range(n):
            entry = []
            for k in range(r):
                acc = ScalarFn.zero(self.ch)
                for i in range(r):
                    g = self.l[i][nu][k]
                    if not g.is_zero():
                        acc = acc + g * a[i]
                entry.append(acc)
            out.append(entry)
        return out

    def lie_sec_on_tensor(self, a, s_vals):
        """Lie derivative along a section of an A-valued covariant 2-tensor
        given by its [mu][nu][k] values: bracket with the values minus
        contractions with derivatives of the anchor image."""
        n, r = self.n, self.r
        rho_a = self.rho(a)
        drho = [[rho_a[lam].partial(mu) for lam in range(n)] for mu in range(n)]
        out = []
        for mu in range(n):
            row = []
            for nu in range(n):
                sec = [s_vals[mu][nu][k] for k in range(r)]
                br = self.brk(a, sec)
                entry = []
                for k in range(r):
                    acc = br[k]
                    for lam in range(n):
                        if not drho[mu][lam].is_zero():
                            acc = acc + drho[mu][lam] * s_vals[lam][nu][k]
                        if not drho[nu][lam].is_zero():
                            acc = acc + drho[nu][lam] * s_vals[mu][lam][k]
                    entry.append(acc)
                row.append(entry)
            out.append(row)
        return out

    def lie_sec_on_oneform(self, a, l_vals):
        """Same pattern for A-valued 1-forms given as [nu][k] values."""
        n, r = self.n, self.r
        rho_a = self.rho(a)
        out = []
        for nu in range(n):
            sec = [l_vals[nu][k] for k in range(r)]
            br = self.brk(a, sec)
            entry = []
            for k in range(r):
                acc = br[k]
                for lam in range(n):
                    d = rho_a[lam].partial(nu)
                    if not d.is_zero():
                        acc = acc + d * l_vals[lam][k]
                entry.append(acc)
            out.append(entry)
        return out


def im_connection_defects(comps: IMConnComponents, jet_degree: int = 2) -> dict:
    """Exact defect arrays of the four defining identities, evaluated on
    generic jet sections (and a generic base field where one appears)."""
    ev = _Eval(comps, [("a", comps.algebroid.rank), ("b", comps.algebroid.rank), ("X", comps.algebroid.base.dim)], jet_degree)
    n, r = ev.n, ev.r
    a = ev.generic("a")
    b = ev.generic("b")
    x = ev.generic("X")
    rho_a, rho_b = ev.rho(a), ev.rho(b)
    br_ab = ev.brk(a, b)
    f_a = ev.f_of(a)
    f_b = ev.f_of(b)
    l_a = ev.l_of(a)
    l_b = ev.l_of(b)

    # bracket recovered from the two connection derivatives and the
    # contraction map
    nab_a_b = ev.nabla_a(rho_a, b)
    nab_b_a = ev.nabla_a(rho_b, a)
    defect1 = []
    for k in range(r):
        acc = br_ab[k] - nab_a_b[k] + nab_b_a[k]
        for nu in range(n):
            if not rho_b[nu].is_zero():
                acc = acc + rho_b[nu] * l_a[nu][k]
        defect1.append(acc)

    # derivative of the bundle connection along a section, measured by
    # the quadratic operator contracted with the anchor
    lie_conn = []  # [k]: L_a conn(X, b) components
    t1 = ev.nabla_a(x, b)
    t1 = ev.brk(a, t1)
    comm = ev.field_bracket(rho_a, x)
    t2 = ev.nabla_a(comm, b)
    t3 = ev.nabla_a(x, br_ab)
    defect2 = []
    for k in range(r):
        acc = t1[k] - t2[k] - t3[k]
        for mu in range(n):
            if x[mu].is_zero():
                continue
            for nu in range(n):
                if not rho_b[nu].is_zero():
                    acc = acc - f_a[mu][nu][k] * x[mu] * rho_b[nu]
        defect2.append(acc)

    # derivative property of the quadratic operator
    f_br = ev.f_of(br_ab)
    lie_a_fb = ev.lie_sec_on_tensor(a, f_b)
    lie_b_fa = ev.lie_sec_on_tensor(b, f_a)
    defect3 = [
        [
            [
                f_br[mu][nu][k] - lie_a_fb[mu][nu][k] + lie_b_fa[mu][nu][k]
                for k in range(r)
            ]
            for nu in range(n)
        ]
        for mu in range(n)
    ]

    # derivative property of the contraction map, with the antisymmetrized
    # quadratic operator appearing through the anchor contraction
    l_br = ev.l_of(br_ab)
    lie_a_lb = ev.lie_sec_on_oneform(a, l_b)
    d_a = ev.d_of(a, f_a)
    defect4 = []
    for nu in range(n):
        entry = []
        for k in range(r):
            acc = l_br[nu][k] - lie_a_lb[nu][k]
            for mu in range(n):
                if not rho_b[mu].is_zero():
                    acc = acc + rho_b[mu] * d_a[mu][nu][k]
            entry.append(acc)
        defect4.append(entry)

    return {
        "bracket_identity": tuple(defect1),
        "bundle_connection_derivative": tuple(defect2),
        "quadratic_operator_derivative": freeze(defect3),
        "contraction_map_derivative": freeze(defect4),
    }


def check_im_connection(comps: IMConnComponents, jet_degree: int = 2) -> DefectReport:
    report = DefectReport()
    for name, defect in im_connection_defects(comps, jet_degree).items():
        report.add(name, defect)
    return report


def derived_identities_defects(comps: IMConnComponents, jet_degree: int = 2) -> dict:
    ev = _Eval(comps, [("a", comps.algebroid.rank), ("b", comps.algebroid.rank)], jet_degree)
    n, r = ev.n, ev.r
    a = ev.generic("a")
    b = ev.generic("b")
    rho_a, rho_b = ev.rho(a), ev.rho(b)
    l_a, l_b = ev.l_of(a), ev.l_of(b)

    # antisymmetry of the anchor contraction of the l-map
    anti = []
    for k in range(r):
        acc = ScalarFn.zero(ev.ch)
        for nu in range(n):
            acc = acc + rho_a[nu] * l_b[nu][k] + rho_b[nu] * l_a[nu][k]
        anti.append(acc)

    # the anchor is parallel for the pair of connections
    par = []
    for mu in range(n):
        row = []
        for i in range(r):
            entry = []
            for lam in range(n):
                acc = ev.anchor[i][lam].partial(mu)
                for nu in range(n):
                    g = ev.gm[mu][nu][lam]
                    if not g.is_zero():
                        acc = acc + g * ev.anchor[i][nu]
                for j in range(r):
                    g = ev.ga[mu][i][j]
                    if not g.is_zero():
                        acc = acc - g * ev.anchor[j][lam]
                entry.append(acc)
            row.append(entry)
        par.append(row)

    # derivative of the base connection along anchor images equals the
    # anchor image of the quadratic operator
    f_a = ev.f_of(a)
    base = []
    for mu in range(n):
        row = []
        for nu in range(n):
            entry = []
            for lam in range(n):
                acc = rho_a[lam].partial(nu).partial(mu)
                for sig in range(n):
                    acc = acc + rho_a[sig] * ev.gm[mu][nu][lam].partial(sig)
                    acc = acc - ev.gm[mu][nu][sig] * rho_a[lam].partial(sig)
                    acc = acc + rho_a[sig].partial(mu) * ev.gm[sig][nu][lam]
                    acc = acc + rho_a[sig].partial(nu) * ev.gm[mu][sig][lam]
                for k in range(r):
                    g = ev.anchor[k][lam]
                    if not g.is_zero():
                        acc = acc - g * f_a[mu][nu][k]
                entry.append(acc)
            row.append(entry)
        base.append(row)

    return {
        "anchor_contraction_antisymmetry": tuple(anti),
        "anchor_parallel": freeze(par),
        "base_connection_derivative": freeze(base),
    }


def derived_identities_check(comps: IMConnComponents, jet_degree: int = 2) -> DefectReport:
    if not check_im_connection(comps, jet_degree).passed:
        raise PreconditionError("derived identities assume the defining ones hold")
    report = DefectReport()
    for name, defect in derived_identities_defects(comps, jet_degree).items():
        report.add(name, defect)
    return report


def im_torsion(comps: IMConnComponents) -> IMFormComponents:
    n, r = comps.algebroid.base.dim, comps.algebroid.rank
    d_op = [
        [
            [
                [comps.f_op[i][mu][nu][k] - comps.f_op[i][nu][mu][k] for k in range(r)]
                for nu in range(n)
            ]
            for mu in range(n)
        ]
        for i in range(r)
    ]
    return IMFormComponents(
        comps.algebroid, d_op, comps.l_map, torsion_of(comps.conn_m)
    )


def im_form_defects(form: IMFormComponents, jet_degree: int = 2) -> dict:
    a_data = form.algebroid
    n, r = a_data.base.dim, a_data.rank
    scope = JetScope.build(a_data.base, [("a", r), ("b", r)], jet_degree)
    ch = scope.chart
    anchor = scope.lift_all(a_data.anchor)
    structure = scope.lift_all(a_data.structure)
    d_vals = scope.lift_all(form.d_op)
    l_vals = scope.lift_all(form.l_map)
    tm = scope.lift_all(form.tm.comps)

    a = scope.generic("a")
    b = scope.generic("b")

    def brk(u, v):
        return _bracket_raw(anchor, structure, n, r, u, v, ch)

    def rho(u):
        out = []
        for mu in range(n):
            acc = ScalarFn.zero(ch)
            for i in range(r):
                if not anchor[i][mu].is_zero():
                    acc = acc + anchor[i][mu] * u[i]
            out.append(acc)
        return tuple(out)

    def d_of(u):
        du = [[u[k].partial(mu) for k in range(r)] for mu in range(n)]
        out = []
        for mu in range(n):
            row = []
            for nu in range(n):
                entry = []
                for k in range(r):
                    acc = ScalarFn.zero(ch)
                    for i in range(r):
                        g = d_vals[i][mu][nu][k]
                        if not g.is_zero():
                            acc = acc + g * u[i]
                        g1 = l_vals[i][nu][k]
                        if not g1.is_zero():
                            acc = acc + du[mu][i] * g1
                        g2 = l_vals[i][mu][k]
                        if not g2.is_zero():
                            acc = acc - du[nu][i] * g2
                    for lam in range(n):
                        g = tm[mu][nu][lam]
                        if not g.is_zero():
                            acc = acc - g * du[lam][k]
                    entry.append(acc)
                row.append(entry)
            out.append(row)
        return out

    def l_of(u):
        out = []
        for nu in range(n):
            entry = []
            for k in range(r):
                acc = ScalarFn.zero(ch)
                for i in range(r):
                    g = l_vals[i][nu][k]
                    if not g.is_zero():
                        acc = acc + g * u[i]
                entry.append(acc)
            out.append(entry)
        return out

    rho_a, rho_b = rho(a), rho(b)
    br_ab = brk(a, b)
    d_a, d_b = d_of(a), d_of(b)
    l_a, l_b = l_of(a), l_of(b)
    drho_a = [[rho_a[lam].partial(mu) for lam in range(n)] for mu in range(n)]
    drho_b = [[rho_b[lam].partial(mu) for lam in range(n)] for mu in range(n)]

    def lie_on_2form(u, rho_u, drho_u, vals):
        out = []
        for mu in range(n):
            row = []
            for nu in range(n):
                sec = [vals[mu][nu][k] for k in range(r)]
                brv = brk(u, sec)
                entry = []
                for k in range(r):
                    acc = brv[k]
                    for lam in range(n):
                        if not drho_u[mu][lam].is_zero():
                            acc = acc + drho_u[mu][lam] * vals[lam][nu][k]
                        if not drho_u[nu][lam].is_zero():
                            acc = acc + drho_u[nu][lam] * vals[mu][lam][k]
                    entry.append(acc)
                row.append(entry)
            out.append(row)
        return out

    # derivative property of the first-order operator
    d_br = d_of(br_ab)
    lie_a_db = lie_on_2form(a, rho_a, drho_a, d_b)
    lie_b_da = lie_on_2form(b, rho_b, drho_b, d_a)
    eq1 = [
        [
            [d_br[mu][nu][k] - lie_a_db[mu][nu][k] + lie_b_da[mu][nu][k] for k in range(r)]
            for nu in range(n)
        ]
        for mu in range(n)
    ]

    # derivative property of the contraction map
    l_br = l_of(br_ab)
    eq2 = []
    for nu in range(n):
        sec = [l_b[nu][k] for k in range(r)]
        brv = brk(a, sec)
        entry = []
        for k in range(r):
            acc = l_br[nu][k] - brv[k]
            for lam in range(n):
                if not drho_a[nu][lam].is_zero():
                    acc = acc + drho_a[nu][lam] * l_b[lam][k]
            for mu in range(n):
                if not rho_b[mu].is_zero():
                    acc = acc + rho_b[mu] * d_a[mu][nu][k]
            entry.append(acc)
        eq2.append(entry)

    # flow of the base tensor along anchor images
    eq3 = []
    for mu in range(n):
        row = []
        for nu in range(n):
            entry = []
            for lam in range(n):
                acc = ScalarFn.zero(ch)
                for sig in range(n):
                    acc = acc + rho_a[sig] * tm[mu][nu][lam].partial(sig)
                    acc = acc - tm[mu][nu][sig] * rho_a[lam].partial(sig)
                    acc = acc + rho_a[sig].partial(mu) * tm[sig][nu][lam]
                    acc = acc + rho_a[sig].partial(nu) * tm[mu][sig][lam]
                for k in range(r):
                    g = anchor[k][lam]
                    if not g.is_zero():
                        acc = acc - g * d_a[mu][nu][k]
                entry.append(acc)
            row.append(entry)
        eq3.append(row)

    # antisymmetry of the anchor contraction
    eq4 = []
    for k in range(r):
        acc = ScalarFn.zero(ch)
        for nu in range(n):
            acc = acc + rho_a[nu] * l_b[nu][k] + rho_b[nu] * l_a[nu][k]
        eq4.append(acc)

    # anchor contraction of the base tensor against the contraction map
    eq5 = []
    for nu in range(n):
        entry = []
        for lam in range(n):
            acc = ScalarFn.zero(ch)
            for mu in range(n):
                if not rho_a[mu].is_zero():
                    acc = acc + rho_a[mu] * tm[mu][nu][lam]
            for k in range(r):
                g = anchor[k][lam]
                if not g.is_zero():
                    acc = acc - g * l_a[nu][k]
            entry.append(acc)
        eq5.append(entry)

    return {
        "operator_derivative": freeze(eq1),
        "contraction_derivative": freeze(eq2),
        "base_tensor_flow": freeze(eq3),
        "anchor_contraction_antisymmetry": tuple(eq4),
        "anchor_vs_base_tensor": freeze(eq5),
    }


def check_im_form(form: IMFormComponents, jet_degree: int = 2) -> DefectReport:
    report = DefectReport()
    for name, defect in im_form_defects(form, jet_degree).items():
        report.add(name, defect)
    return report


# -- the dictionary with fiber-wise linear connections ------------------------


def fiberwise_linear_from_components(comps: IMConnComponents) -> ConnectionData:
    """Assemble the tangent connection on the total space whose
    Christoffels are affine in the fiber coordinates.

    Base-by-base derivatives keep the base Christoffels plus a
    fiber-linear vertical part built from the frame values of the
    quadratic operator; mixed derivatives use the bundle connection,
    with the contraction map measuring the failure of symmetry; two
    vertical directions are parallel.
    """
    a = comps.algebroid
    n, r = a.base.dim, a.rank
    tot = a.total_chart()

    def lift(f):
        return f.on_chart(tot)

    u = [ScalarFn.var(tot, n + i) for i in range(r)]
    dim = n + r
    gamma = [[[ScalarFn.zero(tot) for _ in range(dim)] for _ in range(dim)] for _ in range(dim)]
    for mu in range(n):
        for nu in range(n):
            for lam in range(n):
                g = comps.conn_m.gamma[mu][nu][lam]
                if not g.is_zero():
                    gamma[mu][nu][lam] = lift(g)
            for k in range(r):
                acc = ScalarFn.zero(tot)
                for i in range(r):
                    g = comps.f_op[i][mu][nu][k]
                    if not g.is_zero():
                        acc = acc + lift(g) * u[i]
                gamma[mu][nu][n + k] = acc
        for i in range(r):
            for j in range(r):
                g = comps.conn_a.gamma[mu][i][j]
                if not g.is_zero():
                    gamma[mu][n + i][n + j] = lift(g)
                g2 = comps.l_map[i][mu][j]
                gamma[n + i][mu][n + j] = gamma[mu][n + i][n + j] + lift(g2)
    return ConnectionData(tot, dim, gamma)


def components_from_fiberwise_linear(
    conn: ConnectionData, algebroid: AlgebroidData
) -> IMConnComponents:
    """Extract the component tuple back from an affine-in-fiber tangent
    connection on the total space; raises when the Christoffel data does
    not have the fiber-wise linear shape."""
    a = algebroid
    n, r = a.base.dim, a.rank
    tot = a.total_chart()
    if conn.base_chart != tot or conn.rank != n + r:
        raise ShapeMismatch("connection does not live on the algebroid total space")

    def base_only(f: ScalarFn, what: str) -> ScalarFn:
        terms = {}
        for expo, coeff in f.iter_terms():
            if any(expo[n:]):
                raise NotFiberwiseLinear(f"{what} depends on fiber coordinates")
            terms[expo[:n]] = coeff
        return ScalarFn(a.base, terms)

    def fiber_linear(f: ScalarFn, what: str):
        rows = [dict() for _ in range(r)]
        for expo, coeff in f.iter_terms():
            fiber = expo[n:]
            if sum(fiber) != 1:
                raise NotFiberwiseLinear(f"{what} is not homogeneous linear in fibers")
            rows[fiber.index(1)][expo[:n]] = coeff
        return [ScalarFn(a.base, rows[i]) for i in range(r)]

    gm = [[[None] * n for _ in range(n)] for _ in range(n)]
    f_op = [[[[None] * r for _ in range(n)] for _ in range(n)] for _ in range(r)]
    ga = [[[None] * r for _ in range(r)] for _ in range(n)]
    l_map = [[[None] * r for _ in range(n)] for _ in range(r)]

    for mu in range(n):
        for nu in range(n):
            for lam in range(n):
                gm[mu][nu][lam] = base_only(conn.gamma[mu][nu][lam], "base block")
            vertical = [conn.gamma[mu][nu][n + k] for k in range(r)]
            for k in range(r):
                if vertical[k].is_zero():
                    for i in range(r):
                        f_op[i][mu][nu][k] = ScalarFn.zero(a.base)
                else:
                    cols = fiber_linear(vertical[k], "vertical base block")
                    for i in range(r):
                        f_op[i][mu][nu][k] = cols[i]
    for mu in range(n):
        for i in range(r):
            for lam in range(n):
                if not conn.gamma[mu][n + i][lam].is_zero() or not conn.gamma[n + i][mu][lam].is_zero():
                    raise NotFiberwiseLinear("mixed block has base-direction output")
            for j in range(r):
                ga[mu][i][j] = base_only(conn.gamma[mu][n + i][n + j], "mixed block")
                both = base_only(conn.gamma[n + i][mu][n + j], "mixed block")
                l_map[i][mu][j] = both - ga[mu][i][j]
    for i in range(r):
        for j in range(r):
            for c in range(n + r):
                if not conn.gamma[n + i][n + j][c].is_zero():
                    raise NotFiberwiseLinear("two vertical directions must be parallel")

    return IMConnComponents(
        a,
        f_op,
        ConnectionData(a.base, r, ga),
        ConnectionData(a.base, n, gm),
        l_map,
    )


@dataclass(frozen=True)
class SprayCrossCheck:
    equations_pass: bool
    spray_route_pass: bool
    agree: bool
    form_pass: bool
    field_pass: bool


def spray_crosscheck(comps: IMConnComponents, jet_degree: int = 2) -> SprayCrossCheck:
    """Check the defining identities against the independent route:
    the torsion components must form a compatible vector-valued 2-form
    and the geodesic spray of the assembled connection must pass the
    linear-field test on the tangent prolongation.

    The two booleans must agree on every input; their agreement is the
    executable content of the torsion/spray characterization.
    """
    equations = check_im_connection(comps, jet_degree).passed

    form_ok = check_im_form(im_torsion(comps), jet_degree).passed

    a = comps.algebroid
    conn = fiberwise_linear_from_components(comps)
    z = geodesic_spray(conn)
    flip = prolongation_flip(a)
    flip_inv = PolyMap(
        flip.target, flip.source, tuple(ScalarFn.named_var(flip.target, v) for v in flip.source.vars)
    )
    z_moved = transport_field(z, flip, flip_inv)
    ta = tangent_prolongation(a)
    field_ok, _ = check_im_vector_field(ta, z_moved, jet_degree)

    spray_route = form_ok and field_ok
    return SprayCrossCheck(
        equations, spray_route, equations == spray_route, form_ok, field_ok
    )
