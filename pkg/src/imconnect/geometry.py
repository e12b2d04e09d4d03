"""Connections and tensors on charts.

Index conventions (fixed for the whole package):

* ConnectionData.gamma[mu][b][c] is the coefficient of the c-th frame
  vector in the covariant derivative of the b-th frame vector along the
  mu-th coordinate direction,
* torsion comps[mu][nu][lam]: direction slots first, output last,
* curvature[mu][nu][b][c]: antisymmetric in (mu, nu), acting on frame
  index b with output index c,
* jacobians are [target component][source variable].

Everything is immutable; functions return new values.
"""

from __future__ import annotations

from dataclasses import dataclass

from .rationals import Q
from .symkernel import (
    Chart,
    ChartMismatch,
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


class ShapeMismatch(ValueError):
    pass


class RestrictionHypothesisError(ValueError):
    """The projectability hypotheses for restricting a product connection fail."""


class MalformedFiberedChart(ValueError):
    """Embedding/retraction data is inconsistent with the claimed fiber product."""


@dataclass(frozen=True)
class TensorField:
    """A (p, q)-tensor with component array indexed (cov..., con...)."""

    chart: Chart
    p: int
    q: int
    comps: tuple
    skew: bool = False

    def __post_init__(self):
        object.__setattr__(self, "comps", freeze(self.comps))
        dim = self.chart.dim
        _check_shape(self.comps, (dim,) * (self.p + self.q))
        if self.skew:
            if self.p != 2 or self.q != 1:
                raise ShapeMismatch("skew flag is only tracked for (2,1)-tensors")
            for mu in range(dim):
                for nu in range(dim):
                    for lam in range(dim):
                        if (
                            self.comps[mu][nu][lam] + self.comps[nu][mu][lam]
                        ).is_zero() is False:
                            raise ShapeMismatch("skew flag set but components are not")

    def comp(self, *idx):
        node = self.comps
        for i in idx:
            node = node[i]
        return node


def _check_shape(nested, shape):
    if not shape:
        if isinstance(nested, (tuple, list)):
            raise ShapeMismatch("component array deeper than declared valence")
        return
    if not isinstance(nested, (tuple, list)) or len(nested) != shape[0]:
        raise ShapeMismatch(f"expected axis of length {shape[0]}")
    for x in nested:
        _check_shape(x, shape[1:])


@dataclass(frozen=True)
class ConnectionData:
    """Christoffel data of a linear connection on a trivialized bundle."""

    base_chart: Chart
    rank: int
    gamma: tuple

    def __post_init__(self):
        object.__setattr__(self, "gamma", freeze(self.gamma))
        _check_shape(self.gamma, (self.base_chart.dim, self.rank, self.rank))

    @staticmethod
    def flat(chart: Chart, rank: int) -> "ConnectionData":
        return ConnectionData(chart, rank, zeros(chart, chart.dim, rank, rank))

    def is_tangent(self) -> bool:
        return self.rank == self.base_chart.dim


@dataclass(frozen=True)
class VectorField:
    chart: Chart
    components: tuple[ScalarFn, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != self.chart.dim:
            raise ShapeMismatch("vector field needs one component per variable")
        for c in self.components:
            if c.chart != self.chart:
                raise ChartMismatch("vector field component on wrong chart")


# spec name for sprays and their relatives on a tangent chart
VectorFieldOnTangent = VectorField


def vf_bracket(x: VectorField, y: VectorField) -> VectorField:
    if x.chart != y.chart:
        raise ChartMismatch("bracket of fields on different charts")
    comps = []
    for a in range(x.chart.dim):
        acc = ScalarFn.zero(x.chart)
        for b in range(x.chart.dim):
            acc = acc + x.components[b] * y.components[a].partial(b)
            acc = acc - y.components[b] * x.components[a].partial(b)
        comps.append(acc)
    return VectorField(x.chart, tuple(comps))


# -- basic invariants of a single connection ---------------------------------


def torsion_of(conn: ConnectionData) -> TensorField:
    """Antisymmetric part of the Christoffels of a tangent connection."""
    if not conn.is_tangent():
        raise ShapeMismatch("torsion needs a tangent-bundle connection")
    dim = conn.base_chart.dim
    comps = [
        [
            [conn.gamma[mu][nu][lam] - conn.gamma[nu][mu][lam] for lam in range(dim)]
            for nu in range(dim)
        ]
        for mu in range(dim)
    ]
    return TensorField(conn.base_chart, 2, 1, comps, skew=True)


def curvature_of(conn: ConnectionData):
    """Curvature array [mu][nu][b][c], antisymmetric in the direction slots."""
    dim = conn.base_chart.dim
    out = []
    for mu in range(dim):
        row_mu = []
        for nu in range(dim):
            row_nu = []
            for b in range(conn.rank):
                row_b = []
                for c in range(conn.rank):
                    acc = conn.gamma[nu][b][c].partial(mu) - conn.gamma[mu][b][c].partial(nu)
                    for a in range(conn.rank):
                        acc = acc + conn.gamma[mu][a][c] * conn.gamma[nu][b][a]
                        acc = acc - conn.gamma[nu][a][c] * conn.gamma[mu][b][a]
                    row_b.append(acc)
                row_nu.append(row_b)
            row_mu.append(row_nu)
        out.append(row_mu)
    return freeze(out)


def symmetric_part(conn: ConnectionData) -> ConnectionData:
    if not conn.is_tangent():
        raise ShapeMismatch("symmetric part needs a tangent-bundle connection")
    dim = conn.base_chart.dim
    gamma = [
        [
            [
                (conn.gamma[mu][nu][lam] + conn.gamma[nu][mu][lam]) * _HALF
                for lam in range(dim)
            ]
            for nu in range(dim)
        ]
        for mu in range(dim)
    ]
    return ConnectionData(conn.base_chart, conn.rank, gamma)


_HALF = Q(1, 2)


def tangent_chart(chart: Chart) -> Chart:
    return Chart("T" + chart.name, chart.vars + tuple("v_" + v for v in chart.vars))


def inject_to_tangent(f: ScalarFn, tchart: Chart) -> ScalarFn:
    return f.on_chart(tchart)


def vertical_lift(x: VectorField, tchart: Chart) -> VectorField:
    n = x.chart.dim
    comps = [ScalarFn.zero(tchart)] * n + [c.on_chart(tchart) for c in x.components]
    return VectorField(tchart, tuple(comps))


def geodesic_spray(conn: ConnectionData) -> VectorField:
    """Second-order field on the tangent chart whose fiber part is minus
    the symmetrized Christoffels contracted with two velocities.

    The coordinate formula is pinned by the double-bracket identity
    with vertical lifts (tested, not assumed): bracketing the spray with
    two vertical lifts returns minus the symmetrized covariant
    derivative, lifted vertically.
    """
    if not conn.is_tangent():
        raise ShapeMismatch("spray needs a tangent-bundle connection")
    n = conn.base_chart.dim
    tch = tangent_chart(conn.base_chart)
    vel = [ScalarFn.var(tch, n + mu) for mu in range(n)]
    comps = list(vel)
    sym = symmetric_part(conn)
    for lam in range(n):
        acc = ScalarFn.zero(tch)
        for mu in range(n):
            for nu in range(n):
                g = sym.gamma[mu][nu][lam]
                if not g.is_zero():
                    acc = acc - g.on_chart(tch) * vel[mu] * vel[nu]
        comps.append(acc)
    return VectorField(tch, tuple(comps))


def tangent_lift(phi: PolyMap) -> PolyMap:
    """The induced map of tangent charts (components plus their differential)."""
    src_t = tangent_chart(phi.source)
    tgt_t = tangent_chart(phi.target)
    n = phi.source.dim
    jac = jacobian(phi)
    comps = [c.on_chart(src_t) for c in phi.components]
    for a in range(phi.target.dim):
        acc = ScalarFn.zero(src_t)
        for mu in range(n):
            entry = jac[a][mu]
            if not entry.is_zero():
                acc = acc + entry.on_chart(src_t) * ScalarFn.var(src_t, n + mu)
        comps.append(acc)
    return PolyMap(src_t, tgt_t, tuple(comps))


# -- relatedness along a polynomial map ---------------------------------------


@dataclass(frozen=True)
class Relatedness:
    """Exact defect of a relatedness identity plus the derived boolean."""

    defect: tuple
    related: bool

    def witness(self):
        return first_nonzero(self.defect)


def check_related_vector_fields(x: VectorField, y: VectorField, phi: PolyMap) -> Relatedness:
    if x.chart != phi.source or y.chart != phi.target:
        raise ChartMismatch("vector fields do not match the map's charts")
    jac = jacobian(phi)
    defect = []
    for a in range(phi.target.dim):
        acc = ScalarFn.zero(phi.source)
        for mu in range(phi.source.dim):
            acc = acc + jac[a][mu] * x.components[mu]
        acc = acc - pullback(y.components[a], phi)
        defect.append(acc)
    defect = freeze(defect)
    return Relatedness(defect, all_zero(defect))


def check_related_tensors(tm: TensorField, tn: TensorField, phi: PolyMap) -> Relatedness:
    """Push-forward versus pull-back defect for (p,1)-tensors."""
    if tm.q != 1 or tn.q != 1 or tm.p != tn.p:
        raise ShapeMismatch("relatedness is implemented for matching (p,1)-tensors")
    if tm.chart != phi.source or tn.chart != phi.target:
        raise ChartMismatch("tensors do not match the map's charts")
    p = tm.p
    jac = jacobian(phi)
    src_dim, tgt_dim = phi.source.dim, phi.target.dim
    tn_pulled = map_scalars(tn.comps, lambda f: pullback(f, phi))

    def build(cov_idx):
        row = []
        for a in range(tgt_dim):
            acc = ScalarFn.zero(phi.source)
            node = tm.comps
            for i in cov_idx:
                node = node[i]
            for lam in range(src_dim):
                if not node[lam].is_zero():
                    acc = acc + jac[a][lam] * node[lam]
            # subtract the pulled-back tensor contracted with jacobians
            for tgt_idx in _indices(tgt_dim, p):
                inner = tn_pulled
                for b in tgt_idx:
                    inner = inner[b]
                term = inner[a]
                if term.is_zero():
                    continue
                for b, mu in zip(tgt_idx, cov_idx):
                    term = term * jac[b][mu]
                acc = acc - term
            row.append(acc)
        return row

    defect = _tabulate(src_dim, p, build)
    defect = freeze(defect)
    return Relatedness(defect, all_zero(defect))


def _indices(dim, count):
    if count == 0:
        yield ()
        return
    for rest in _indices(dim, count - 1):
        for i in range(dim):
            yield (i,) + rest


def _tabulate(dim, depth, build, prefix=()):
    if depth == 0:
        return build(prefix)
    return [_tabulate(dim, depth - 1, build, prefix + (i,)) for i in range(dim)]


@dataclass(frozen=True)
class ConnectionRelatedness:
    defect: tuple
    related: bool
    torsion_related: bool
    sprays_related: bool
    routes_agree: bool

    def witness(self):
        return first_nonzero(self.defect)


def check_related_connections(
    cm: ConnectionData, cn: ConnectionData, phi: PolyMap
) -> ConnectionRelatedness:
    """Covariant-derivative-of-pullback defect, cross-checked against the
    equivalent torsion + spray route.

    The defect entry [a][mu][nu] is the (mu, nu) component of the
    difference between differentiating the pulled-back coordinate
    1-form of the a-th target coordinate and pulling back its
    derivative.
    """
    if not (cm.is_tangent() and cn.is_tangent()):
        raise ShapeMismatch("relatedness applies to tangent connections")
    if cm.base_chart != phi.source or cn.base_chart != phi.target:
        raise ChartMismatch("connections do not match the map's charts")
    jac = jacobian(phi)
    src, tgt = phi.source.dim, phi.target.dim
    gn_pulled = map_scalars(cn.gamma, lambda f: pullback(f, phi))
    defect = []
    for a in range(tgt):
        rows = []
        for mu in range(src):
            row = []
            for nu in range(src):
                acc = phi.components[a].partial(nu).partial(mu)
                for lam in range(src):
                    g = cm.gamma[mu][nu][lam]
                    if not g.is_zero():
                        acc = acc - g * jac[a][lam]
                for b in range(tgt):
                    for c in range(tgt):
                        g = gn_pulled[b][c][a]
                        if not g.is_zero():
                            acc = acc + g * jac[b][mu] * jac[c][nu]
                row.append(acc)
            rows.append(row)
        defect.append(rows)
    defect = freeze(defect)
    related = all_zero(defect)

    torsions = check_related_tensors(torsion_of(cm), torsion_of(cn), phi)
    sprays = check_related_vector_fields(
        geodesic_spray(cm), geodesic_spray(cn), tangent_lift(phi)
    )
    routes_agree = related == (torsions.related and sprays.related)
    return ConnectionRelatedness(
        defect, related, torsions.related, sprays.related, routes_agree
    )


# -- products and fiber products ----------------------------------------------


@dataclass(frozen=True)
class ProductChart:
    chart: Chart
    projections: tuple[PolyMap, ...]


def chart_product(name: str, charts: list[Chart]) -> ProductChart:
    names = []
    for k, c in enumerate(charts):
        names.extend(f"{v}_{k + 1}" for v in c.vars)
    chart = Chart(name, tuple(names))
    projections = []
    offset = 0
    for c in charts:
        comps = tuple(ScalarFn.var(chart, offset + i) for i in range(c.dim))
        projections.append(PolyMap(chart, c, comps))
        offset += c.dim
    return ProductChart(chart, tuple(projections))


def pair_map(maps: list[PolyMap], target: ProductChart) -> PolyMap:
    """(phi_1, ..., phi_k) : common source -> product of the targets."""
    source = maps[0].source
    comps: list[ScalarFn] = []
    for phi in maps:
        if phi.source != source:
            raise ChartMismatch("pair map components have different sources")
        comps.extend(phi.components)
    return PolyMap(source, target.chart, tuple(comps))


def map_product(maps: list[PolyMap], source: ProductChart, target: ProductChart) -> PolyMap:
    """phi_1 x ... x phi_k between product charts."""
    return pair_map(
        [phi.compose(pr) for phi, pr in zip(maps, source.projections)], target
    )


def product_connection(conns: list[ConnectionData], prod: ProductChart) -> ConnectionData:
    """Block-diagonal Christoffels; the unique connection projecting to
    each factor."""
    dim = prod.chart.dim
    gamma = [[[ScalarFn.zero(prod.chart) for _ in range(dim)] for _ in range(dim)] for _ in range(dim)]
    offset = 0
    for conn, pr in zip(conns, prod.projections):
        k = conn.base_chart.dim
        for mu in range(k):
            for nu in range(k):
                for lam in range(k):
                    g = conn.gamma[mu][nu][lam]
                    if not g.is_zero():
                        gamma[offset + mu][offset + nu][offset + lam] = pullback(g, pr)
        offset += k
    return ConnectionData(prod.chart, dim, gamma)


def product_tensor21(tensors: list[TensorField], prod: ProductChart) -> TensorField:
    dim = prod.chart.dim
    comps = [[[ScalarFn.zero(prod.chart) for _ in range(dim)] for _ in range(dim)] for _ in range(dim)]
    offset = 0
    for t, pr in zip(tensors, prod.projections):
        k = t.chart.dim
        for mu in range(k):
            for nu in range(k):
                for lam in range(k):
                    g = t.comps[mu][nu][lam]
                    if not g.is_zero():
                        comps[offset + mu][offset + nu][offset + lam] = pullback(g, pr)
        offset += k
    return TensorField(prod.chart, 2, 1, comps)


@dataclass(frozen=True)
class FiberedChart:
    """A parametrized fiber product inside an explicit product chart.

    ``embed`` realizes the parametrizing chart inside the product;
    ``retract`` is a left inverse of ``embed``.  When the fibering maps
    sigma/tau to a base chart are known they are stored so restriction
    hypotheses can be verified.
    """

    chart: Chart
    product: ProductChart
    embed: PolyMap
    retract: PolyMap
    base: Chart | None = None
    sigma: PolyMap | None = None
    tau: PolyMap | None = None
    sigma_section: PolyMap | None = None

    def __post_init__(self):
        if self.retract.compose(self.embed) != PolyMap.identity(self.chart):
            raise MalformedFiberedChart("retract after embed is not the identity")
        if self.sigma is not None and self.tau is not None:
            left = self.sigma.compose(self.proj(0))
            right = self.tau.compose(self.proj(1))
            if left != right:
                raise MalformedFiberedChart("embedding does not land in the fiber product")

    def proj(self, k: int) -> PolyMap:
        return self.product.projections[k].compose(self.embed)


def project_connection(conn: ConnectionData, pi: PolyMap, section: PolyMap) -> ConnectionData:
    """Candidate projected connection, solved along a section of ``pi``.

    The result is only a candidate; callers verify relatedness.
    """
    if pi.source != conn.base_chart:
        raise ChartMismatch("projection map does not start on the connection chart")
    if pi.compose(section) != PolyMap.identity(pi.target):
        raise ValueError("section is not a right inverse of the projection")
    base = pi.target
    jac_pi = jacobian(pi)
    jac_sec = jacobian(section)
    src = conn.base_chart.dim

    gamma = []
    for p in range(base.dim):
        row_p = []
        for q in range(base.dim):
            row_q = []
            for a in range(base.dim):
                acc = ScalarFn.zero(base)
                for mu in range(src):
                    sp = jac_sec[mu][p]
                    if sp.is_zero():
                        continue
                    for nu in range(src):
                        sq = jac_sec[nu][q]
                        if sq.is_zero():
                            continue
                        inner = ScalarFn.zero(conn.base_chart)
                        for lam in range(src):
                            g = conn.gamma[mu][nu][lam]
                            if not g.is_zero():
                                inner = inner + g * jac_pi[a][lam]
                        inner = inner - pi.components[a].partial(nu).partial(mu)
                        if not inner.is_zero():
                            acc = acc + sp * sq * pullback(inner, section)
                row_q.append(acc)
            row_p.append(row_q)
        gamma.append(row_p)
    return ConnectionData(base, base.dim, gamma)


def check_projectable(conn: ConnectionData, pi: PolyMap, section: PolyMap):
    """Solve for the projected connection along the section, then verify."""
    candidate = project_connection(conn, pi, section)
    rel = check_related_connections(conn, candidate, pi)
    return rel.related, candidate, rel


def restrict_to_fibered(
    cm: ConnectionData,
    cn: ConnectionData,
    fib: FiberedChart,
    nabla_base: ConnectionData | None = None,
) -> ConnectionData:
    """Restrict the product connection to a fiber product chart.

    The projectability hypotheses are verified first: both factors must
    relate to a common base connection through sigma and tau.  The
    restriction is computed through the embedding and retraction and
    then certified by an exact relatedness check against the product
    connection, which makes the result independent of the retraction
    choice.
    """
    if fib.base is not None and fib.base.dim > 0:
        if nabla_base is None:
            if fib.sigma_section is None:
                raise RestrictionHypothesisError(
                    "need a base connection or a section of sigma to verify the hypotheses"
                )
            nabla_base = project_connection(cm, fib.sigma, fib.sigma_section)
        if not check_related_connections(cm, nabla_base, fib.sigma).related:
            raise RestrictionHypothesisError("left factor does not project to the base")
        if not check_related_connections(cn, nabla_base, fib.tau).related:
            raise RestrictionHypothesisError("right factor does not project to the base")

    prod_conn = product_connection([cm, cn], fib.product)
    restricted = _restrict_connection(prod_conn, fib)
    post = check_related_connections(restricted, prod_conn, fib.embed)
    if not post.related:
        raise MalformedFiberedChart(
            "restriction is not related to the product through the embedding"
        )
    return restricted


def _restrict_connection(conn: ConnectionData, fib: FiberedChart) -> ConnectionData:
    """Pull a connection on the ambient product back to the parametrizing
    chart with the embedding/retraction recipe."""
    emb, ret = fib.embed, fib.retract
    amb = conn.base_chart
    jac_emb = jacobian(emb)       # [ambient][P]
    jac_ret = jacobian(ret)       # [P][ambient]
    p_dim = fib.chart.dim
    a_dim = amb.dim

    gamma = []
    for alpha in range(p_dim):
        row_a = []
        for beta in range(p_dim):
            # W^B = d embed[B][beta] composed with retract: ambient extension
            w = [pullback(jac_emb[B][beta], ret) for B in range(a_dim)]
            covar = []  # ambient functions: derivative of W along ambient dirs plus Gamma W
            for A in range(a_dim):
                col = []
                for B in range(a_dim):
                    acc = w[B].partial(A)
                    for C in range(a_dim):
                        g = conn.gamma[A][C][B]
                        if not g.is_zero():
                            acc = acc + g * w[C]
                    col.append(acc)
                covar.append(col)
            row_b = []
            for gam in range(p_dim):
                acc = ScalarFn.zero(fib.chart)
                for B in range(a_dim):
                    retB = pullback(jac_ret[gam][B], emb)
                    if retB.is_zero():
                        continue
                    inner = ScalarFn.zero(fib.chart)
                    for A in range(a_dim):
                        if not covar[A][B].is_zero() and not jac_emb[A][alpha].is_zero():
                            inner = inner + jac_emb[A][alpha] * pullback(covar[A][B], emb)
                    acc = acc + retB * inner
                row_b.append(acc)
            row_a.append(row_b)
        gamma.append(row_a)
    return ConnectionData(fib.chart, p_dim, gamma)


def restrict_tensor21(t: TensorField, fib: FiberedChart) -> TensorField:
    """Restrict a (2,1)-tensor on the ambient product to the fiber chart."""
    emb, ret = fib.embed, fib.retract
    amb = t.chart
    jac_emb = jacobian(emb)
    jac_ret = jacobian(ret)
    p_dim = fib.chart.dim
    a_dim = amb.dim
    t_pulled = map_scalars(t.comps, lambda f: pullback(f, emb))
    comps = []
    for alpha in range(p_dim):
        row_a = []
        for beta in range(p_dim):
            row_b = []
            for gam in range(p_dim):
                acc = ScalarFn.zero(fib.chart)
                for A in range(a_dim):
                    ja = jac_emb[A][alpha]
                    if ja.is_zero():
                        continue
                    for B in range(a_dim):
                        jb = jac_emb[B][beta]
                        if jb.is_zero():
                            continue
                        for C in range(a_dim):
                            val = t_pulled[A][B][C]
                            if val.is_zero():
                                continue
                            jr = pullback(jac_ret[gam][C], emb)
                            if jr.is_zero():
                                continue
                            acc = acc + ja * jb * val * jr
                row_b.append(acc)
            row_a.append(row_b)
        comps.append(row_a)
    return TensorField(fib.chart, 2, 1, comps)


def covariant_derivative(conn: ConnectionData, x: VectorField, y: VectorField) -> VectorField:
    """Derivative of y along x for a tangent connection."""
    if x.chart != conn.base_chart or y.chart != conn.base_chart:
        raise ChartMismatch("fields must live on the connection chart")
    n = conn.base_chart.dim
    comps = []
    for lam in range(n):
        acc = ScalarFn.zero(x.chart)
        for mu in range(n):
            acc = acc + x.components[mu] * y.components[lam].partial(mu)
            for nu in range(n):
                g = conn.gamma[mu][nu][lam]
                if not g.is_zero():
                    acc = acc + x.components[mu] * g * y.components[nu]
        comps.append(acc)
    return VectorField(x.chart, tuple(comps))


# -- Lie derivative of a tangent connection -----------------------------------


def lie_derivative_connection(x: VectorField, conn: ConnectionData):
    """Component array [mu][nu][lam] of the Lie derivative of a tangent
    connection along a vector field; function-linear in the two
    remaining slots."""
    if not conn.is_tangent():
        raise ShapeMismatch("implemented for tangent connections")
    if x.chart != conn.base_chart:
        raise ChartMismatch("field and connection on different charts")
    dim = conn.base_chart.dim
    out = []
    for mu in range(dim):
        row_mu = []
        for nu in range(dim):
            row_nu = []
            for lam in range(dim):
                acc = x.components[lam].partial(nu).partial(mu)
                for sig in range(dim):
                    acc = acc + x.components[sig] * conn.gamma[mu][nu][lam].partial(sig)
                    acc = acc - conn.gamma[mu][nu][sig] * x.components[lam].partial(sig)
                    acc = acc + x.components[sig].partial(mu) * conn.gamma[sig][nu][lam]
                    acc = acc + x.components[sig].partial(nu) * conn.gamma[mu][sig][lam]
                row_nu.append(acc)
            row_mu.append(row_nu)
        out.append(row_mu)
    return freeze(out)


# -- difference tensors --------------------------------------------------------


def connection_difference(c1: ConnectionData, c2: ConnectionData) -> TensorField:
    if c1.base_chart != c2.base_chart or c1.rank != c2.rank:
        raise ShapeMismatch("connection difference needs matching data")
    dim = c1.base_chart.dim
    comps = [
        [
            [c1.gamma[mu][nu][lam] - c2.gamma[mu][nu][lam] for lam in range(c1.rank)]
            for nu in range(c1.rank)
        ]
        for mu in range(dim)
    ]
    return TensorField(c1.base_chart, 2, 1, comps)


def connection_minus_tensor(conn: ConnectionData, t: TensorField) -> ConnectionData:
    if t.chart != conn.base_chart or t.p != 2 or t.q != 1:
        raise ShapeMismatch("need a (2,1)-tensor on the connection chart")
    dim = conn.base_chart.dim
    gamma = [
        [
            [conn.gamma[mu][nu][lam] - t.comps[mu][nu][lam] for lam in range(dim)]
            for nu in range(dim)
        ]
        for mu in range(dim)
    ]
    return ConnectionData(conn.base_chart, conn.rank, gamma)
