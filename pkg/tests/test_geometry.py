import random

import pytest

from imconnect.rationals import Q
from imconnect.symkernel import Chart, PolyMap, ScalarFn, all_zero, parse_poly, zeros
from imconnect.geometry import (
    ConnectionData,
    FiberedChart,
    MalformedFiberedChart,
    RestrictionHypothesisError,
    TensorField,
    VectorField,
    chart_product,
    check_projectable,
    check_related_connections,
    check_related_tensors,
    check_related_vector_fields,
    connection_difference,
    covariant_derivative,
    curvature_of,
    geodesic_spray,
    lie_derivative_connection,
    product_connection,
    restrict_to_fibered,
    symmetric_part,
    tangent_chart,
    tangent_lift,
    torsion_of,
    vertical_lift,
    vf_bracket,
)

from helpers import (
    const_field,
    coordinate_field,
    rand_connection,
    rand_scalar,
    rand_vector_field,
)

LINE = Chart("L", ("x",))
PLANE = Chart("P", ("x", "y"))
SPACE = Chart("S", ("x", "y", "z"))


class TestTorsion:
    def test_flat_is_torsion_free(self):
        t = torsion_of(ConnectionData.flat(PLANE, 2))
        assert all_zero(t.comps)

    def test_single_christoffel_entry(self):
        gamma = zeros(SPACE, 3, 3, 3)
        gamma = [[list(col) for col in row] for row in [[list(c) for c in r] for r in gamma]]
        gamma[0][1][2] = ScalarFn.const(SPACE, 1)  # direction x, frame y, output z
        conn = ConnectionData(SPACE, 3, gamma)
        t = torsion_of(conn)
        assert t.comps[0][1][2] == ScalarFn.const(SPACE, 1)
        assert t.comps[1][0][2] == ScalarFn.const(SPACE, -1)
        assert t.skew

    def test_symmetric_part_kills_torsion(self):
        rng = random.Random(23)
        for _ in range(5):
            conn = rand_connection(rng, PLANE, max_degree=2, density=0.6)
            assert all_zero(torsion_of(symmetric_part(conn)).comps)


class TestCurvature:
    def test_flat(self):
        assert all_zero(curvature_of(ConnectionData.flat(SPACE, 3)))

    def test_antisymmetric_in_directions(self):
        rng = random.Random(29)
        conn = rand_connection(rng, PLANE, max_degree=2, density=0.7)
        r = curvature_of(conn)
        for mu in range(2):
            for nu in range(2):
                for b in range(2):
                    for c in range(2):
                        assert (r[mu][nu][b][c] + r[nu][mu][b][c]).is_zero()

    def test_product_curvature_is_block_sum(self):
        rng = random.Random(31)
        cm = rand_connection(rng, LINE, max_degree=2, density=1.0)
        cn = rand_connection(rng, PLANE, max_degree=1, density=0.8)
        prod = chart_product("LxP", [LINE, PLANE])
        cp = product_connection([cm, cn], prod)
        r = curvature_of(cp)
        rm = curvature_of(cm)
        rn = curvature_of(cn)
        from imconnect.symkernel import pullback

        for mu in range(3):
            for nu in range(3):
                for b in range(3):
                    for c in range(3):
                        val = r[mu][nu][b][c]
                        if max(mu, nu, b, c) < 1:
                            assert val == pullback(rm[mu][nu][b][c], prod.projections[0])
                        elif min(mu, nu, b, c) >= 1:
                            assert val == pullback(
                                rn[mu - 1][nu - 1][b - 1][c - 1], prod.projections[1]
                            )
                        else:
                            assert val.is_zero()


class TestGeodesicSpray:
    def test_flat_spray_is_pure_velocity(self):
        z = geodesic_spray(ConnectionData.flat(PLANE, 2))
        tch = tangent_chart(PLANE)
        assert z.components[0] == ScalarFn.var(tch, 2)
        assert z.components[1] == ScalarFn.var(tch, 3)
        assert z.components[2].is_zero()
        assert z.components[3].is_zero()

    def test_double_vertical_bracket_identity(self):
        # bracketing the spray with two vertical lifts returns minus the
        # symmetrized covariant derivative, vertically lifted
        rng = random.Random(37)
        conn = rand_connection(rng, PLANE, max_degree=1, density=0.8)
        z = geodesic_spray(conn)
        tch = z.chart
        fields = [coordinate_field(PLANE, i) for i in range(2)]
        fields.append(rand_vector_field(rng, PLANE, max_degree=2))
        fields.append(rand_vector_field(rng, PLANE, max_degree=1))
        for x in fields:
            for y in fields:
                lhs = vf_bracket(vf_bracket(z, vertical_lift(x, tch)), vertical_lift(y, tch))
                nab = covariant_derivative(conn, x, y)
                nab2 = covariant_derivative(conn, y, x)
                total = VectorField(
                    PLANE,
                    tuple(a + b for a, b in zip(nab.components, nab2.components)),
                )
                rhs = vertical_lift(total, tch)
                assert all(
                    (l + r).is_zero() for l, r in zip(lhs.components, rhs.components)
                )

    def test_fiber_scaling_degree(self):
        # velocity components scale linearly, fiber components quadratically
        rng = random.Random(41)
        conn = rand_connection(rng, PLANE, max_degree=2, density=0.7)
        z = geodesic_spray(conn)
        tch = z.chart
        scale = PolyMap(
            tch,
            tch,
            (
                ScalarFn.var(tch, 0),
                ScalarFn.var(tch, 1),
                ScalarFn.var(tch, 2) * 3,
                ScalarFn.var(tch, 3) * 3,
            ),
        )
        from imconnect.symkernel import pullback

        for i in range(2):
            assert pullback(z.components[i], scale) == z.components[i] * 3
        for i in range(2, 4):
            assert pullback(z.components[i], scale) == z.components[i] * 9


class TestRelatedness:
    def test_zero_tensors_related(self):
        phi = PolyMap(PLANE, LINE, (parse_poly("x^2 + y", PLANE),))
        tm = TensorField(PLANE, 2, 1, zeros(PLANE, 2, 2, 2))
        tn = TensorField(LINE, 2, 1, zeros(LINE, 1, 1, 1))
        assert check_related_tensors(tm, tn, phi).related

    def test_identity_one_one_tensors_related(self):
        phi = PolyMap(PLANE, PLANE, (parse_poly("x*y", PLANE), parse_poly("x + y^2", PLANE)))
        def eye(chart):
            comps = [
                [ScalarFn.const(chart, 1 if i == j else 0) for j in range(chart.dim)]
                for i in range(chart.dim)
            ]
            return TensorField(chart, 1, 1, comps)
        assert check_related_tensors(eye(PLANE), eye(PLANE), phi).related

    def test_flat_to_flat_along_linear_map(self):
        phi = PolyMap(PLANE, PLANE, (parse_poly("x + 2*y", PLANE), parse_poly("y", PLANE)))
        rel = check_related_connections(
            ConnectionData.flat(PLANE, 2), ConnectionData.flat(PLANE, 2), phi
        )
        assert rel.related and rel.routes_agree

    def test_product_related_to_factors(self):
        rng = random.Random(43)
        cm = rand_connection(rng, PLANE, max_degree=1, density=0.6)
        cn = rand_connection(rng, LINE, max_degree=2, density=1.0)
        prod = chart_product("PxL", [PLANE, LINE])
        cp = product_connection([cm, cn], prod)
        for conn, pr in ((cm, prod.projections[0]), (cn, prod.projections[1])):
            rel = check_related_connections(cp, conn, pr)
            assert rel.related and rel.routes_agree

    def test_fiber_dependent_connection_not_projectable(self):
        # over the line, direction/output in the base slot depending on
        # the fiber coordinate obstructs projecting along (x, y) -> x
        pi = PolyMap(PLANE, LINE, (ScalarFn.named_var(PLANE, "x"),))
        section = PolyMap(LINE, PLANE, (ScalarFn.var(LINE, 0), ScalarFn.zero(LINE)))
        gamma = [[[ScalarFn.zero(PLANE) for _ in range(2)] for _ in range(2)] for _ in range(2)]
        gamma[0][0][0] = ScalarFn.named_var(PLANE, "y")
        conn = ConnectionData(PLANE, 2, gamma)
        ok, candidate, rel = check_projectable(conn, pi, section)
        assert not ok
        assert not rel.related and rel.routes_agree
        assert rel.witness() is not None

    def test_route_agreement_on_random_unrelated_pairs(self):
        rng = random.Random(47)
        phi = PolyMap(PLANE, PLANE, (parse_poly("x + y^2", PLANE), parse_poly("y", PLANE)))
        for _ in range(4):
            cm = rand_connection(rng, PLANE, max_degree=1, density=0.5)
            cn = rand_connection(rng, PLANE, max_degree=1, density=0.5)
            rel = check_related_connections(cm, cn, phi)
            assert rel.routes_agree


def submersion_fibered_chart():
    """Fiber product of (x, y) -> x with itself: chart (x, y, yp)."""
    fibchart = Chart("MxBM", ("x", "y", "yp"))
    prod = chart_product("MxM", [PLANE, PLANE])
    x, y, yp = (ScalarFn.named_var(fibchart, v) for v in ("x", "y", "yp"))
    embed = PolyMap(fibchart, prod.chart, (x, y, x, yp))
    pc = prod.chart
    retract = PolyMap(
        pc,
        fibchart,
        (
            ScalarFn.named_var(pc, "x_1"),
            ScalarFn.named_var(pc, "y_1"),
            ScalarFn.named_var(pc, "y_2"),
        ),
    )
    pi = PolyMap(PLANE, LINE, (ScalarFn.named_var(PLANE, "x"),))
    section = PolyMap(LINE, PLANE, (ScalarFn.var(LINE, 0), ScalarFn.zero(LINE)))
    return FiberedChart(
        chart=fibchart,
        product=prod,
        embed=embed,
        retract=retract,
        base=LINE,
        sigma=pi,
        tau=pi,
        sigma_section=section,
    )


class TestFiberProducts:
    def test_flat_restriction_is_flat(self):
        fib = submersion_fibered_chart()
        flat = ConnectionData.flat(PLANE, 2)
        restricted = restrict_to_fibered(flat, flat, fib)
        assert all_zero(restricted.gamma)

    def test_projectable_connection_restricts(self):
        # base-only Christoffels project along (x, y) -> x, so the
        # product connection restricts to the fiber product chart
        gamma = [[[ScalarFn.zero(PLANE) for _ in range(2)] for _ in range(2)] for _ in range(2)]
        gamma[0][0][0] = ScalarFn.named_var(PLANE, "x")
        gamma[0][0][1] = ScalarFn.named_var(PLANE, "y")  # vertical output is unconstrained
        gamma[1][0][1] = ScalarFn.named_var(PLANE, "x") * 2
        conn = ConnectionData(PLANE, 2, gamma)
        fib = submersion_fibered_chart()
        restricted = restrict_to_fibered(conn, conn, fib)
        prod_conn = product_connection([conn, conn], fib.product)
        rel = check_related_connections(restricted, prod_conn, fib.embed)
        assert rel.related

    def test_non_projectable_connection_rejected(self):
        gamma = [[[ScalarFn.zero(PLANE) for _ in range(2)] for _ in range(2)] for _ in range(2)]
        gamma[0][0][0] = ScalarFn.named_var(PLANE, "y")
        conn = ConnectionData(PLANE, 2, gamma)
        fib = submersion_fibered_chart()
        with pytest.raises(RestrictionHypothesisError):
            restrict_to_fibered(conn, conn, fib)


class TestLieDerivative:
    def test_zero_field(self):
        rng = random.Random(53)
        conn = rand_connection(rng, PLANE, max_degree=2, density=0.7)
        x = const_field(PLANE, (0, 0))
        assert all_zero(lie_derivative_connection(x, conn))

    def test_linear_field_flat_connection(self):
        x = VectorField(
            PLANE,
            (parse_poly("2*x - y", PLANE), parse_poly("x", PLANE)),
        )
        assert all_zero(lie_derivative_connection(x, ConnectionData.flat(PLANE, 2)))

    def test_matches_bracket_definition(self):
        # the component array agrees with the bracket formula evaluated
        # on arbitrary polynomial fields, which also certifies
        # function-linearity in the two remaining slots
        rng = random.Random(59)
        conn = rand_connection(rng, PLANE, max_degree=1, density=0.7)
        x = rand_vector_field(rng, PLANE, max_degree=2)
        comps = lie_derivative_connection(x, conn)
        for _ in range(3):
            y = rand_vector_field(rng, PLANE, max_degree=2)
            z = rand_vector_field(rng, PLANE, max_degree=2)
            direct = vf_bracket(x, covariant_derivative(conn, y, z))
            t2 = covariant_derivative(conn, vf_bracket(x, y), z)
            t3 = covariant_derivative(conn, y, vf_bracket(x, z))
            contracted = []
            for lam in range(2):
                acc = ScalarFn.zero(PLANE)
                for mu in range(2):
                    for nu in range(2):
                        acc = acc + comps[mu][nu][lam] * y.components[mu] * z.components[nu]
                contracted.append(acc)
            for lam in range(2):
                lhs = direct.components[lam] - t2.components[lam] - t3.components[lam]
                assert lhs == contracted[lam]
