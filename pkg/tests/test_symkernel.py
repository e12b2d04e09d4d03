import random

import pytest
from hypothesis import given, settings, strategies as st

from imconnect.rationals import Q
from imconnect.symkernel import (
    Chart,
    ChartMismatch,
    PolyMap,
    ScalarFn,
    format_poly,
    jacobian,
    parse_poly,
    partial_derivative,
    pullback,
)

M2 = Chart("M2", ("x", "y"))
M3 = Chart("M3", ("x", "y", "z"))


def poly(text, chart=M2):
    return parse_poly(text, chart)


def rand_poly(rng, chart, max_degree=2, coeff_range=4):
    terms = {}
    for _ in range(rng.randint(1, 5)):
        expo = [0] * chart.dim
        for _ in range(rng.randint(0, max_degree)):
            expo[rng.randrange(chart.dim)] += 1
        terms[tuple(expo)] = Q(rng.randint(-coeff_range, coeff_range))
    return ScalarFn(chart, terms)


class TestPartialDerivative:
    def test_monomial(self):
        assert partial_derivative(poly("x^2*y"), 0) == poly("2*x*y")

    def test_constant(self):
        assert partial_derivative(poly("7"), 1) == poly("0")

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            partial_derivative(poly("x"), 2)

    def test_cubic_against_interpolation_oracle(self):
        # Reconstruct the derivative of x^3 - x from its values at 4
        # rational nodes via Lagrange differentiation; a cubic is pinned
        # down exactly by 4 samples, so the comparison is exact.
        line = Chart("line", ("x",))
        f = parse_poly("x^3 - x", line)
        nodes = [Q(0), Q(1), Q(-1), Q(1, 2)]
        samples = [f.eval_rational([n]) for n in nodes]

        def lagrange_derivative(t):
            total = Q(0)
            for i, ni in enumerate(nodes):
                # L_i'(t) = sum over j != i of prod over k != i,j of
                # (t - n_k) / prod (n_i - n_k)
                denom = Q(1)
                for k, nk in enumerate(nodes):
                    if k != i:
                        denom *= ni - nk
                deriv = Q(0)
                for j, nj in enumerate(nodes):
                    if j == i:
                        continue
                    prod = Q(1)
                    for k, nk in enumerate(nodes):
                        if k not in (i, j):
                            prod *= t - nk
                    deriv += prod
                total += samples[i] * deriv / denom
            return total

        df = partial_derivative(f, 0)
        assert df == parse_poly("3*x^2 - 1", line)
        for t in [Q(0), Q(2), Q(-3, 7), Q(5, 3)]:
            assert df.eval_rational([t]) == lagrange_derivative(t)

    def test_partials_commute(self):
        rng = random.Random(7)
        for _ in range(10):
            f = rand_poly(rng, M3, max_degree=3)
            for i in range(3):
                for j in range(3):
                    assert f.partial(i).partial(j) == f.partial(j).partial(i)


class TestPullback:
    def test_pair_division_substitution(self):
        # division map of the pair groupoid of the line sends
        # ((x, y), (x', y)) to (x, x'); a + b pulls back to x + x'
        g2 = Chart("g2", ("x", "xp", "y"))
        g = Chart("g", ("a", "b"))
        mbar = PolyMap(
            g2,
            g,
            (ScalarFn.named_var(g2, "x"), ScalarFn.named_var(g2, "xp")),
        )
        f = parse_poly("a + b", g)
        assert pullback(f, mbar) == parse_poly("x + xp", g2)

    def test_identity_map(self):
        f = poly("x^2 - 3*y")
        assert pullback(f, PolyMap.identity(M2)) == f

    def test_ring_homomorphism(self):
        rng = random.Random(11)
        phi = PolyMap(M2, M3, tuple(rand_poly(rng, M2) for _ in range(3)))
        for _ in range(5):
            f, g = rand_poly(rng, M3), rand_poly(rng, M3)
            assert pullback(f * g, phi) == pullback(f, phi) * pullback(g, phi)
            assert pullback(f + g, phi) == pullback(f, phi) + pullback(g, phi)

    def test_chain_rule(self):
        # pullback of the differential versus differential of the
        # pullback, both sides computed independently
        rng = random.Random(13)
        phi = PolyMap(M2, M3, tuple(rand_poly(rng, M2) for _ in range(3)))
        jac = jacobian(phi)
        for _ in range(5):
            f = rand_poly(rng, M3, max_degree=2)
            for mu in range(M2.dim):
                via_chain = ScalarFn.zero(M2)
                for a in range(M3.dim):
                    via_chain = via_chain + pullback(f.partial(a), phi) * jac[a][mu]
                assert pullback(f, phi).partial(mu) == via_chain

    def test_chart_mismatch(self):
        phi = PolyMap.identity(M2)
        with pytest.raises(ChartMismatch):
            pullback(parse_poly("x", M3), phi)


class TestJacobian:
    def test_identity(self):
        jac = jacobian(PolyMap.identity(M2))
        for a in range(2):
            for mu in range(2):
                assert jac[a][mu] == ScalarFn.const(M2, 1 if a == mu else 0)

    def test_linear_projection(self):
        g2 = Chart("g2", ("x", "xp", "y"))
        g = Chart("g", ("a", "b"))
        mbar = PolyMap(
            g2, g, (ScalarFn.named_var(g2, "x"), ScalarFn.named_var(g2, "xp"))
        )
        jac = jacobian(mbar)
        expected = [[1, 0, 0], [0, 1, 0]]
        for a in range(2):
            for mu in range(3):
                assert jac[a][mu] == ScalarFn.const(g2, expected[a][mu])


coeffs = st.integers(min_value=-6, max_value=6)
expos = st.tuples(
    st.integers(min_value=0, max_value=3), st.integers(min_value=0, max_value=3)
)
poly_strategy = st.dictionaries(expos, coeffs, max_size=6).map(
    lambda terms: ScalarFn(M2, {e: Q(c) for e, c in terms.items()})
)


class TestRingAxioms:
    @settings(max_examples=60, deadline=None)
    @given(poly_strategy, poly_strategy, poly_strategy)
    def test_associativity_and_distributivity(self, f, g, h):
        assert (f * g) * h == f * (g * h)
        assert f * (g + h) == f * g + f * h
        assert (f + g) + h == f + (g + h)

    @settings(max_examples=40, deadline=None)
    @given(poly_strategy, poly_strategy)
    def test_commutativity(self, f, g):
        assert f * g == g * f
        assert f + g == g + f

    @settings(max_examples=40, deadline=None)
    @given(poly_strategy)
    def test_units_and_negation(self, f):
        assert f + (-f) == ScalarFn.zero(M2)
        assert f * ScalarFn.const(M2, 1) == f


class TestTextFormat:
    def test_round_trip(self):
        rng = random.Random(17)
        for _ in range(25):
            f = rand_poly(rng, M3, max_degree=4, coeff_range=9)
            assert parse_poly(format_poly(f), M3) == f

    def test_rational_literals(self):
        f = poly("1/3*x - 2/7")
        assert format_poly(f) == "1/3*x - 2/7"

    def test_zero(self):
        assert format_poly(ScalarFn.zero(M2)) == "0"
        assert parse_poly("0", M2).is_zero()

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_poly("x +", M2)
        with pytest.raises(KeyError):
            parse_poly("w", M2)
