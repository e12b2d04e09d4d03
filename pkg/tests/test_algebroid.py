import random

import pytest

from imconnect.rationals import Q
from imconnect.jets import JetScope, monomials
from imconnect.symkernel import Chart, ScalarFn, all_zero, parse_poly, zeros
from imconnect.geometry import VectorField, vf_bracket, tangent_chart
from imconnect.algebroid import (
    AlgebroidData,
    NotLinearField,
    SectionExpr,
    bracket_sections,
    check_algebroid,
    check_im_vector_field,
    frame_section,
    prolongation_flip,
    scaling_field_of_prolongation,
    tangent_algebroid,
    tangent_prolongation,
    transport_field,
)

from helpers import rand_scalar

PLANE = Chart("P", ("x", "y"))


def section(algebroid, *texts):
    chart = algebroid.base
    return SectionExpr(tuple(parse_poly(t, chart) for t in texts))


class TestBracket:
    def test_zero_anchor_zero_structure(self):
        a = AlgebroidData(PLANE, 2, zeros(PLANE, 2, 2), zeros(PLANE, 2, 2, 2))
        s = section(a, "x^2", "y")
        t = section(a, "1", "x*y")
        assert all_zero(bracket_sections(a, s, t).coefficients)

    def test_tangent_algebroid_matches_field_bracket(self):
        a = tangent_algebroid(PLANE)
        rng = random.Random(61)
        for _ in range(6):
            s = SectionExpr(tuple(rand_scalar(rng, PLANE, 2, sparsity=0.2) for _ in range(2)))
            t = SectionExpr(tuple(rand_scalar(rng, PLANE, 2, sparsity=0.2) for _ in range(2)))
            via_algebroid = bracket_sections(a, s, t).coefficients
            via_fields = vf_bracket(
                VectorField(PLANE, s.coefficients), VectorField(PLANE, t.coefficients)
            ).components
            assert via_algebroid == via_fields

    def test_leibniz_rule_on_jets(self):
        # [a, f b] = f [a, b] + (anchor(a) f) b with generic jet data
        a = tangent_algebroid(PLANE)
        scope = JetScope.build(PLANE, [("a", 2), ("b", 2), ("f", 1)], degree=2)
        anchor = scope.lift_all(a.anchor)
        structure = scope.lift_all(a.structure)
        from imconnect.algebroid import _bracket_raw

        sa = scope.generic("a")
        sb = scope.generic("b")
        f = scope.generic("f")[0]
        fb = tuple(f * c for c in sb)
        lhs = _bracket_raw(anchor, structure, 2, 2, sa, fb, scope.chart)
        plain = _bracket_raw(anchor, structure, 2, 2, sa, sb, scope.chart)
        rho_a_f = ScalarFn.zero(scope.chart)
        for mu in range(2):
            for i in range(2):
                rho_a_f = rho_a_f + anchor[i][mu] * sa[i] * f.partial(mu)
        for k in range(2):
            assert lhs[k] == f * plain[k] + rho_a_f * sb[k]


class TestCheckAlgebroid:
    def test_tangent_algebroid_passes(self):
        assert check_algebroid(tangent_algebroid(PLANE)).passed

    def test_anchor_morphism_failure_detected(self):
        # identity anchor with a constant nonzero bracket on frame fields
        # cannot be a morphism onto commuting coordinate fields
        n = 2
        structure = [[[ScalarFn.zero(PLANE) for _ in range(n)] for _ in range(n)] for _ in range(n)]
        structure[0][1][0] = ScalarFn.const(PLANE, 1)
        structure[1][0][0] = ScalarFn.const(PLANE, -1)
        anchor = [
            [ScalarFn.const(PLANE, 1 if i == mu else 0) for mu in range(n)]
            for i in range(n)
        ]
        bad = AlgebroidData(PLANE, n, anchor, structure)
        report = check_algebroid(bad)
        assert not report.passed
        assert not report.entry("anchor_bracket_morphism").zero

    def test_jacobi_failure_detected(self):
        # rank-3 bundle over the plane, zero anchor: any structure with
        # non-closed coefficients breaks the Jacobi identity
        n, r = 2, 3
        structure = [[[ScalarFn.zero(PLANE) for _ in range(r)] for _ in range(r)] for _ in range(r)]
        x = ScalarFn.named_var(PLANE, "x")
        structure[0][1][2] = x
        structure[1][0][2] = -x
        structure[1][2][0] = ScalarFn.const(PLANE, 1)
        structure[2][1][0] = ScalarFn.const(PLANE, -1)
        anchor = [[ScalarFn.zero(PLANE) for _ in range(n)] for _ in range(r)]
        anchor[0][0] = ScalarFn.const(PLANE, 1)
        bad = AlgebroidData(PLANE, r, anchor, structure)
        report = check_algebroid(bad)
        assert not report.passed


class TestTangentProlongation:
    def test_zero_algebroid_prolongs_to_zero(self):
        a = AlgebroidData(PLANE, 2, zeros(PLANE, 2, 2), zeros(PLANE, 2, 2, 2))
        ta = tangent_prolongation(a)
        assert ta.rank == 4
        assert all_zero(ta.anchor)
        assert all_zero(ta.structure)

    def test_prolongation_of_tangent_algebroid_passes(self):
        ta = tangent_prolongation(tangent_algebroid(PLANE))
        assert check_algebroid(ta).passed

    def test_prolongation_with_structure_passes(self):
        # nonabelian structure functions with a nontrivial anchor
        n, r = 2, 2
        structure = [[[ScalarFn.zero(PLANE) for _ in range(r)] for _ in range(r)] for _ in range(r)]
        structure[0][1][0] = ScalarFn.const(PLANE, 1)
        structure[1][0][0] = ScalarFn.const(PLANE, -1)
        anchor = [[ScalarFn.zero(PLANE) for _ in range(n)] for _ in range(r)]
        anchor[0][0] = ScalarFn.const(PLANE, 1)
        anchor[1][0] = ScalarFn.named_var(PLANE, "x")
        base = AlgebroidData(PLANE, r, anchor, structure)
        # this data is a Lie algebroid (checked), and so is its prolongation
        assert check_algebroid(base).passed
        assert check_algebroid(tangent_prolongation(base)).passed

    def test_structure_contains_fiber_derivative_block(self):
        n, r = 2, 2
        structure = [[[ScalarFn.zero(PLANE) for _ in range(r)] for _ in range(r)] for _ in range(r)]
        x = ScalarFn.named_var(PLANE, "x")
        structure[0][1][0] = x
        structure[1][0][0] = -x
        a = AlgebroidData(PLANE, r, zeros(PLANE, r, n), structure)
        ta = tangent_prolongation(a)
        tch = ta.base
        # velocity derivative of the coefficient x is the first velocity
        assert ta.structure[0][1][r + 0] == ScalarFn.var(tch, 2)
        # mixed tangent/core bracket keeps the plain coefficient
        assert ta.structure[0][r + 1][r + 0] == x.on_chart(tch)
        assert ta.structure[r + 1][0][r + 0] == -x.on_chart(tch)


class TestIMVectorField:
    def make_nonabelian(self):
        n, r = 2, 2
        structure = [[[ScalarFn.zero(PLANE) for _ in range(r)] for _ in range(r)] for _ in range(r)]
        structure[0][1][0] = ScalarFn.const(PLANE, 1)
        structure[1][0][0] = ScalarFn.const(PLANE, -1)
        anchor = [[ScalarFn.zero(PLANE) for _ in range(n)] for _ in range(r)]
        anchor[0][0] = ScalarFn.const(PLANE, 1)
        anchor[1][0] = ScalarFn.named_var(PLANE, "x")
        return AlgebroidData(PLANE, r, anchor, structure)

    def test_zero_field_is_im(self):
        a = self.make_nonabelian()
        tot = a.total_chart()
        z = VectorField(tot, tuple(ScalarFn.zero(tot) for _ in range(tot.dim)))
        ok, _ = check_im_vector_field(a, z)
        assert ok

    def test_scaling_field_of_prolongation_is_im(self):
        for base in (tangent_algebroid(PLANE), self.make_nonabelian()):
            assert check_algebroid(base).passed
            ta = tangent_prolongation(base)
            ok, report = check_im_vector_field(ta, scaling_field_of_prolongation(base))
            assert ok, report.describe()

    def test_nonlinear_field_rejected(self):
        a = self.make_nonabelian()
        tot = a.total_chart()
        comps = [ScalarFn.zero(tot) for _ in range(tot.dim)]
        comps[2] = ScalarFn.named_var(tot, "u1") ** 2
        with pytest.raises(NotLinearField):
            check_im_vector_field(a, VectorField(tot, tuple(comps)))

    def test_broken_derivation_detected(self):
        a = self.make_nonabelian()
        tot = a.total_chart()
        comps = [ScalarFn.zero(tot) for _ in range(tot.dim)]
        # rotate the frame directions: u1 d/du2 is linear but does not
        # derive this bracket
        comps[3] = ScalarFn.named_var(tot, "u1")
        ok, report = check_im_vector_field(a, VectorField(tot, tuple(comps)))
        assert not ok

    def test_prolongation_flip_transport(self):
        a = self.make_nonabelian()
        flip = prolongation_flip(a)
        # the flip is a permutation; transporting a coordinate field
        # lands on the matching coordinate of the reordered chart
        src = flip.source
        tgt = flip.target
        inv_comps = tuple(ScalarFn.named_var(tgt, v) for v in src.vars)
        from imconnect.symkernel import PolyMap

        flip_inv = PolyMap(tgt, src, inv_comps)
        z = VectorField(src, tuple(ScalarFn.named_var(src, "u1") if i == 0 else ScalarFn.zero(src) for i in range(src.dim)))
        moved = transport_field(z, flip, flip_inv)
        assert moved.components[tgt.vars.index("x")] == ScalarFn.named_var(tgt, "u1")


def test_monomials_ordering():
    ms = monomials(2, 2)
    assert ms[0] == (0, 0)
    assert set(ms) == {(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)}
    assert len(monomials(3, 3)) == 20
