"""Generic jet arguments for identity checking.

Every identity this package verifies is a differential operator of
order at most 2 in each section/vector-field slot, so its value at a
point depends only on 2-jets of the arguments.  Instead of sweeping a
family of monomial-coefficient arguments one by one, each slot gets a
single *generic* argument whose coefficients are fresh formal
variables multiplying all base monomials of degree <= jet degree.  The
resulting defect is a polynomial in base variables and slot
coefficients; it vanishes identically iff the identity holds for every
member of the monomial family, hence (by jet determination) for all
polynomial arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

from .symkernel import Chart, ScalarFn, map_scalars


def monomials(dim: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples with total degree <= degree, graded order."""
    out: list[tuple[int, ...]] = []

    def rec(prefix, remaining, slots):
        if slots == 0:
            out.append(tuple(prefix))
            return
        for k in range(remaining + 1):
            rec(prefix + [k], remaining - k, slots - 1)

    for d in range(degree + 1):
        start = len(out)
        rec([], d, dim)
        out[start:] = [e for e in out[start:] if sum(e) == d]
    return out


@dataclass(frozen=True)
class JetScope:
    """A chart extended with coefficient variables for generic slots."""

    base: Chart
    chart: Chart
    degree: int
    slots: dict

    @staticmethod
    def build(base: Chart, slots: list[tuple[str, int]], degree: int = 2) -> "JetScope":
        """slots: (name, rank) pairs; a vector-field slot has rank = base.dim."""
        monos = monomials(base.dim, degree)
        names = list(base.vars)
        layout: dict = {}
        for slot_name, rank in slots:
            per_component = []
            for i in range(rank):
                row = []
                for m, _ in enumerate(monos):
                    var = f"{slot_name}_{i}_{m}"
                    row.append(len(names))
                    names.append(var)
                per_component.append(tuple(row))
            layout[slot_name] = (rank, tuple(per_component))
        chart = Chart(base.name + "_jets", tuple(names))
        return JetScope(base, chart, degree, layout)

    def lift(self, f: ScalarFn) -> ScalarFn:
        """Reinterpret a base-chart polynomial on the extended chart."""
        if f.chart != self.base:
            raise ValueError("lift expects a function on the scope base chart")
        return f.on_chart(self.chart)

    def lift_all(self, nested):
        return map_scalars(nested, self.lift)

    def generic(self, slot_name: str) -> tuple[ScalarFn, ...]:
        """Component functions of the generic slot argument."""
        from .symkernel import EXPO_BITS, pack_expo

        rank, rows = self.slots[slot_name]
        monos = monomials(self.base.dim, self.degree)
        comps = []
        for i in range(rank):
            terms = {}
            for var_pos, mono in zip(rows[i], monos):
                key = pack_expo(mono) | (1 << (EXPO_BITS * var_pos))
                terms[key] = 1
            comps.append(ScalarFn(self.chart, terms))
        return tuple(comps)

    @property
    def n_base(self) -> int:
        return self.base.dim
