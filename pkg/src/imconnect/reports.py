"""Structured results for exact identity checks.

A defect is a nested array of ScalarFn; it either vanishes identically
or carries a witness (index path plus leading term) naming where the
identity fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .symkernel import ScalarFn, first_nonzero, format_poly


def leading_term(f: ScalarFn) -> str:
    """Graded-lex leading term of a nonzero polynomial."""
    expo, coeff = max(
        f.iter_terms(), key=lambda item: (sum(item[0]), item[0])
    )
    return format_poly(ScalarFn(f.chart, {expo: coeff}))


@dataclass(frozen=True)
class DefectEntry:
    name: str
    zero: bool
    witness_path: tuple | None = None
    witness_leading: str | None = None

    def describe(self) -> str:
        if self.zero:
            return f"{self.name}: zero"
        return f"{self.name}: NONZERO at slots {self.witness_path}: {self.witness_leading}"


@dataclass
class DefectReport:
    entries: list[DefectEntry] = field(default_factory=list)

    def add(self, name: str, defect) -> DefectEntry:
        found = first_nonzero(defect)
        if found is None:
            entry = DefectEntry(name, True)
        else:
            path, leaf = found
            entry = DefectEntry(name, False, path, leading_term(leaf))
        self.entries.append(entry)
        return entry

    def add_bool(self, name: str, ok: bool, detail: str | None = None) -> DefectEntry:
        entry = DefectEntry(name, ok, None, detail if not ok else None)
        self.entries.append(entry)
        return entry

    @property
    def passed(self) -> bool:
        return all(e.zero for e in self.entries)

    def entry(self, name: str) -> DefectEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def describe(self) -> str:
        return "\n".join(e.describe() for e in self.entries)
