"""Exact rational coefficients.

gmpy2.mpq is used when available (it is markedly faster than
fractions.Fraction on the dense eliminations this package runs);
otherwise the stdlib Fraction is a drop-in replacement.  Both types
print as ``p/q`` / ``p`` and accept those strings back, which is what
the text format relies on.
"""

from __future__ import annotations

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    from fractions import Fraction as Q  # type: ignore[assignment]

ZERO = Q(0)
ONE = Q(1)


def rat(value: int | str) -> "Q":
    """Build an exact rational from an int or a ``p`` / ``p/q`` string."""
    if isinstance(value, str):
        value = value.strip()
    return Q(value)


def rat_str(value) -> str:
    """Canonical text form: ``p`` for integers, ``p/q`` otherwise."""
    return str(value)
