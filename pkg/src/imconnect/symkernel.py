"""Exact scalar kernel: multivariate polynomials over Q on named charts.

Values are immutable after construction.  Equality of ScalarFn is
structural equality of the canonical form (sparse exponent -> coefficient
map with no zero entries), so "identity holds" always means an exact
zero test, never a tolerance.

Conventions used throughout the package:

* a Chart is an ordered list of variable names; exponent tuples are
  indexed positionally,
* a PolyMap ``phi`` from chart S to chart T stores one ScalarFn on S per
  T-variable,
* ``jacobian(phi)[a][mu]`` is the partial of the a-th component with
  respect to the mu-th source variable (target.dim x source.dim).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from .rationals import Q, ZERO, ONE, rat, rat_str


class ChartMismatch(ValueError):
    """Operands live on different charts."""


@dataclass(frozen=True)
class Chart:
    """A named coordinate domain with an ordered tuple of variable names."""

    name: str
    vars: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.vars)) != len(self.vars):
            raise ValueError(f"chart {self.name!r}: duplicate variable names")
        for v in self.vars:
            if not v or not (v[0].isalpha() or v[0] == "_") or not all(
                c.isalnum() or c == "_" for c in v
            ):
                raise ValueError(f"chart {self.name!r}: bad variable name {v!r}")

    @property
    def dim(self) -> int:
        return len(self.vars)

    def var_index(self, name: str) -> int:
        try:
            return self.vars.index(name)
        except ValueError:
            raise KeyError(f"chart {self.name!r} has no variable {name!r}") from None

    def __repr__(self):
        return f"Chart({self.name!r}, dim={self.dim})"


# Exponent multi-indices are packed into a single integer, one byte per
# variable (lowest byte = first variable).  Monomial multiplication is
# then integer addition, which keeps high-dimensional jet charts cheap.
# Individual exponents must stay below 256; the degrees arising in this
# package are bounded far lower.
EXPO_BITS = 8
EXPO_MASK = (1 << EXPO_BITS) - 1


def pack_expo(expo) -> int:
    key = 0
    for i, k in enumerate(expo):
        if k:
            if not 0 <= k <= EXPO_MASK:
                raise ValueError("exponent out of packable range")
            key |= k << (EXPO_BITS * i)
    return key


def unpack_expo(key: int, dim: int) -> tuple:
    out = []
    for _ in range(dim):
        out.append(key & EXPO_MASK)
        key >>= EXPO_BITS
    return tuple(out)


class ScalarFn:
    """A polynomial with exact rational coefficients on a fixed chart.

    ``terms`` maps packed exponent keys to nonzero coefficients; the map
    is never mutated after construction.
    """

    __slots__ = ("chart", "terms")

    def __init__(self, chart: Chart, terms: dict | None = None, _canonical=False):
        self.chart = chart
        if terms is None:
            terms = {}
        if not _canonical:
            clean: dict = {}
            for expo, coeff in terms.items():
                if isinstance(expo, int):
                    key = expo
                else:
                    expo = tuple(expo)
                    if len(expo) != chart.dim:
                        raise ValueError("exponent length does not match chart dim")
                    key = pack_expo(expo)
                coeff = Q(coeff)
                if coeff != 0:
                    clean[key] = clean.get(key, ZERO) + coeff
                    if clean[key] == 0:
                        del clean[key]
            terms = clean
        self.terms = terms

    def iter_terms(self):
        """Yield (exponent tuple, coefficient) pairs."""
        dim = self.chart.dim
        for key, coeff in self.terms.items():
            yield unpack_expo(key, dim), coeff

    # construction helpers -------------------------------------------------

    @staticmethod
    def const(chart: Chart, value) -> "ScalarFn":
        value = Q(value)
        if value == 0:
            return ScalarFn(chart, {}, _canonical=True)
        return ScalarFn(chart, {0: value}, _canonical=True)

    @staticmethod
    def zero(chart: Chart) -> "ScalarFn":
        return ScalarFn(chart, {}, _canonical=True)

    @staticmethod
    def var(chart: Chart, index: int) -> "ScalarFn":
        if not 0 <= index < chart.dim:
            raise IndexError(f"variable index {index} out of range for {chart!r}")
        return ScalarFn(chart, {1 << (EXPO_BITS * index): ONE}, _canonical=True)

    @staticmethod
    def named_var(chart: Chart, name: str) -> "ScalarFn":
        return ScalarFn.var(chart, chart.var_index(name))

    # ring structure -------------------------------------------------------

    def _coerce(self, other) -> "ScalarFn":
        if isinstance(other, ScalarFn):
            if other.chart is not self.chart and other.chart != self.chart:
                raise ChartMismatch(
                    f"cannot combine {self.chart!r} with {other.chart!r}"
                )
            return other
        return ScalarFn.const(self.chart, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for expo, coeff in other.terms.items():
            acc = out.get(expo)
            if acc is None:
                out[expo] = coeff
            else:
                acc = acc + coeff
                if acc == 0:
                    del out[expo]
                else:
                    out[expo] = acc
        return ScalarFn(self.chart, out, _canonical=True)

    __radd__ = __add__

    def __neg__(self):
        return ScalarFn(
            self.chart, {e: -c for e, c in self.terms.items()}, _canonical=True
        )

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + self._coerce(other)

    def __mul__(self, other):
        if not isinstance(other, ScalarFn):
            coeff = Q(other)
            if coeff == 0:
                return ScalarFn.zero(self.chart)
            return ScalarFn(
                self.chart,
                {e: c * coeff for e, c in self.terms.items()},
                _canonical=True,
            )
        other = self._coerce(other)
        if not self.terms or not other.terms:
            return ScalarFn.zero(self.chart)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                expo = e1 + e2
                coeff = c1 * c2
                acc = out.get(expo)
                if acc is None:
                    out[expo] = coeff
                else:
                    acc = acc + coeff
                    if acc == 0:
                        del out[expo]
                    else:
                        out[expo] = acc
        return ScalarFn(self.chart, out, _canonical=True)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        result = ScalarFn.const(self.chart, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    # predicates and comparison --------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, ScalarFn):
            return self.chart == other.chart and self.terms == other.terms
        if isinstance(other, (int, str)) or type(other) is type(ZERO):
            return self.terms == ScalarFn.const(self.chart, other).terms
        return NotImplemented

    def __hash__(self):
        return hash((self.chart, frozenset(self.terms.items())))

    def total_degree(self) -> int:
        return max((sum(e) for e, _ in self.iter_terms()), default=0)

    # calculus ---------------------------------------------------------------

    def partial(self, var_index: int) -> "ScalarFn":
        """Exact formal partial derivative with respect to one variable."""
        if not 0 <= var_index < self.chart.dim:
            raise IndexError(
                f"variable index {var_index} out of range for {self.chart!r}"
            )
        shift = EXPO_BITS * var_index
        unit = 1 << shift
        out: dict = {}
        for key, coeff in self.terms.items():
            k = (key >> shift) & EXPO_MASK
            if k == 0:
                continue
            new = key - unit
            val = coeff * k
            acc = out.get(new)
            out[new] = val if acc is None else acc + val
        return ScalarFn(self.chart, {e: c for e, c in out.items() if c != 0}, _canonical=True)

    def substitute(self, values: list) -> "ScalarFn":
        """Evaluate on polynomials: values[i] replaces the i-th variable.

        All values must live on one common chart; the result lives there.
        """
        if len(values) != self.chart.dim:
            raise ValueError("need one substitution value per variable")
        if self.chart.dim == 0:
            # constants transported to the requested chart
            raise ValueError("substitute on a 0-dim chart needs a target chart; use on_chart")
        target = values[0].chart
        powers: list[list[ScalarFn]] = [[ScalarFn.const(target, 1)] for _ in values]
        result = ScalarFn.zero(target)
        for expo, coeff in self.iter_terms():
            term = ScalarFn.const(target, coeff)
            for i, k in enumerate(expo):
                if k == 0:
                    continue
                cache = powers[i]
                while len(cache) <= k:
                    cache.append(cache[-1] * values[i])
                term = term * cache[k]
            result = result + term
        return result

    def on_chart(self, chart: Chart, positions: list[int] | None = None) -> "ScalarFn":
        """Reinterpret on a larger chart.

        ``positions[i]`` is the index in ``chart`` of this chart's i-th
        variable (default: same leading positions).  This is a cheap
        re-indexing, not a substitution.
        """
        if positions is None:
            if chart.dim < self.chart.dim:
                raise ValueError("target chart too small")
            # leading block: packed keys carry over unchanged
            return ScalarFn(chart, dict(self.terms), _canonical=True)
        out: dict = {}
        for expo, coeff in self.iter_terms():
            key = 0
            for i, k in enumerate(expo):
                if k:
                    key |= k << (EXPO_BITS * positions[i])
            out[key] = coeff
        return ScalarFn(chart, out, _canonical=True)

    def eval_rational(self, point: list) -> "Q":
        """Evaluate at an exact rational point."""
        if len(point) != self.chart.dim:
            raise ValueError("point dimension mismatch")
        total = ZERO
        for expo, coeff in self.iter_terms():
            val = coeff
            for x, k in zip(point, expo):
                for _ in range(k):
                    val = val * x
            total = total + val
        return total

    # text form ---------------------------------------------------------------

    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"ScalarFn({self.chart.name}: {format_poly(self)})"


def format_poly(f: ScalarFn) -> str:
    """Canonical text: graded-lex ordered sum of ``coef*x^e*...`` terms."""
    if not f.terms:
        return "0"
    expanded = {expo: coeff for expo, coeff in f.iter_terms()}
    keys = sorted(expanded, key=lambda e: (-sum(e), tuple(-k for k in e)))
    parts = []
    for expo in keys:
        coeff = expanded[expo]
        factors = []
        for name, k in zip(f.chart.vars, expo):
            if k == 1:
                factors.append(name)
            elif k > 1:
                factors.append(f"{name}^{k}")
        neg = coeff < 0
        mag = -coeff if neg else coeff
        if not factors:
            body = rat_str(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = rat_str(mag) + "*" + "*".join(factors)
        if not parts:
            parts.append(("-" if neg else "") + body)
        else:
            parts.append(("- " if neg else "+ ") + body)
    return " ".join(parts)


def parse_poly(text: str, chart: Chart) -> ScalarFn:
    """Parse a sum of ``coef*var^k*...`` terms with exact rational literals."""
    tokens = _tokenize(text)
    pos = 0
    result = ScalarFn.zero(chart)
    sign = 1
    expect_term = True
    term: ScalarFn | None = None
    while pos < len(tokens):
        tok = tokens[pos]
        if tok in "+-" and expect_term:
            if tok == "-":
                sign = -sign
            pos += 1
            continue
        if tok in "+-":
            if term is not None:
                result = result + term * sign
            term, sign = None, (1 if tok == "+" else -1)
            pos += 1
            expect_term = True
            continue
        if tok == "*":
            pos += 1
            expect_term = True
            continue
        factor, pos = _parse_factor(tokens, pos, chart)
        term = factor if term is None else term * factor
        expect_term = False
    if expect_term and term is None and tokens:
        raise ValueError(f"dangling operator in {text!r}")
    if term is not None:
        result = result + term * sign
    return result


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "+-*":
            tokens.append(c)
            i += 1
        elif c.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            if j < len(text) and text[j] == "/":
                k = j + 1
                while k < len(text) and text[k].isdigit():
                    k += 1
                if k == j + 1:
                    raise ValueError(f"bad rational literal in {text!r}")
                tokens.append(text[i:k])
                i = k
            else:
                tokens.append(text[i:j])
                i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            name = text[i:j]
            i = j
            if i < len(text) and text[i] == "^":
                i += 1
                j = i
                while j < len(text) and text[j].isdigit():
                    j += 1
                if j == i:
                    raise ValueError(f"missing exponent after ^ in {text!r}")
                tokens.append(name + "^" + text[i:j])
                i = j
            else:
                tokens.append(name)
        else:
            raise ValueError(f"unexpected character {c!r} in {text!r}")
    return tokens


def _parse_factor(tokens: list[str], pos: int, chart: Chart):
    tok = tokens[pos]
    if tok[0].isdigit():
        return ScalarFn.const(chart, rat(tok)), pos + 1
    if "^" in tok:
        name, _, exp = tok.partition("^")
        return ScalarFn.named_var(chart, name) ** int(exp), pos + 1
    return ScalarFn.named_var(chart, tok), pos + 1


@dataclass(frozen=True)
class PolyMap:
    """A polynomial map between charts, one component per target variable."""

    source: Chart
    target: Chart
    components: tuple[ScalarFn, ...]

    def __post_init__(self):
        if len(self.components) != self.target.dim:
            raise ValueError(
                f"map {self.source.name}->{self.target.name}: "
                f"{len(self.components)} components for target dim {self.target.dim}"
            )
        for comp in self.components:
            if comp.chart != self.source:
                raise ChartMismatch("component not on the source chart")
        object.__setattr__(self, "components", tuple(self.components))

    @staticmethod
    def identity(chart: Chart) -> "PolyMap":
        return PolyMap(
            chart, chart, tuple(ScalarFn.var(chart, i) for i in range(chart.dim))
        )

    def compose(self, inner: "PolyMap") -> "PolyMap":
        """self after inner: source of ``inner`` to target of ``self``."""
        if inner.target != self.source:
            raise ChartMismatch("composition chart mismatch")
        comps = tuple(pullback(c, inner) for c in self.components)
        return PolyMap(inner.source, self.target, comps)

    def __eq__(self, other):
        if not isinstance(other, PolyMap):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and self.components == other.components
        )


def pullback(f: ScalarFn, phi: PolyMap) -> ScalarFn:
    """Composition f o phi, exactly; a ring homomorphism in f."""
    if f.chart != phi.target:
        raise ChartMismatch(
            f"pullback: function on {f.chart!r}, map into {phi.target!r}"
        )
    if phi.target.dim == 0:
        # f is a constant; transport it to the source chart
        return ScalarFn.const(phi.source, f.terms.get(0, ZERO))
    return f.substitute(list(phi.components))


def partial_derivative(f: ScalarFn, var_index: int) -> ScalarFn:
    return f.partial(var_index)


def jacobian(phi: PolyMap) -> tuple[tuple[ScalarFn, ...], ...]:
    """Matrix of partials, indexed [target component][source variable]."""
    return tuple(
        tuple(comp.partial(mu) for mu in range(phi.source.dim))
        for comp in phi.components
    )


# -- small structural helpers used across the geometry modules --------------


def freeze(nested):
    """Recursively convert nested lists to tuples."""
    if isinstance(nested, (list, tuple)):
        return tuple(freeze(x) for x in nested)
    return nested


def map_scalars(nested, fn):
    """Apply ``fn`` to every ScalarFn leaf of a nested tuple/list."""
    if isinstance(nested, (list, tuple)):
        return tuple(map_scalars(x, fn) for x in nested)
    return fn(nested)


def all_zero(nested) -> bool:
    if isinstance(nested, (list, tuple)):
        return all(all_zero(x) for x in nested)
    return nested.is_zero()


def first_nonzero(nested, path=()):
    """Depth-first search for a nonzero leaf; returns (index path, leaf)."""
    if isinstance(nested, (list, tuple)):
        for i, x in enumerate(nested):
            found = first_nonzero(x, path + (i,))
            if found is not None:
                return found
        return None
    return None if nested.is_zero() else (path, nested)


def zeros(chart: Chart, *shape: int):
    """Nested tuple of zero ScalarFns with the given shape."""
    if not shape:
        return ScalarFn.zero(chart)
    return tuple(zeros(chart, *shape[1:]) for _ in range(shape[0]))
