"""Line-oriented text format for declaring charts, maps, algebroids,
connections, component tuples, groupoids, construction recipes and check
requests.

A document is a sequence of blocks.  A block starts at column zero with
``<kind> <name>`` and continues with indented ``key ...`` lines.  Array
entries use 1-based indices and exact rational or polynomial right-hand
sides, for example::

    connection nabla
      base M
      rank 2
      gamma 1 2 1 = 1/2*x + y

All numeric literals are exact rationals; floating point is not part of
the grammar.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .rationals import Q, rat, rat_str
from .symkernel import Chart, PolyMap, ScalarFn, format_poly, parse_poly, zeros
from .geometry import ConnectionData
from .algebroid import AlgebroidData
from .imconn import IMConnComponents
from .groupoid import CoordGroupoid, builtin_groupoid


class SpecError(ValueError):
    """Parse failures and unresolved references."""


@dataclass
class CheckRequest:
    name: str
    kind: str
    refs: dict


@dataclass
class Recipe:
    name: str
    recipe: str
    entries: list  # raw (key, tokens, rhs_text) triples


@dataclass
class SpecDocument:
    charts: dict = field(default_factory=dict)
    connections: dict = field(default_factory=dict)
    algebroids: dict = field(default_factory=dict)
    components: dict = field(default_factory=dict)
    groupoids: dict = field(default_factory=dict)
    recipes: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    order: list = field(default_factory=list)

    def all_names(self):
        names = set()
        for d in (self.charts, self.connections, self.algebroids, self.components, self.groupoids, self.recipes):
            names.update(d)
        names.update(c.name for c in self.checks)
        return names

    def register(self, kind, name, obj):
        if name in self.all_names():
            raise SpecError(f"duplicate declaration name {name!r}")
        getattr(self, kind)[name] = obj
        self.order.append((kind, name))


def _split_blocks(text: str):
    blocks = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indented = line[0] in " \t"
        parts = line.strip().split(None, 1)
        if not indented:
            if len(parts) != 2:
                raise SpecError(f"line {lineno}: block header needs a kind and a name")
            current = (parts[0], parts[1], [])
            blocks.append(current)
        else:
            if current is None:
                raise SpecError(f"line {lineno}: indented line outside a block")
            current[2].append((lineno, line.strip()))
    return blocks


def _entry(line: str):
    """Split an indented line into key, index tokens and an optional
    right-hand side after '='."""
    if "=" in line:
        head, _, rhs = line.partition("=")
        tokens = head.split()
        return tokens[0], tokens[1:], rhs.strip()
    tokens = line.split()
    return tokens[0], tokens[1:], None


def parse_document(text: str) -> SpecDocument:
    doc = SpecDocument()
    for kind, name, lines in _split_blocks(text):
        try:
            _parse_block(doc, kind, name, lines)
        except SpecError:
            raise
        except (ValueError, KeyError) as exc:
            raise SpecError(f"block {kind} {name}: {exc}") from exc
    return doc


def _get_chart(doc: SpecDocument, ref: str) -> Chart:
    if ref in doc.charts:
        return doc.charts[ref]
    raise SpecError(f"unresolved chart reference {ref!r}")


def _fields(lines):
    out = {}
    entries = []
    for lineno, line in lines:
        key, tokens, rhs = _entry(line)
        if rhs is None and key not in ("vars",):
            out[key] = tokens
        elif key == "vars":
            out["vars"] = tokens
        else:
            entries.append((key, tokens, rhs))
    return out, entries


def _parse_block(doc: SpecDocument, kind: str, name: str, lines):
    if kind == "chart":
        fields, entries = _fields(lines)
        if "vars" not in fields:
            raise SpecError(f"chart {name}: missing vars")
        doc.register("charts", name, Chart(name, tuple(fields["vars"])))
        return

    if kind == "connection":
        fields, entries = _fields(lines)
        chart = _get_chart(doc, fields["base"][0])
        rank = int(fields["rank"][0])
        gamma = [
            [[ScalarFn.zero(chart) for _ in range(rank)] for _ in range(rank)]
            for _ in range(chart.dim)
        ]
        for key, tokens, rhs in entries:
            if key != "gamma":
                raise SpecError(f"connection {name}: unknown entry {key!r}")
            mu, b, c = (int(t) - 1 for t in tokens)
            gamma[mu][b][c] = parse_poly(rhs, chart)
        doc.register("connections", name, ConnectionData(chart, rank, gamma))
        return

    if kind == "algebroid":
        fields, entries = _fields(lines)
        chart = _get_chart(doc, fields["base"][0])
        rank = int(fields["rank"][0])
        anchor = [[ScalarFn.zero(chart) for _ in range(chart.dim)] for _ in range(rank)]
        structure = [
            [[ScalarFn.zero(chart) for _ in range(rank)] for _ in range(rank)]
            for _ in range(rank)
        ]
        for key, tokens, rhs in entries:
            if key == "anchor":
                i, mu = (int(t) - 1 for t in tokens)
                anchor[i][mu] = parse_poly(rhs, chart)
            elif key == "structure":
                i, j, k = (int(t) - 1 for t in tokens)
                value = parse_poly(rhs, chart)
                structure[i][j][k] = value
                structure[j][i][k] = -value
            else:
                raise SpecError(f"algebroid {name}: unknown entry {key!r}")
        doc.register("algebroids", name, AlgebroidData(chart, rank, anchor, structure))
        return

    if kind == "im_components":
        fields, entries = _fields(lines)
        algebroid = doc.algebroids.get(fields["algebroid"][0])
        if algebroid is None:
            raise SpecError(f"unresolved algebroid reference {fields['algebroid'][0]!r}")
        conn_a = doc.connections.get(fields["conn_a"][0])
        conn_m = doc.connections.get(fields["conn_m"][0])
        if conn_a is None or conn_m is None:
            raise SpecError(f"im_components {name}: unresolved connection reference")
        chart = algebroid.base
        n, r = chart.dim, algebroid.rank
        f_op = [
            [[[ScalarFn.zero(chart) for _ in range(r)] for _ in range(n)] for _ in range(n)]
            for _ in range(r)
        ]
        l_map = [
            [[ScalarFn.zero(chart) for _ in range(r)] for _ in range(n)] for _ in range(r)
        ]
        for key, tokens, rhs in entries:
            if key == "f":
                i, mu, nu, k = (int(t) - 1 for t in tokens)
                f_op[i][mu][nu][k] = parse_poly(rhs, chart)
            elif key == "l":
                i, nu, k = (int(t) - 1 for t in tokens)
                l_map[i][nu][k] = parse_poly(rhs, chart)
            else:
                raise SpecError(f"im_components {name}: unknown entry {key!r}")
        doc.register(
            "components", name, IMConnComponents(algebroid, f_op, conn_a, conn_m, l_map)
        )
        return

    if kind == "groupoid":
        fields, entries = _fields(lines)
        which = fields["builtin"][0]
        params = {}
        for key in ("dim", "base_dim", "fiber_dim"):
            if key in fields:
                params[key] = int(fields[key][0])
        gpd = builtin_groupoid(which, **params)
        doc.register("groupoids", name, gpd)
        # expose the generated charts for connection declarations
        doc.charts[f"{name}.arrows"] = gpd.chart_g
        doc.charts[f"{name}.objects"] = gpd.chart_m
        return

    if kind == "construct":
        fields, entries = _fields(lines)
        recipe = fields["recipe"][0]
        refs = {k: v[0] for k, v in fields.items() if k != "recipe"}
        doc.register("recipes", name, Recipe(name, recipe, [(refs, entries)]))
        return

    if kind == "check":
        fields, entries = _fields(lines)
        check_kind = fields["kind"][0]
        refs = {k: v[0] for k, v in fields.items() if k != "kind"}
        request = CheckRequest(name, check_kind, refs)
        if name in doc.all_names():
            raise SpecError(f"duplicate declaration name {name!r}")
        doc.checks.append(request)
        doc.order.append(("checks", name))
        return

    raise SpecError(f"unknown block kind {kind!r}")


# -- serialization ---------------------------------------------------------------


def serialize_document(doc: SpecDocument) -> str:
    out = []
    for kind, name in doc.order:
        if kind == "charts":
            chart = doc.charts[name]
            out.append(f"chart {name}")
            out.append("  vars " + " ".join(chart.vars))
        elif kind == "connections":
            conn = doc.connections[name]
            out.append(f"connection {name}")
            out.append(f"  base {conn.base_chart.name}")
            out.append(f"  rank {conn.rank}")
            for mu in range(conn.base_chart.dim):
                for b in range(conn.rank):
                    for c in range(conn.rank):
                        val = conn.gamma[mu][b][c]
                        if not val.is_zero():
                            out.append(
                                f"  gamma {mu + 1} {b + 1} {c + 1} = {format_poly(val)}"
                            )
        elif kind == "algebroids":
            a = doc.algebroids[name]
            out.append(f"algebroid {name}")
            out.append(f"  base {a.base.name}")
            out.append(f"  rank {a.rank}")
            for i in range(a.rank):
                for mu in range(a.base.dim):
                    if not a.anchor[i][mu].is_zero():
                        out.append(
                            f"  anchor {i + 1} {mu + 1} = {format_poly(a.anchor[i][mu])}"
                        )
            for i in range(a.rank):
                for j in range(i + 1, a.rank):
                    for k in range(a.rank):
                        val = a.structure[i][j][k]
                        if not val.is_zero():
                            out.append(
                                f"  structure {i + 1} {j + 1} {k + 1} = {format_poly(val)}"
                            )
        elif kind == "components":
            comps = doc.components[name]
            refs = _component_refs(doc, name)
            out.append(f"im_components {name}")
            out.append(f"  algebroid {refs['algebroid']}")
            out.append(f"  conn_a {refs['conn_a']}")
            out.append(f"  conn_m {refs['conn_m']}")
            n, r = comps.algebroid.base.dim, comps.algebroid.rank
            for i in range(r):
                for mu in range(n):
                    for nu in range(n):
                        for k in range(r):
                            val = comps.f_op[i][mu][nu][k]
                            if not val.is_zero():
                                out.append(
                                    f"  f {i + 1} {mu + 1} {nu + 1} {k + 1} = {format_poly(val)}"
                                )
            for i in range(r):
                for nu in range(n):
                    for k in range(r):
                        val = comps.l_map[i][nu][k]
                        if not val.is_zero():
                            out.append(
                                f"  l {i + 1} {nu + 1} {k + 1} = {format_poly(val)}"
                            )
        elif kind == "groupoids":
            gpd = doc.groupoids[name]
            out.append(f"groupoid {name}")
            out.append(f"  builtin {gpd.kind}")
            if gpd.kind in ("pair", "abelian"):
                dim = gpd.chart_m.dim if gpd.kind == "pair" else gpd.chart_g.dim
                out.append(f"  dim {dim}")
            elif gpd.kind == "submersion":
                b = sum(1 for v in gpd.chart_m.vars if v.startswith("b"))
                out.append(f"  base_dim {b}")
                out.append(f"  fiber_dim {gpd.chart_m.dim - b}")
        elif kind == "recipes":
            pass  # recipes are inputs, not outputs
        elif kind == "checks":
            request = next(c for c in doc.checks if c.name == name)
            out.append(f"check {name}")
            out.append(f"  kind {request.kind}")
            for key, value in request.refs.items():
                out.append(f"  {key} {value}")
        out.append("")
    return "\n".join(out)


def _component_refs(doc: SpecDocument, comp_name: str) -> dict:
    comps = doc.components[comp_name]
    refs = {}
    for aname, a in doc.algebroids.items():
        if a is comps.algebroid or a == comps.algebroid:
            refs["algebroid"] = aname
            break
    for cname, c in doc.connections.items():
        if c == comps.conn_a and "conn_a" not in refs:
            refs["conn_a"] = cname
        if c == comps.conn_m and "conn_m" not in refs:
            refs["conn_m"] = cname
    missing = {"algebroid", "conn_a", "conn_m"} - set(refs)
    if missing:
        raise SpecError(
            f"components {comp_name}: cannot serialize, unnamed parts {sorted(missing)}"
        )
    return refs


# -- construction recipes ----------------------------------------------------------


def run_recipe(doc: SpecDocument, name: str) -> SpecDocument:
    """Execute a named recipe against its document; the result is a fresh
    document that re-loads and re-verifies."""
    from .constructors import (
        TransitiveAbelianData,
        heisenberg_toy,
        transitive_abelian_im,
        vertical_bundle_im,
        coordinate_projection,
    )

    if name not in doc.recipes:
        raise SpecError(f"no construct block named {name!r}")
    recipe = doc.recipes[name]
    refs, entries = recipe.entries[0]
    out = SpecDocument()

    if recipe.recipe == "heisenberg":
        rmat = [[Q(0)] * 3 for _ in range(3)]
        for key, tokens, rhs in entries:
            if key != "r":
                raise SpecError(f"recipe {name}: unknown entry {key!r}")
            i, j = (int(t) - 1 for t in tokens)
            rmat[i][j] = rat(rhs)
        toy = heisenberg_toy(rmat)
        chart = toy.algebroid.base
        out.register("charts", chart.name, chart)
        out.register("connections", f"{name}_conn_a", toy.components.conn_a)
        out.register("connections", f"{name}_conn_m", toy.components.conn_m)
        out.register("algebroids", f"{name}_algebroid", toy.algebroid)
        out.register("components", f"{name}_components", toy.components)
        out.checks.append(
            CheckRequest(f"{name}_check", "im_connection", {"target": f"{name}_components"})
        )
        out.order.append(("checks", f"{name}_check"))
        return out

    if recipe.recipe == "vertical_bundle":
        chart = _get_chart(doc, refs["chart"])
        conn = doc.connections.get(refs["connection"])
        if conn is None:
            raise SpecError(f"recipe {name}: unresolved connection {refs['connection']!r}")
        base_vars = [t for key, tokens, rhs in entries if key == "base_vars" for t in tokens]
        if not base_vars and "base_vars" in refs:
            base_vars = [refs["base_vars"]]
        base_chart = Chart(f"{name}_base", tuple(base_vars))
        pi, section = coordinate_projection(chart, base_chart, base_vars)
        algebroid, comps = vertical_bundle_im(pi, section, conn)
        out.register("charts", chart.name, chart)
        out.register("connections", f"{name}_conn_a", comps.conn_a)
        out.register("connections", f"{name}_conn_m", comps.conn_m)
        out.register("algebroids", f"{name}_algebroid", algebroid)
        out.register("components", f"{name}_components", comps)
        out.checks.append(
            CheckRequest(f"{name}_check", "im_connection", {"target": f"{name}_components"})
        )
        out.order.append(("checks", f"{name}_check"))
        return out

    if recipe.recipe == "transitive_abelian":
        nabla_k = doc.connections.get(refs["nabla_k"])
        nabla_m = doc.connections.get(refs["nabla_m"])
        if nabla_k is None or nabla_m is None:
            raise SpecError(f"recipe {name}: unresolved connection reference")
        chart = nabla_k.base_chart
        n, kr = chart.dim, nabla_k.rank
        c_form = [[[ScalarFn.zero(chart) for _ in range(kr)] for _ in range(n)] for _ in range(n)]
        theta = [[[ScalarFn.zero(chart) for _ in range(kr)] for _ in range(n)] for _ in range(n)]
        for key, tokens, rhs in entries:
            if key == "c":
                mu, nu, a = (int(t) - 1 for t in tokens)
                val = parse_poly(rhs, chart)
                c_form[mu][nu][a] = val
                c_form[nu][mu][a] = -val
            elif key == "theta":
                mu, nu, a = (int(t) - 1 for t in tokens)
                theta[mu][nu][a] = parse_poly(rhs, chart)
            else:
                raise SpecError(f"recipe {name}: unknown entry {key!r}")
        data = TransitiveAbelianData(nabla_k, c_form, nabla_m, theta)
        algebroid, comps = transitive_abelian_im(data)
        out.register("charts", chart.name, chart)
        out.register("connections", f"{name}_conn_a", comps.conn_a)
        out.register("connections", f"{name}_conn_m", comps.conn_m)
        out.register("algebroids", f"{name}_algebroid", algebroid)
        out.register("components", f"{name}_components", comps)
        out.checks.append(
            CheckRequest(f"{name}_check", "im_connection", {"target": f"{name}_components"})
        )
        out.checks.append(
            CheckRequest(f"{name}_check_algebroid", "algebroid", {"target": f"{name}_algebroid"})
        )
        out.order.append(("checks", f"{name}_check"))
        out.order.append(("checks", f"{name}_check_algebroid"))
        return out

    raise SpecError(f"unknown recipe {recipe.recipe!r}")
