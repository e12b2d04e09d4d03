"""Command-line front end.

    imconnect check FILE [--target NAME] [--jet-degree N] [--json PATH]
    imconnect construct FILE --recipe NAME --out FILE
    imconnect report FILE [--jet-degree N] [--json PATH]

Exit codes: 0 all checks pass, 1 a check failed, 2 input error.  The
IMCONNECT_THREADS environment variable bounds the worker pool used to
run the checks of a document concurrently; results are always reported
in declaration order.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from .reports import DefectReport
from .specfile import SpecDocument, SpecError, parse_document, run_recipe, serialize_document

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2


def _run_check(doc: SpecDocument, kind: str, refs: dict, jet_degree: int):
    from .algebroid import check_algebroid
    from .imconn import check_im_connection, check_im_form, im_torsion, spray_crosscheck
    from .groupoid import check_multiplicative, obstruction_tests

    def need(key, table, what):
        name = refs.get(key)
        if name is None or name not in table:
            raise SpecError(f"unresolved {what} reference {name!r}")
        return table[name]

    if kind == "algebroid":
        return check_algebroid(need("target", doc.algebroids, "algebroid"))
    if kind == "im_connection":
        return check_im_connection(need("target", doc.components, "components"), jet_degree)
    if kind == "im_form":
        comps = need("target", doc.components, "components")
        return check_im_form(im_torsion(comps), jet_degree)
    if kind == "spray":
        comps = need("target", doc.components, "components")
        result = spray_crosscheck(comps, jet_degree)
        report = DefectReport()
        report.add_bool("defining_identities", result.equations_pass)
        report.add_bool("torsion_and_spray_route", result.spray_route_pass)
        report.add_bool("routes_agree", result.agree)
        return report
    if kind == "axioms":
        return need("groupoid", doc.groupoids, "groupoid").check_axioms()
    if kind == "multiplicative":
        gpd = need("groupoid", doc.groupoids, "groupoid")
        conn = need("connection", doc.connections, "connection")
        result = check_multiplicative(gpd, conn)
        report = DefectReport()
        report.add_bool("multiplication_route", result.route_mult)
        report.add_bool("division_route", result.route_division)
        report.add_bool("torsion_spray_route", result.route_spray)
        report.add_bool("routes_agree", result.agree)
        return report
    if kind == "obstruction":
        gpd = need("groupoid", doc.groupoids, "groupoid")
        conn = need("connection", doc.connections, "connection")
        conn2 = need("connection2", doc.connections, "connection")
        result = obstruction_tests(gpd, conn, conn2)
        report = DefectReport()
        report.add_bool("cocycle", result.cocycle_ok)
        report.add_bool("coboundary_difference", result.coboundary_difference_ok)
        if result.vanishes_for_multiplicative is not None:
            report.add_bool("vanishes_for_multiplicative", result.vanishes_for_multiplicative)
        return report
    raise SpecError(f"unknown check kind {kind!r}")


def _natural_check(doc: SpecDocument, target: str, jet_degree: int):
    if target in doc.algebroids:
        return "algebroid", _run_check(doc, "algebroid", {"target": target}, jet_degree)
    if target in doc.components:
        return "im_connection", _run_check(doc, "im_connection", {"target": target}, jet_degree)
    if target in doc.groupoids:
        return "axioms", _run_check(doc, "axioms", {"groupoid": target}, jet_degree)
    for req in doc.checks:
        if req.name == target:
            return req.kind, _run_check(doc, req.kind, req.refs, jet_degree)
    raise SpecError(f"no target named {target!r}")


def _report_entry(name, kind, report, seconds):
    status = "pass" if report.passed else "fail"
    defects = [
        {
            "name": e.name,
            "slots": list(e.witness_path) if e.witness_path else None,
            "leading": e.witness_leading,
        }
        for e in report.entries
        if not e.zero
    ]
    return {
        "name": name,
        "kind": kind,
        "status": status,
        "defects": defects,
        "seconds": round(seconds, 4),
    }


def _print_entry(entry):
    line = f"[{entry['status'].upper():4}] {entry['name']} ({entry['kind']}, {entry['seconds']}s)"
    print(line)
    for defect in entry["defects"]:
        slots = f" at slots {tuple(defect['slots'])}" if defect["slots"] else ""
        lead = f": {defect['leading']}" if defect["leading"] else ""
        print(f"         defect {defect['name']}{slots}{lead}")


def _emit_json(path, payload):
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")


def _run_requests(doc: SpecDocument, requests, jet_degree: int):
    workers = int(os.environ.get("IMCONNECT_THREADS", "0")) or min(8, os.cpu_count() or 1)

    def run(req):
        start = time.monotonic()
        report = _run_check(doc, req.kind, req.refs, jet_degree)
        return _report_entry(req.name, req.kind, report, time.monotonic() - start)

    if workers > 1 and len(requests) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, requests))
    return [run(req) for req in requests]


def cmd_check(args) -> int:
    try:
        doc = parse_document(_read(args.file))
        if args.target:
            start = time.monotonic()
            kind, report = _natural_check(doc, args.target, args.jet_degree)
            entries = [_report_entry(args.target, kind, report, time.monotonic() - start)]
        else:
            entries = _run_requests(doc, doc.checks, args.jet_degree)
            if not doc.checks:
                print("warning: document declares no checks")
    except (SpecError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    for entry in entries:
        _print_entry(entry)
    passed = all(e["status"] == "pass" for e in entries)
    _emit_json(args.json, {"file": args.file, "checks": entries, "status": "pass" if passed else "fail"})
    return EXIT_PASS if passed else EXIT_CHECK_FAILED


def cmd_construct(args) -> int:
    try:
        doc = parse_document(_read(args.file))
        result = run_recipe(doc, args.recipe)
        text = serialize_document(result)
        reparsed = parse_document(text)
        if serialize_document(reparsed) != text:
            raise SpecError("emitted document does not round-trip")
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    except (SpecError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    print(f"wrote {args.out}")
    return EXIT_PASS


def cmd_report(args) -> int:
    try:
        doc = parse_document(_read(args.file))
        entries = _run_requests(doc, doc.checks, args.jet_degree)
    except (SpecError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    for entry in entries:
        _print_entry(entry)
    n_pass = sum(1 for e in entries if e["status"] == "pass")
    print(f"{n_pass}/{len(entries)} checks passed")
    if not entries:
        print("warning: document declares no checks")
    passed = all(e["status"] == "pass" for e in entries)
    _emit_json(args.json, {"file": args.file, "checks": entries, "status": "pass" if passed else "fail"})
    return EXIT_PASS if passed else EXIT_CHECK_FAILED


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imconnect",
        description="Exact verification of compatible connections on coordinate groupoids and algebroids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run one target or every declared check")
    check.add_argument("file")
    check.add_argument("--target", help="object or check name to verify")
    check.add_argument("--jet-degree", type=int, default=2)
    check.add_argument("--json", help="write a structured report to this path")
    check.set_defaults(func=cmd_check)

    construct = sub.add_parser("construct", help="run a construction recipe")
    construct.add_argument("file")
    construct.add_argument("--recipe", required=True)
    construct.add_argument("--out", required=True)
    construct.set_defaults(func=cmd_construct)

    report = sub.add_parser("report", help="run every declared check and aggregate")
    report.add_argument("file")
    report.add_argument("--jet-degree", type=int, default=2)
    report.add_argument("--json", help="write a structured report to this path")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
