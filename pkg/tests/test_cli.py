import json

import pytest

from imconnect.cli import main
from imconnect.specfile import SpecError, parse_document, run_recipe, serialize_document

HEIS_TOY = """\
construct toy
  recipe heisenberg
  r 1 2 = 1
"""

PERTURBED = """\
chart H
  vars x1 x2 x3

connection ca
  base H
  rank 3

connection cm
  base H
  rank 3
  gamma 1 2 3 = -1/2
  gamma 2 1 3 = -1/2

algebroid alg
  base H
  rank 3
  anchor 2 3 = 1

im_components comps
  algebroid alg
  conn_a ca
  conn_m cm
  l 1 3 1 = 1

check main
  kind im_connection
  target comps
"""

MULTIPLICATIVE = """\
groupoid G
  builtin pair
  dim 1

connection nabla
  base G.arrows
  rank 2

check mult
  kind multiplicative
  groupoid G
  connection nabla

check ax
  kind axioms
  groupoid G
"""

TRANS_ABEL = """\
chart M
  vars x y

connection nk
  base M
  rank 1

connection nm
  base M
  rank 2
  gamma 1 1 1 = x

construct trans
  recipe transitive_abelian
  nabla_k nk
  nabla_m nm
  c 1 2 1 = 1
  theta 1 1 1 = y
"""

NON_CLOSED = """\
chart M
  vars x y z

connection nk
  base M
  rank 1

connection nm
  base M
  rank 3

construct trans
  recipe transitive_abelian
  nabla_k nk
  nabla_m nm
  c 1 2 1 = z
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestFormat:
    def test_load_serialize_load_is_identity(self, tmp_path):
        doc = parse_document(PERTURBED)
        text = serialize_document(doc)
        again = parse_document(text)
        assert serialize_document(again) == text

    def test_duplicate_names_rejected(self):
        with pytest.raises(SpecError):
            parse_document("chart M\n  vars x\n\nchart M\n  vars y\n")

    def test_unresolved_reference_rejected(self):
        with pytest.raises(SpecError):
            parse_document("connection c\n  base NOPE\n  rank 1\n")

    def test_rational_literals_survive(self):
        doc = parse_document(PERTURBED)
        text = serialize_document(doc)
        assert "-1/2" in text


class TestCheckCommand:
    def test_passing_document_exits_zero(self, tmp_path, capsys):
        out = write(tmp_path, "toy.imc", HEIS_TOY)
        dest = str(tmp_path / "built.imc")
        assert main(["construct", out, "--recipe", "toy", "--out", dest]) == 0
        assert main(["check", dest]) == 0
        printed = capsys.readouterr().out
        assert "[PASS]" in printed

    def test_failing_check_exits_one(self, tmp_path, capsys):
        path = write(tmp_path, "bad.imc", PERTURBED)
        assert main(["check", path]) == 1
        printed = capsys.readouterr().out
        assert "bracket_identity" in printed

    def test_parse_error_exits_two(self, tmp_path, capsys):
        path = write(tmp_path, "broken.imc", "chart M\n")
        assert main(["check", path]) == 2

    def test_missing_target_exits_two(self, tmp_path):
        path = write(tmp_path, "doc.imc", PERTURBED)
        assert main(["check", path, "--target", "nothere"]) == 2

    def test_natural_dispatch_on_object(self, tmp_path):
        path = write(tmp_path, "doc.imc", PERTURBED)
        assert main(["check", path, "--target", "alg"]) == 0
        assert main(["check", path, "--target", "comps"]) == 1

    def test_multiplicative_and_axioms(self, tmp_path, capsys):
        path = write(tmp_path, "mult.imc", MULTIPLICATIVE)
        assert main(["check", path]) == 0
        printed = capsys.readouterr().out
        assert "routes_agree" not in printed  # passing entries stay silent

    def test_json_report(self, tmp_path):
        path = write(tmp_path, "bad.imc", PERTURBED)
        json_path = tmp_path / "out.json"
        assert main(["check", path, "--json", str(json_path)]) == 1
        payload = json.loads(json_path.read_text())
        assert payload["status"] == "fail"
        assert payload["checks"][0]["kind"] == "im_connection"
        assert payload["checks"][0]["defects"]

    def test_jet_degree_flag(self, tmp_path):
        out = write(tmp_path, "toy.imc", HEIS_TOY)
        dest = str(tmp_path / "built.imc")
        main(["construct", out, "--recipe", "toy", "--out", dest])
        assert main(["check", dest, "--jet-degree", "3"]) == 0


class TestConstructCommand:
    def test_round_trip_reverifies(self, tmp_path):
        src = write(tmp_path, "trans.imc", TRANS_ABEL)
        dest = str(tmp_path / "built.imc")
        assert main(["construct", src, "--recipe", "trans", "--out", dest]) == 0
        assert main(["report", dest]) == 0

    def test_non_closed_form_reported(self, tmp_path, capsys):
        src = write(tmp_path, "bad.imc", NON_CLOSED)
        dest = str(tmp_path / "built.imc")
        assert main(["construct", src, "--recipe", "trans", "--out", dest]) == 2
        err = capsys.readouterr().err
        assert "not closed" in err

    def test_vertical_flat_case(self, tmp_path):
        text = """\
chart M
  vars x y

connection nm
  base M
  rank 2

construct vb
  recipe vertical_bundle
  chart M
  connection nm
  base_vars x
"""
        src = write(tmp_path, "vb.imc", text)
        dest = str(tmp_path / "built.imc")
        assert main(["construct", src, "--recipe", "vb", "--out", dest]) == 0
        built = parse_document(open(dest).read())
        comps = built.components["vb_components"]
        from imconnect.symkernel import all_zero

        assert all_zero(comps.f_op) and all_zero(comps.l_map)
        assert main(["check", dest]) == 0


class TestReportCommand:
    def test_aggregates_and_flags_failures(self, tmp_path, capsys):
        path = write(tmp_path, "bad.imc", PERTURBED)
        assert main(["report", path]) == 1
        printed = capsys.readouterr().out
        assert "0/1 checks passed" in printed

    def test_empty_document_warns(self, tmp_path, capsys):
        path = write(tmp_path, "empty.imc", "chart M\n  vars x\n")
        assert main(["report", path]) == 0
        printed = capsys.readouterr().out
        assert "no checks" in printed
