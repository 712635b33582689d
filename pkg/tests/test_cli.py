import csv
import io
import json
import subprocess
import sys

import pytest

from convval import cli
from convval.cli import CSV_COLUMNS, main

EXPERIMENTS = [
    {"id": "cone", "operation": "cone_identity", "density": "tent", "j": 1, "n": 2, "t": 0.5},
    {"id": "direct", "operation": "fiv_direct", "function": {"corpus": "half_sq", "n": 2},
     "density": "tent", "j": 1, "oracle": 2.0943951023931953, "tolerance": 1e-4},
    {"id": "kub", "operation": "fiv_kubota", "function": {"corpus": "aniso_quad", "n": 2},
     "density": "bump", "j": 1, "sample_count": 600},
    {"id": "a2", "operation": "abel_k", "k": 2, "density": "tent", "t": 0.5,
     "oracle": 0.5235987755982988, "tolerance": 1e-8},
    {"id": "dirac", "operation": "monge_ampere_pl",
     "function": {"corpus": "delta_pl", "n": 2, "params": {"anchor": [0.3, -0.2]}},
     "region": [[-1, -1], [1, 1]], "oracle": 1.0, "tolerance": 1e-12},
    {"id": "cls", "operation": "check_hadwiger_class", "density": "sqrt_tent", "j": 2, "n": 2,
     "expect": False},
]


def _write(tmp_path, obj, name="spec.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def _rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_empty_spec_gives_header_only(tmp_path):
    spec = _write(tmp_path, {"experiments": []})
    assert main(["run", str(spec), "--out-dir", str(tmp_path / "out")]) == 0
    text = (tmp_path / "out" / "results.csv").read_text()
    assert text.strip() == ",".join(CSV_COLUMNS)


def test_cone_identity_row(tmp_path):
    spec = _write(tmp_path, {"experiments": EXPERIMENTS[:1]})
    assert main(["run", str(spec), "--out-dir", str(tmp_path / "out")]) == 0
    (row,) = _rows(tmp_path / "out" / "results.csv")
    assert row["id"] == "cone" and float(row["discrepancy"]) < 1e-9


def test_full_spec_records_and_csv(tmp_path):
    spec = _write(tmp_path, {"seed": 3, "experiments": EXPERIMENTS})
    out = tmp_path / "out"
    assert main(["run", str(spec), "--out-dir", str(out)]) == 0
    rows = _rows(out / "results.csv")
    assert [r["id"] for r in rows] == [e["id"] for e in EXPERIMENTS]
    rec = json.loads((out / "kub.json").read_text())
    for key in ("value", "stderr", "route", "timing_seconds", "config"):
        assert key in rec
    assert rec["route"] == "kubota" and rec["config"]["id"] == "kub"


def test_rerun_is_byte_identical_and_jobs_free(tmp_path):
    spec = _write(tmp_path, {"seed": 11, "experiments": EXPERIMENTS[2:3]})
    main(["run", str(spec), "--out-dir", str(tmp_path / "a")])
    main(["run", str(spec), "--out-dir", str(tmp_path / "b"), "--jobs", "4"])
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_float_fields_round_trip(tmp_path):
    spec = _write(tmp_path, {"experiments": EXPERIMENTS[1:2]})
    out = tmp_path / "out"
    main(["run", str(spec), "--out-dir", str(out)])
    (row,) = _rows(out / "results.csv")
    rec = json.loads((out / "direct.json").read_text())
    assert float(row["value"]) == rec["value"]


def test_missing_density_file_exits_2(tmp_path):
    exp = dict(EXPERIMENTS[0], density={"file": "nowhere.json"})
    spec = _write(tmp_path, {"experiments": [exp]})
    assert main(["run", str(spec), "--out-dir", str(tmp_path / "out")]) == 2


def test_density_file_reference(tmp_path):
    _write(tmp_path, {"kind": "piecewise-polynomial", "support_upper": 1.0,
                      "pieces": [{"lo": 0, "hi": 1, "terms": [[1, 0], [-1, 1]]}]}, "zeta.json")
    exp = dict(EXPERIMENTS[0], density={"file": "zeta.json"})
    spec = _write(tmp_path, {"experiments": [exp]})
    assert main(["run", str(spec), "--out-dir", str(tmp_path / "out")]) == 0


def test_missing_spec_and_bad_json_exit_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "absent.json")]) == 2
    bad = _write(tmp_path, '{"experiments": [}', "bad.json")
    assert main(["run", str(bad), "--out-dir", str(tmp_path / "o")]) == 2
    assert "bad.json:1:" in capsys.readouterr().err


@pytest.mark.parametrize("exp", [
    {"id": "x", "operation": "no_such_op"},
    {"id": "x", "operation": "cone_identity", "density": "tent", "n": 2},
    {"id": "x", "operation": "cone_identity", "density": "nope", "j": 1, "n": 2},
    {"id": "x", "operation": "cone_identity", "density": "tent", "j": 3, "n": 2},
    {"operation": "abel", "density": "tent", "t": 0.5},
])
def test_invalid_experiments_exit_2(tmp_path, exp):
    spec = _write(tmp_path, {"experiments": [exp]})
    assert main(["run", str(spec), "--out-dir", str(tmp_path / "out")]) == 2


def test_failed_assertion_exits_1(tmp_path, capsys):
    exp = dict(EXPERIMENTS[3], oracle=0.6)
    spec = _write(tmp_path, {"experiments": [exp, EXPERIMENTS[0]]})
    assert main(["run", str(spec), "--out-dir", str(tmp_path / "out")]) == 1
    assert "a2" in capsys.readouterr().err
    exp = dict(EXPERIMENTS[5], expect=True)
    spec = _write(tmp_path, {"experiments": [exp]})
    assert main(["run", str(spec), "--out-dir", str(tmp_path / "out2")]) == 1


def test_list_corpus_sorted(capsys):
    assert main(["list-corpus"]) == 0
    lines = capsys.readouterr().out.splitlines()
    ids = [ln.split()[1] for ln in lines]
    assert "tent" in ids and "cone_t" in ids
    keys = [tuple(ln.split()[:2]) for ln in lines]
    assert keys == sorted(keys)


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "convval", "list-corpus"],
                         capture_output=True, text=True, check=True)
    assert "tent" in out.stdout


def test_float_format_has_17_digits():
    assert float(cli.fmt(0.1 + 0.2)) == 0.1 + 0.2
    assert cli.fmt(1 / 3) == "0.33333333333333331"


DOCS = __import__("pathlib").Path(__file__).resolve().parents[1] / "docs"


def test_schema_documents_parse_and_list_operations():
    names = {"ExperimentSpec", "ConvexFunction", "Density", "DiscreteMeasure"}
    for name in names:
        json.loads((DOCS / "schemas" / f"{name}.schema.json").read_text())
    spec = json.loads((DOCS / "schemas" / "ExperimentSpec.schema.json").read_text())
    ops = spec["$defs"]["experiment"]["properties"]["operation"]["enum"]
    assert set(ops) == set(cli.OPERATIONS)


def test_shipped_example_spec_runs(tmp_path):
    assert main(["run", str(DOCS / "example_spec.json"), "--out-dir", str(tmp_path)]) == 0
    assert len(_rows(tmp_path / "results.csv")) == 9
