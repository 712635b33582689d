"""Acceptance gate: one test per criterion, each logging a pass/fail line."""

import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from convval import acceptance as acc
from convval import corpus
from convval.transforms import abel2_closed_form, abel_k

SEED = acc.DEFAULT_SEED


def _run(crit, criterion_log, **kw):
    res = crit(seed=SEED, samples=acc.DEFAULT_SAMPLES, jobs=1, **kw)
    criterion_log(res.line())
    return res


def test_criterion_01_abel_closed_form(criterion_log):
    res = _run(acc.criterion_abel_closed_form, criterion_log)
    grid, at0 = res.rows
    assert grid.discrepancy < 1e-6
    assert at0.discrepancy < 1e-8
    # independent oracle: 2 pi int_t^1 (1 - s) s ds = 2 pi (1/6 - t^2/2 + t^3/3)
    t = np.linspace(0.02, 0.98, 50)
    oracle = 2 * math.pi * (1 / 6 - t ** 2 / 2 + t ** 3 / 3)
    assert np.max(np.abs(abel_k(corpus.tent(), 2)(t) - oracle)) < 1e-6
    assert np.max(np.abs(abel2_closed_form(corpus.tent())(t) - oracle)) < 1e-12
    assert res.passed


def test_criterion_02_abel_round_trip(criterion_log):
    res = _run(acc.criterion_abel_round_trip, criterion_log)
    assert len(res.rows) == 3
    assert all(r.discrepancy < 1e-4 for r in res.rows)
    assert res.passed


def test_criterion_03_class_transport(criterion_log):
    res = _run(acc.criterion_class_transport, criterion_log)
    assert len(res.rows) == 6
    assert all(r.value == 1.0 for r in res.rows)
    assert res.passed


def test_criterion_04_dirac(criterion_log):
    res = _run(acc.criterion_dirac, criterion_log)
    assert len(res.rows) == 5
    assert {r.n for r in res.rows} == {1, 2, 3}
    assert all(r.discrepancy <= 1e-12 for r in res.rows)
    assert res.passed


def test_criterion_05_cone_identity(criterion_log):
    res = _run(acc.criterion_cone, criterion_log)
    assert len(res.rows) == 9
    assert all(r.discrepancy < 1e-9 and r.stderr == 0.0 for r in res.rows)
    assert res.passed


def test_criterion_06_cross_route(criterion_log):
    res = _run(acc.criterion_cross_route, criterion_log)
    assert len(res.rows) == 12
    for r in res.rows:
        assert abs(r.value - r.oracle) <= max(3 * r.stderr, 0.02 * abs(r.oracle)), r.id
    assert res.passed


def test_criterion_07_axioms(criterion_log):
    res = _run(acc.criterion_axioms, criterion_log)
    by_kind = {}
    for r in res.rows:
        by_kind.setdefault(r.operation, []).append(r)
    assert len(by_kind["valuation"]) >= 20
    assert len(by_kind["translation"]) >= 10
    assert len(by_kind["rotation"]) >= 10
    assert len(by_kind["simplicity"]) >= 5
    for kind in ("valuation", "translation", "rotation", "homogeneity"):
        assert max(r.discrepancy for r in by_kind[kind]) <= 1e-6, kind
    assert max(r.discrepancy for r in by_kind["simplicity"]) <= 1e-9
    assert res.passed


def test_criterion_08_duality(criterion_log):
    res = _run(acc.criterion_duality, criterion_log)
    assert len(res.rows) == 3 * 5
    assert all(r.discrepancy < 1e-4 for r in res.rows)
    assert res.passed


def test_criterion_09_product(criterion_log):
    res = _run(acc.criterion_product, criterion_log)
    assert len(res.rows) == 4
    assert {r.n for r in res.rows} == {2, 3}
    assert all(r.discrepancy < 0.01 for r in res.rows)
    assert res.passed


def test_criterion_10_extension(criterion_log):
    res = _run(acc.criterion_extension, criterion_log)
    assert len(res.rows) == 3
    assert all(r.discrepancy < 0.01 for r in res.rows)
    assert res.passed


@pytest.fixture(scope="session")
def check_runs(tmp_path_factory):
    out = {}
    for jobs in (1, 8):
        d = tmp_path_factory.mktemp(f"check_jobs{jobs}")
        proc = subprocess.run([sys.executable, "-m", "convval", "check", "--seed", str(SEED),
                               "--jobs", str(jobs), "--out-dir", str(d)],
                              capture_output=True, text=True)
        out[jobs] = (proc, (d / "check.csv").read_bytes())
    return out


def test_criterion_11_determinism(check_runs, criterion_log):
    (p1, a), (p8, b) = check_runs[1], check_runs[8]
    rows = list(csv.DictReader(io.StringIO(a.decode())))
    same = a == b
    criterion_log(f"[{'PASS' if same else 'FAIL'}] criterion 11 determinism: check.csv "
                  f"with --jobs 1 and --jobs 8 {'byte-identical' if same else 'differ'} "
                  f"({len(rows)} rows)")
    assert p1.returncode == 0, p1.stdout + p1.stderr
    assert p8.returncode == 0, p8.stdout + p8.stderr
    assert len(rows) > 0
    assert same
