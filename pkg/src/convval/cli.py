"""Command line batch runner.

``convval run spec.json``
    run the experiments of a spec file, one JSON result per experiment plus
    an aggregate ``results.csv``;
``convval list-corpus``
    list the built-in densities and function families;
``convval check``
    run the acceptance suite and write ``check.csv``.

Exit status: 0 when every assertion passes, 1 on a numeric failure, 2 when
the experiment file cannot be parsed or references something that does not exist.
"""

import argparse
import csv
import io
import json
import math
import os
from pathlib import Path
import sys
import tempfile
import time

import numpy as np

from . import __version__, corpus
from .acceptance import DEFAULT_SEED, DEFAULT_SAMPLES, run_all
from .convexfn import ConeBall, from_dict as function_from_dict
from .densities import check_hadwiger_class, density_from_dict, zeta_to_alpha
from .errors import ConvvalError
from .measures import (conjugate_transport, hessian_measure_smooth, integrate_density,
                       lower_dim_extension_check, monge_ampere_pl,
                       product_decomposition_check)
from .transforms import abel, abel2_closed_form, abel_k, inverse_abel
from .valuations import (KubotaConfig, cone_alpha_identity, fiv_direct, fiv_kubota,
                         fiv_measure, kubota_prefactor)

CSV_COLUMNS = ("id", "operation", "j", "n", "value", "stderr", "oracle", "discrepancy")


class SpecError(Exception):
    """The experiment file is malformed; carries a JSON-path style location."""

    def __init__(self, where, message):
        super().__init__(f"{where}: {message}")
        self.where = where


def fmt(x):
    """17 significant digits, empty for missing values."""
    if x is None or x == "":
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def csv_text(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r["id"], r["operation"], fmt(r.get("j")), fmt(r.get("n")),
                    fmt(r.get("value")), fmt(r.get("stderr")), fmt(r.get("oracle")),
                    fmt(r.get("discrepancy"))])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    return str(o)


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n"


# --------------------------------------------------------------------------
# descriptors
# --------------------------------------------------------------------------

def _load_ref(desc, where, base_dir):
    if isinstance(desc, dict) and "file" in desc:
        path = Path(desc["file"])
        if not path.is_absolute():
            path = base_dir / path
        try:
            return json.loads(path.read_text())
        except FileNotFoundError:
            raise SpecError(where, f"file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise SpecError(where, f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    return desc


def parse_density(desc, where, base_dir):
    desc = _load_ref(desc, where, base_dir)
    try:
        if isinstance(desc, str):
            return corpus.density(desc)
        if isinstance(desc, dict) and "corpus" in desc:
            return corpus.density(desc["corpus"])
        if isinstance(desc, dict):
            return density_from_dict(desc)
    except (KeyError, ValueError, TypeError) as e:
        raise SpecError(where, str(e)) from None
    raise SpecError(where, "density must be a corpus id or a density object")


def parse_function(desc, where, base_dir, n=None):
    desc = _load_ref(desc, where, base_dir)
    try:
        if isinstance(desc, str):
            if n is None:
                raise SpecError(where, "corpus functions need 'n'")
            return corpus.family(desc, n)
        if isinstance(desc, dict) and "corpus" in desc:
            dim = desc.get("n", n)
            if dim is None:
                raise SpecError(where, "corpus functions need 'n'")
            return corpus.family(desc["corpus"], dim, **desc.get("params", {}))
        if isinstance(desc, dict) and "tag" in desc:
            return function_from_dict(desc)
    except SpecError:
        raise
    except (KeyError, ValueError, TypeError, ConvvalError) as e:
        raise SpecError(where, str(e)) from None
    raise SpecError(where, "function must be a corpus reference or a function object")


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def _need(exp, key, where):
    if key not in exp:
        raise SpecError(f"{where}.{key}", "missing")
    return exp[key]


def _assertion(value, oracle, tol, relative=True):
    if oracle is None:
        return None, None
    gap = abs(value - oracle)
    disc = gap / abs(oracle) if relative and oracle != 0 else gap
    return disc, (None if tol is None else bool(disc <= tol))


def op_valuation(exp, ctx):
    u, z, j = ctx["function"], ctx["density"], ctx["j"]
    route = exp["operation"]
    if route == "fiv_direct":
        rep = fiv_direct(u, j, z)
    elif route == "fiv_measure":
        rep = fiv_measure(u, j, z)
    else:
        cfg = KubotaConfig(j, u.n, exp.get("sample_count", ctx["samples"]),
                           exp.get("seed", ctx["seed"]), jobs=ctx["jobs"])
        rep = fiv_kubota(u, j, z, cfg)
    oracle = exp.get("oracle")
    disc, ok = _assertion(rep.value, oracle, exp.get("tolerance"))
    if ok is False and route == "fiv_kubota" and oracle is not None:
        ok = abs(rep.value - oracle) <= 3 * rep.stderr
    return {"value": rep.value, "stderr": rep.stderr, "route": rep.route, "oracle": oracle,
            "discrepancy": disc, "passed": ok, "n": u.n, "j": j, "metadata": rep.metadata}


def op_cone_identity(exp, ctx):
    n, j, z = ctx["n"], ctx["j"], ctx["density"]
    t = float(exp.get("t", 0.5))
    cfg = KubotaConfig(j, n, exp.get("sample_count", min(ctx["samples"], 1000)),
                       exp.get("seed", ctx["seed"]), jobs=ctx["jobs"])
    rep = fiv_kubota(ConeBall(t, 1.0, n=n), j, z, cfg)
    oracle = kubota_prefactor(j, n) * cone_alpha_identity(t, j, zeta_to_alpha(z, j, n))
    disc = abs(rep.value - oracle) / abs(oracle) if oracle else abs(rep.value)
    tol = exp.get("tolerance", 1e-9)
    return {"value": rep.value, "stderr": rep.stderr, "route": "kubota", "oracle": oracle,
            "discrepancy": disc, "passed": bool(disc <= tol and rep.stderr == 0.0),
            "n": n, "j": j}


def op_class(exp, ctx):
    rep = check_hadwiger_class(ctx["density"], ctx["j"], ctx["n"])
    expect = exp.get("expect")
    ok = None if expect is None else bool(rep.member == bool(expect))
    return {"value": float(rep.member), "oracle": None if expect is None else float(bool(expect)),
            "discrepancy": None if expect is None else float(not ok), "passed": ok,
            "n": ctx["n"], "j": ctx["j"],
            "metadata": {"moment_limit": rep.limit_moment_zero,
                         "tail_integral_limit": rep.tail_integral_limit}}


_TRANSFORMS = {"abel": lambda z, e: abel(z),
               "abel_k": lambda z, e: abel_k(z, int(e.get("k", 2))),
               "abel2_closed_form": lambda z, e: abel2_closed_form(z),
               "inverse_abel": lambda z, e: inverse_abel(z)}


def op_transform(exp, ctx, where):
    t = float(_need(exp, "t", where))
    out = _TRANSFORMS[exp["operation"]](ctx["density"], exp)
    value = float(out(np.array([t]))[0]) if t > 0 else float(out.value_at_zero)
    disc, ok = _assertion(value, exp.get("oracle"), exp.get("tolerance"), relative=False)
    return {"value": value, "oracle": exp.get("oracle"), "discrepancy": disc, "passed": ok}


def op_record(exp, ctx, where):
    op = exp["operation"]
    if op == "conjugate_transport":
        rec = conjugate_transport(ctx["function"], ctx["j"], **_tol(exp))
    elif op == "lower_dim_extension_check":
        rec = lower_dim_extension_check(ctx["function"], ctx["j"], ctx["density"], **_tol(exp))
    else:
        base = ctx["base_dir"]
        vE = parse_function(_need(exp, "vE", where), f"{where}.vE", base)
        vF = parse_function(_need(exp, "vF", where), f"{where}.vF", base)
        B = _need(exp, "box", where)
        rec = product_decomposition_check(vE, vF, int(_need(exp, "l", where)),
                                          (np.asarray(B[0], float), np.asarray(B[1], float)),
                                          **_tol(exp))
    return {"value": rec.lhs[0] if len(rec.lhs) == 1 else max(rec.lhs), "oracle":
            rec.rhs[0] if len(rec.rhs) == 1 else max(rec.rhs), "discrepancy": rec.discrepancy,
            "passed": rec.passed, "record": rec.to_dict()}


def _tol(exp):
    return {"tolerance": exp["tolerance"]} if "tolerance" in exp else {}


def op_monge_ampere(exp, ctx, where):
    B = _need(exp, "region", where)
    mu = monge_ampere_pl(ctx["function"], (np.asarray(B[0], float), np.asarray(B[1], float)))
    oracle = exp.get("oracle")
    disc, ok = _assertion(mu.total_mass, oracle, exp.get("tolerance"), relative=False)
    if mu.meta.get("incomplete") and ok:
        ok = False
    return {"value": mu.total_mass, "oracle": oracle, "discrepancy": disc, "passed": ok,
            "n": mu.n, "measure": mu.to_dict()}


def op_integrate_measure(exp, ctx):
    u, j, z = ctx["function"], ctx["j"], ctx["density"]
    mu = hessian_measure_smooth(u, j, gradient_radius=exp.get("gradient_radius", 2.0))
    value = integrate_density(mu, z)
    disc, ok = _assertion(value, exp.get("oracle"), exp.get("tolerance"))
    return {"value": value, "oracle": exp.get("oracle"), "discrepancy": disc, "passed": ok,
            "n": u.n, "j": j, "particles": len(mu)}


OPERATIONS = ("abel", "abel2_closed_form", "abel_k", "check_hadwiger_class", "cone_identity",
              "conjugate_transport", "fiv_direct", "fiv_kubota", "fiv_measure",
              "integrate_measure", "inverse_abel", "lower_dim_extension_check",
              "monge_ampere_pl", "product_decomposition_check")

NEEDS = {"fiv_direct": ("function", "density", "j"), "fiv_kubota": ("function", "density", "j"),
         "fiv_measure": ("function", "density", "j"), "cone_identity": ("density", "j", "n"),
         "check_hadwiger_class": ("density", "j", "n"), "abel": ("density",),
         "abel_k": ("density",), "abel2_closed_form": ("density",), "inverse_abel": ("density",),
         "conjugate_transport": ("function", "j"),
         "lower_dim_extension_check": ("function", "density", "j"),
         "product_decomposition_check": (), "monge_ampere_pl": ("function",),
         "integrate_measure": ("function", "density", "j")}


def prepare(exp, where, base_dir, defaults):
    """Validate one experiment and resolve its descriptors (raises SpecError)."""
    if not isinstance(exp, dict):
        raise SpecError(where, "experiment must be an object")
    eid = _need(exp, "id", where)
    if not isinstance(eid, str) or not eid or "/" in eid:
        raise SpecError(f"{where}.id", "must be a non-empty string without '/'")
    op = _need(exp, "operation", where)
    if op not in OPERATIONS:
        raise SpecError(f"{where}.operation", f"unknown operation {op!r}")
    ctx = dict(defaults, base_dir=base_dir)
    for key in NEEDS[op]:
        _need(exp, key, where)
    for key in ("j", "n"):
        if key in exp:
            if not isinstance(exp[key], int) or isinstance(exp[key], bool) or exp[key] < 0:
                raise SpecError(f"{where}.{key}", "must be a non-negative integer")
            ctx[key] = exp[key]
    if "n" in ctx and not 1 <= ctx["n"] <= 4:
        raise SpecError(f"{where}.n", "must lie in 1..4")
    if "density" in exp:
        ctx["density"] = parse_density(exp["density"], f"{where}.density", base_dir)
    if "function" in exp:
        ctx["function"] = parse_function(exp["function"], f"{where}.function", base_dir,
                                         exp.get("n"))
        ctx.setdefault("n", ctx["function"].n)
    if "j" in ctx and "n" in ctx and ctx["j"] > ctx["n"]:
        raise SpecError(f"{where}.j", "must not exceed n")
    return ctx


def execute(exp, ctx, where):
    op = exp["operation"]
    if op in ("fiv_direct", "fiv_kubota", "fiv_measure"):
        return op_valuation(exp, ctx)
    if op == "cone_identity":
        return op_cone_identity(exp, ctx)
    if op == "check_hadwiger_class":
        return op_class(exp, ctx)
    if op in _TRANSFORMS:
        return op_transform(exp, ctx, where)
    if op == "monge_ampere_pl":
        return op_monge_ampere(exp, ctx, where)
    if op == "integrate_measure":
        return op_integrate_measure(exp, ctx)
    return op_record(exp, ctx, where)


def load_spec(path):
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
    except FileNotFoundError:
        raise SpecError(str(path), "spec file not found") from None
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}:{e.lineno}:{e.colno}", e.msg) from None
    if isinstance(spec, list):
        spec = {"experiments": spec}
    if not isinstance(spec, dict) or not isinstance(spec.get("experiments"), list):
        raise SpecError("$.experiments", "must be a list")
    return spec


def run_spec(path, out_dir, seed=None, samples=None, jobs=1, log=print):
    """Run a spec file; returns the exit status."""
    try:
        spec = load_spec(path)
        seed = spec.get("seed", DEFAULT_SEED) if seed is None else seed
        samples = spec.get("sample_count", DEFAULT_SAMPLES) if samples is None else samples
        defaults = {"seed": seed, "samples": samples, "jobs": jobs}
        base_dir = Path(path).resolve().parent
        prepared = []
        seen = set()
        for i, exp in enumerate(spec["experiments"]):
            where = f"$.experiments[{i}]"
            ctx = prepare(exp, where, base_dir, defaults)
            if exp["id"] in seen:
                raise SpecError(f"{where}.id", f"duplicate id {exp['id']!r}")
            seen.add(exp["id"])
            prepared.append((exp, ctx, where))
    except SpecError as e:
        log(f"parse error: {e}", file=sys.stderr)
        return 2
    out_dir = Path(spec.get("output", out_dir) if out_dir is None else out_dir)
    rows, failed = [], []
    for exp, ctx, where in prepared:
        t0 = time.perf_counter()
        try:
            res = execute(exp, ctx, where)
        except SpecError as e:
            log(f"parse error: {e}", file=sys.stderr)
            return 2
        except (ConvvalError, ValueError, ArithmeticError) as e:
            res = {"value": math.nan, "error": f"{type(e).__name__}: {e}", "passed": False}
        res["timing_seconds"] = time.perf_counter() - t0
        res.setdefault("j", ctx.get("j"))
        res.setdefault("n", ctx.get("n"))
        res.update({"id": exp["id"], "operation": exp["operation"], "config": exp,
                    "seed": ctx["seed"]})
        write_atomic(out_dir / f"{exp['id']}.json", dumps(res))
        rows.append(res)
        if res.get("passed") is False:
            failed.append(exp["id"])
    write_atomic(out_dir / "results.csv", csv_text(rows))
    for eid in failed:
        log(f"FAILED: {eid}", file=sys.stderr)
    return 1 if failed else 0


def run_check(out_dir, seed, samples, jobs, log=print):
    rows = []

    def report(res):
        log(res.line(), flush=True)
        for r in res.rows:
            rows.append(dict(vars(r)))
        write_atomic(Path(out_dir) / f"criterion_{res.number:02d}.json",
                     dumps({"number": res.number, "name": res.name, "passed": res.passed,
                            "detail": res.detail, "seconds": res.seconds,
                            "rows": [vars(r) for r in res.rows]}))

    results = run_all(seed=seed, samples=samples, jobs=jobs, report=report)
    write_atomic(Path(out_dir) / "check.csv", csv_text(rows))
    return 0 if all(r.passed for r in results) else 1


def list_corpus(out=None):
    out = out or sys.stdout
    for kind, name, desc in corpus.listing():
        print(f"{kind:<9} {name:<14} {desc}", file=out)


def build_parser():
    p = argparse.ArgumentParser(prog="convval", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (default: spec or built-in)")
        sp.add_argument("--samples", type=int, default=None, help="Grassmannian sample count")
        sp.add_argument("--out-dir", default=None, help="directory for JSON and CSV output")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads (never changes results)")

    r = sub.add_parser("run", help="run the experiments of a JSON spec file")
    r.add_argument("spec_file")
    common(r)
    sub.add_parser("list-corpus", help="list built-in densities and function families")
    c = sub.add_parser("check", help="run the acceptance suite")
    common(c)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list-corpus":
        list_corpus()
        return 0
    if args.jobs < 1 or (args.samples is not None and args.samples < 1):
        print("parse error: --jobs and --samples must be >= 1", file=sys.stderr)
        return 2
    if args.command == "run":
        return run_spec(args.spec_file, args.out_dir, args.seed, args.samples, args.jobs)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    samples = DEFAULT_SAMPLES if args.samples is None else args.samples
    return run_check(args.out_dir or "check_results", seed, samples, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
