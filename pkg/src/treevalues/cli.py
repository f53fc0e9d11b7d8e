"""Command-line interface: explain, verify, bench, compare, hypercube, synth.

Exit codes: 0 success, 1 parse/validation failure, 2 dimension mismatch,
3 brute-force cap exceeded.  All file outputs are deterministic for a given
input and configuration (floats are written with 17 significant digits).
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import analysis, pathdep
from .analysis import ATTRIBUTION_HEADER, AttributionTable, HypercubeFunction
from .model import (
    Attribution,
    DimensionMismatchError,
    ModelFormatError,
    TreeEnsemble,
    dump_dataset,
    dump_model,
    load_dataset,
    load_model_file,
    predict,
)
from .pathdep import OracleCapError, oracle_values
from .synth import EXPLAINERS, SyntheticSpec, gen_synthetic, random_ensemble, random_point

EXIT_OK, EXIT_FAIL, EXIT_DIM, EXIT_CAP = 0, 1, 2, 3

REL_TOL = 1e-9

# verify defaults when no --model is given (seeded random ensemble)
VERIFY_TREES, VERIFY_LEAVES, VERIFY_FEATURES, VERIFY_POINTS = 3, 16, 8, 10


def _g17(v) -> str:
    return "%.17g" % float(v)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; keep all validation at 1
    def error(self, message):
        self.exit(EXIT_FAIL, f"{self.prog}: error: {message}\n")


def _method_list(spec: str, allowed) -> list[str]:
    methods = [m.strip() for m in spec.split(",") if m.strip()]
    if not methods:
        raise ValueError("no method given")
    for m in methods:
        if m not in allowed:
            raise ValueError(f"unknown method {m!r}; choose from {sorted(allowed)}")
    return methods


def _explain_one(m: TreeEnsemble, x, method: str, exact: bool) -> Attribution:
    if method in EXPLAINERS:
        att, _ = EXPLAINERS[method](m, x, exact=exact)
        return att
    scheme = "shapley" if method == "oracle_shapley" else "banzhaf"
    return oracle_values(m, x, scheme, exact=exact)


def _write_text(path, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# explain
# ---------------------------------------------------------------------------

def cmd_explain(args) -> int:
    m = load_model_file(args.model)
    rows = load_dataset(args.data)
    if rows and len(rows[0]) != m.num_features:
        raise DimensionMismatchError(
            f"dataset has {len(rows[0])} features, model expects {m.num_features}")
    methods = _method_list(args.method,
                           set(EXPLAINERS) | {"oracle_shapley", "oracle_banzhaf"})
    if len(methods) != 1:
        raise ValueError("explain takes exactly one --method")
    method = methods[0]
    exact = args.mode == "rational"
    if args.threads < 1:
        raise ValueError("--threads must be >= 1")

    def run(x):
        return _explain_one(m, x, method, exact)

    if args.threads == 1:
        atts = [run(x) for x in rows]
    else:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            atts = list(pool.map(run, rows))

    n = m.num_features
    lines = [ATTRIBUTION_HEADER + "," + ",".join(f"phi_{i}" for i in range(n))]
    for r, att in enumerate(atts):
        cells = [str(r), _g17(att.expected_value)]
        cells += [_g17(v) for v in att.values]
        lines.append(",".join(cells))
    _write_text(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    rng = random.Random(args.seed)
    if args.model:
        m = load_model_file(args.model)
        source = args.model
    else:
        m = random_ensemble(rng, num_trees=VERIFY_TREES,
                            num_features=VERIFY_FEATURES,
                            max_leaves=VERIFY_LEAVES)
        source = (f"random(seed={args.seed}, trees={VERIFY_TREES}, "
                  f"max_leaves={VERIFY_LEAVES}, features={VERIFY_FEATURES})")
    if args.data:
        points = load_dataset(args.data)
        if points and len(points[0]) != m.num_features:
            raise DimensionMismatchError(
                f"dataset has {len(points[0])} features, model expects "
                f"{m.num_features}")
    else:
        points = [random_point(rng, m.num_features) for _ in range(VERIFY_POINTS)]

    exact_algos = args.mode == "rational"
    exact_oracle = m.has_integer_coverages()
    relevant = pathdep.relevant_features(m)
    dead = sorted(set(range(m.num_features)) - set(relevant))

    method_dev = {name: 0.0 for name in EXPLAINERS}
    eff_residual = 0.0
    ban_gap = 0.0
    sens_max = 0.0
    for x in points:
        oracle_sh = oracle_values(m, x, "shapley", exact=exact_oracle)
        oracle_bz = oracle_values(m, x, "banzhaf", exact=exact_oracle)
        pred = predict(m, x)
        ev = float(oracle_sh.expected_value)
        for name, fn in EXPLAINERS.items():
            att, _ = fn(m, x, exact=exact_algos)
            ref = oracle_sh if name.startswith("shapley") else oracle_bz
            for i in range(m.num_features):
                got, want = float(att.values[i]), float(ref.values[i])
                method_dev[name] = max(method_dev[name],
                                       abs(got - want) / max(1.0, abs(want)))
            if name.startswith("shapley"):
                eff_residual = max(eff_residual,
                                   abs(float(att.total) - (pred - ev)))
            for i in dead:
                sens_max = max(sens_max, abs(float(att.values[i])))
        ban_gap = max(ban_gap,
                      abs(float(oracle_bz.total) - (pred - ev)))

    methods_report = {
        name: {"max_rel_err": dev, "pass": dev <= REL_TOL}
        for name, dev in method_dev.items()
    }
    report = {
        "model": source,
        "mode": args.mode,
        "oracle_mode": "rational" if exact_oracle else "float64",
        "points": len(points),
        "relevant_features": relevant,
        "methods": methods_report,
        "shapley_efficiency": {"max_abs_residual": eff_residual,
                               "pass": eff_residual <= REL_TOL},
        "banzhaf_efficiency": {"max_abs_gap": ban_gap,
                               "violated": ban_gap > REL_TOL},
        "sensitivity": {"max_abs_on_unused": sens_max,
                        "pass": sens_max == 0.0},
        "pass": (all(r["pass"] for r in methods_report.values())
                 and eff_residual <= REL_TOL and sens_max == 0.0),
    }
    _write_text(args.output, json.dumps(report, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _bench_cases(args):
    if args.synth:
        if not args.depths:
            raise ValueError("--synth requires --depths")
        for d in args.depths:
            m, x, _ = gen_synthetic(SyntheticSpec(args.synth, d))
            yield d, m, x
    elif args.model:
        m = load_model_file(args.model)
        if args.data:
            rows = load_dataset(args.data)
            if not rows:
                raise ValueError("empty dataset")
            if len(rows[0]) != m.num_features:
                raise DimensionMismatchError(
                    f"dataset has {len(rows[0])} features, model expects "
                    f"{m.num_features}")
            x = rows[0]
        else:
            x = [0.0] * m.num_features
        yield m.max_depth, m, x
    else:
        raise ValueError("bench needs --model or --synth")


def cmd_bench(args) -> int:
    if args.repeats < 1:
        raise ValueError("--repeats must be >= 1")
    methods = _method_list(args.method, set(EXPLAINERS))
    lines = ["method,depth,L,wall_ns,add_ops,del_ops,scale_ops"]
    for depth, m, x in _bench_cases(args):
        for name in methods:
            fn = EXPLAINERS[name]
            best = None
            counter = None
            for _ in range(args.repeats):
                t0 = time.perf_counter_ns()
                _, counter = fn(m, x)
                dt = time.perf_counter_ns() - t0
                best = dt if best is None else min(best, dt)
            lines.append(f"{name},{depth},{m.max_leaves},{best},"
                         f"{counter.add_count},{counter.del_count},"
                         f"{counter.scale_count}")
    _write_text(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def _read_table(path) -> AttributionTable:
    with open(path, "r", encoding="utf-8") as fh:
        return AttributionTable.from_csv(fh.read(), method=str(path))


def cmd_compare(args) -> int:
    a = _read_table(args.table_a)
    b = _read_table(args.table_b)
    if a.values.shape != b.values.shape:
        raise DimensionMismatchError(
            f"tables differ in shape: {a.values.shape} vs {b.values.shape}")
    mae, rmse = analysis.error_metrics(a, b)
    imp_a = analysis.global_impact(a)
    imp_b = analysis.global_impact(b)
    top_ns = [t for t in args.top_n if t <= a.num_features]
    cayley = {str(t): analysis.average_modified_cayley(a, b, t) for t in top_ns}
    report = {
        "table_a": str(args.table_a),
        "table_b": str(args.table_b),
        "rows": a.num_rows,
        "num_features": a.num_features,
        "global_impact_a": [float(v) for v in imp_a],
        "global_impact_b": [float(v) for v in imp_b],
        "mae": [float(v) for v in mae],
        "rmse": [float(v) for v in rmse],
        "average_modified_cayley": cayley,
    }
    _write_text(args.output, json.dumps(report, indent=2) + "\n")
    if args.output:
        base = str(args.output)
        if base.endswith(".json"):
            base = base[:-5]
        csv_lines = ["feature,mae,rmse,impact_a,impact_b"]
        for i in range(a.num_features):
            csv_lines.append(f"f{i},{_g17(mae[i])},{_g17(rmse[i])},"
                             f"{_g17(imp_a[i])},{_g17(imp_b[i])}")
        with open(base + ".metrics.csv", "w", encoding="utf-8") as fh:
            fh.write("\n".join(csv_lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# hypercube
# ---------------------------------------------------------------------------

def cmd_hypercube(args) -> int:
    with open(args.function, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "k" not in doc or "table" not in doc:
        raise ValueError("function file must be JSON with keys 'k' and 'table'")
    f = HypercubeFunction(k=doc["k"], table=doc["table"])
    schemes = _method_list(args.schemes, {"shapley", "banzhaf"})
    impacts = analysis.hypercube_impacts_multi(f, schemes)
    max_dev = 0.0
    for i in range(len(schemes)):
        for j in range(i + 1, len(schemes)):
            max_dev = max(max_dev, float(abs(impacts[i] - impacts[j]).max()))
    mono = analysis.is_monotone(f)
    report = {
        "k": f.k,
        "monotone": mono,
        "all_monotone": all(mono),
        "impacts": {s: [float(v) for v in imp]
                    for s, imp in zip(schemes, impacts)},
        "max_cross_scheme_deviation": max_dev,
    }
    _write_text(args.output, json.dumps(report, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = SyntheticSpec(args.kind, args.d)
    m, x, exact = gen_synthetic(spec)
    prefix = args.output or f"synthetic_{args.kind}_{args.d}"
    with open(f"{prefix}.model.json", "w", encoding="utf-8") as fh:
        fh.write(dump_model(m) + "\n")
    with open(f"{prefix}.data.csv", "w", encoding="utf-8") as fh:
        fh.write(dump_dataset([x], m.num_features))
    doc = {
        "expected_value": str(exact.expected_value),
        "values": {f"f{i}": str(v) for i, v in enumerate(exact.values)},
    }
    with open(f"{prefix}.exact.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")
    sys.stdout.write(f"wrote {prefix}.model.json, {prefix}.data.csv, "
                     f"{prefix}.exact.json\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="treevalues",
                description="Shapley and Banzhaf attributions for tree ensembles")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("explain", cmd_explain, "attribution CSV for a dataset")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--method", default="shapley_fast")
    sp.add_argument("--mode", choices=("float64", "rational"), default="float64")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--output")

    sp = add("verify", cmd_verify, "check all methods against the brute-force oracle")
    sp.add_argument("--model")
    sp.add_argument("--data")
    sp.add_argument("--mode", choices=("float64", "rational"), default="float64")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--output")

    sp = add("bench", cmd_bench, "wall time and operation counts")
    sp.add_argument("--model")
    sp.add_argument("--data")
    sp.add_argument("--synth", choices=("dense", "sparse"))
    sp.add_argument("--depths", type=_int_list)
    sp.add_argument("--method",
                    default="shapley_basic,shapley_fast,banzhaf_basic,banzhaf_fast")
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--output")

    sp = add("compare", cmd_compare, "metrics between two attribution CSVs")
    sp.add_argument("table_a")
    sp.add_argument("table_b")
    sp.add_argument("--top-n", dest="top_n", type=_int_list, default=[3, 10, 20])
    sp.add_argument("--output")

    sp = add("hypercube", cmd_hypercube,
             "impact equality check for functions on the binary hypercube")
    sp.add_argument("--function", required=True)
    sp.add_argument("--schemes", default="shapley,banzhaf")
    sp.add_argument("--output")

    sp = add("synth", cmd_synth, "generate a synthetic instance with exact answers")
    sp.add_argument("--kind", choices=("dense", "sparse"), required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--output", help="output file prefix")

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DimensionMismatchError as e:
        print(f"treevalues: dimension mismatch: {e}", file=sys.stderr)
        return EXIT_DIM
    except OracleCapError as e:
        print(f"treevalues: {e}", file=sys.stderr)
        return EXIT_CAP
    except (ModelFormatError, FileNotFoundError, IsADirectoryError,
            ValueError, OSError) as e:
        print(f"treevalues: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
