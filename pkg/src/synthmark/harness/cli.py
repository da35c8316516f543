"""Command line: ``synthmark synthesize|measure|compare``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from ..data import SchemaError, load_csv, load_schema
from ..metrics.improvement import format_if
from ..metrics.inconsistency import load_rules
from ..microdata import SynthesisPlan, run_plan
from ..noise import AnonParams
from ..store import MANIFEST, MissingTableError, SingleTableSource, SynTableStore, write_json
from .report import ALL_METRICS, MeasureConfig, compare_reports, load_report, report_json, run_measures

EXIT_OK, EXIT_VALIDATION, EXIT_MISSING = 0, 2, 3

log = logging.getLogger("synthmark")


def default_salt(data_digest: str, seed: int) -> bytes:
    return hashlib.sha256(f"{data_digest}:{seed}".encode()).digest()[:16]


def cmd_synthesize(args) -> int:
    schema = load_schema(args.schema)
    ds = load_csv(args.input, schema)
    plan = SynthesisPlan.load(args.plan, ds.columns)
    salt = bytes.fromhex(args.salt_hex) if args.salt_hex else default_salt(ds.digest(), args.seed)
    params = AnonParams(args.avg_thresh, args.abs_thresh, args.noise_sd, salt)
    out = Path(args.out)
    manifest_path = out / MANIFEST
    if manifest_path.exists() and not args.force:
        m = json.loads(manifest_path.read_text(encoding="utf-8"))
        same = (m.get("complete") and m.get("params_hash") == params.fingerprint()
                and m.get("salt_fingerprint") == params.salt_fingerprint()
                and m.get("data_digest") == ds.digest()[:16]
                and m.get("plan_digest") == plan.digest()
                and m.get("max_tree_dim") == args.max_tree_dim)
        if same:
            print(f"up-to-date: {out} ({len(m['tables'])} tables)")
            return EXIT_OK
    t0 = time.perf_counter()
    store = run_plan(ds, plan, params, out, args.max_tree_dim)
    wall = time.perf_counter() - t0
    for key, secs in sorted(store.timings.items()):
        print(f"  {key}: {secs:.3f}s")
    print(f"synthesized {len(store)} tables into {out} in {wall:.2f}s")
    return EXIT_OK


def _measure_config(args, columns) -> MeasureConfig:
    obj = json.loads(Path(args.config).read_text(encoding="utf-8")) if args.config else {}
    if args.metrics:
        obj["metrics"] = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if args.seed is not None:
        obj["seed"] = args.seed
    if args.no_sampling:
        obj["sampling"] = False
    cfg = MeasureConfig.from_json(obj)
    if args.rules:
        cfg.rules = load_rules(args.rules)
    if args.attack:
        cfg.attack = json.loads(Path(args.attack).read_text(encoding="utf-8"))
    return cfg


def cmd_measure(args) -> int:
    schema = load_schema(args.schema)
    orig = load_csv(args.original, schema)
    if (args.store is None) == (args.table is None):
        raise ValueError("give exactly one of --store or --table")
    if args.store:
        source = SynTableStore(args.store, policy=args.policy, reference=orig)
        if not source.manifest.get("complete", True):
            raise ValueError(f"store {args.store} is incomplete")
        name = args.name or Path(args.store).name
    else:
        source = SingleTableSource(load_csv(args.table, schema, encoding=orig.encoding))
        name = args.name or Path(args.table).stem
    cfg = _measure_config(args, orig.columns)
    report = run_measures(orig, source, cfg, technique=name)
    text = report_json(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    for k, v in sorted(report["summary"].items()):
        print(f"  {k}: {v}", file=sys.stderr)
    return EXIT_OK


def cmd_compare(args) -> int:
    reports = [load_report(p) for p in args.reports]
    comparison, rows, warnings = compare_reports(reports, args.reference)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    out = Path(args.out)
    write_json(out, json.loads(report_json(comparison)))
    plot = Path(args.plot_csv) if args.plot_csv else out.with_suffix(".csv")
    with open(plot, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["measure", "technique", "value", "improvement_factor"])
        for r in rows:
            w.writerow([r["measure"], r["technique"], repr(r["value"]), format_if(r["improvement_factor"])])
    for measure, techs in comparison["measures"].items():
        cells = ", ".join(f"{t}={format_if(v['improvement_factor'])}" for t, v in techs.items())
        print(f"{measure}: {cells}")
    print(f"wrote {out} and {plot}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="synthmark", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", help="build a multi-table synthetic store")
    s.add_argument("input")
    s.add_argument("schema")
    s.add_argument("plan")
    s.add_argument("--out", required=True, help="store directory")
    s.add_argument("--avg-thresh", type=float, default=5.0)
    s.add_argument("--abs-thresh", type=int, default=3)
    s.add_argument("--noise-sd", type=float, default=1.4)
    s.add_argument("--salt-hex", default=None, help="secret salt; default derives from the data and --seed")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-tree-dim", type=int, default=4)
    s.add_argument("--force", action="store_true", help="rebuild even if the store is up to date")
    s.set_defaults(func=cmd_synthesize)

    m = sub.add_parser("measure", help="score a store or a single table against the original")
    m.add_argument("original")
    m.add_argument("schema")
    m.add_argument("--store")
    m.add_argument("--table")
    m.add_argument("--policy", default="exact", choices=["exact", "project", "project_from_superset"])
    m.add_argument("--metrics", help=f"comma list from {','.join(ALL_METRICS)}")
    m.add_argument("--config", help="measure config JSON")
    m.add_argument("--rules", help="inconsistency rules JSON")
    m.add_argument("--attack", help="attack config JSON")
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--no-sampling", action="store_true", help="skip the sampling-equivalence curve")
    m.add_argument("--name", help="technique name (default: store or table name)")
    m.add_argument("--out")
    m.set_defaults(func=cmd_measure)

    c = sub.add_parser("compare", help="improvement factors of a reference technique")
    c.add_argument("reports", nargs="+")
    c.add_argument("--reference", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--plot-csv")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MissingTableError as exc:
        print(f"error: missing table {exc.key}", file=sys.stderr)
        return EXIT_MISSING
    except (SchemaError, ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
