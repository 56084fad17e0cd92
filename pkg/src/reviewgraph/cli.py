"""Command-line entry point: ``reviewgraph score|query|bench|agree``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import agreement, bench
from .query import QuerySyntaxError, evaluate, explain, parse_query
from .rag import provider_from_config
from .rms import Thresholds, rms_scores
from .tableio import TableFormatError, load_store, parse_result_table, result_to_csv, result_to_markdown


def _read_table(path: str):
    return parse_result_table(Path(path).read_text(encoding="utf-8"))


def cmd_score(args) -> int:
    pred, gold = _read_table(args.pred), _read_table(args.gold)
    s = rms_scores(pred, gold, Thresholds(args.tau, args.theta), args.key_column or None)
    if args.percent:
        p, r, f = s.percent()
        print(f"precision {p:.1f}  recall {r:.1f}  f1 {f:.1f}  ({s.orientation})")
    else:
        print(f"precision {s.precision:.4f}  recall {s.recall:.4f}  f1 {s.f1:.4f}  ({s.orientation})")
    return 0


def cmd_query(args) -> int:
    try:
        q = parse_query(Path(args.query).read_text(encoding="utf-8"))
    except QuerySyntaxError as exc:
        print(f"{args.query}: {exc}", file=sys.stderr)
        return 2
    if args.explain:
        print(explain(q))
        return 0
    result = evaluate(q, load_store(args.store))
    out = result_to_markdown(result) if args.format == "md" else result_to_csv(result).decode("utf-8")
    sys.stdout.write(out)
    return 0


def _providers(path, corpus, setting, overrides=None) -> dict:
    specs = json.loads(Path(path).read_text(encoding="utf-8")) if path else {}
    out = {}
    for name, spec in specs.items():
        if spec.get("kind", "").startswith("http-"):
            spec = {**spec, **(overrides or {})}
        if spec.get("kind") == "gold-echo":
            out[name] = bench.gold_echo_provider(corpus.cases, setting)
        else:
            out[name] = provider_from_config(spec)
    return out


def cmd_bench(args) -> int:
    corpus = bench.load_manifest(args.manifest)
    store = corpus.store()
    try:
        bench.run_setting1(corpus.cases, store)
    except bench.FixtureMismatch as exc:
        print(f"fixture self-check failed: {exc}", file=sys.stderr)
        return 1
    setting, _, provider = args.system.partition(":")
    if setting == bench.REPLAY:
        if not args.replay_dir:
            print("replay needs --replay-dir", file=sys.stderr)
            return 2
        report = bench.replay_system(corpus.cases, args.replay_dir, provider or Path(args.replay_dir).name)
    else:
        cfg = bench.SystemConfig(setting, provider or None, embedder=args.embedder)
        overrides = {k: v for k, v in (("timeout", args.timeout), ("retries", args.retries)) if v is not None}
        providers = _providers(args.providers, corpus, setting, overrides)
        report = bench.run_system(corpus.cases, cfg, providers, store, max_workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_bytes(bench.emit_report([report], "csv"))
    (out / "report.txt").write_bytes(bench.emit_report([report], "text"))
    (out / "per_query.json").write_bytes(bench.per_query_json(report))
    responses = out / "responses"
    for qid, o in report.per_query.items():
        if o.response is not None:
            responses.mkdir(exist_ok=True)
            (responses / f"{qid}.json").write_bytes(o.response.to_bytes())
    sys.stdout.write(bench.emit_report([report], "text").decode("utf-8"))
    return 0


def cmd_agree(args) -> int:
    filters = dict(f.split("=", 1) for f in args.filter)
    m = agreement.read_long_csv(
        Path(args.ratings).read_bytes(), args.item_col, args.rater_col, args.rating_col, filters=filters
    )
    if args.stat in ("cohen", "exact"):
        raters = args.raters.split(",") if args.raters else m.rater_ids[:2]
        if len(raters) != 2:
            print("--raters takes exactly two rater ids", file=sys.stderr)
            return 2
        a, b = (m.column(r) for r in raters)
        if args.stat == "exact":
            print(f"{agreement.exact_match_rate(a, b):.3f}")
            return 0
        res = agreement.cohen_kappa(a, b)
    elif args.stat == "fleiss":
        res = agreement.fleiss_kappa(m)
    else:
        res = agreement.krippendorff_alpha_ordinal(m)
    print(f"{res.value:.3f}" if res.defined else f"undefined: {res.reason}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reviewgraph")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="RMS precision/recall/F1 of a predicted table against gold")
    p.add_argument("pred")
    p.add_argument("gold")
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--key-column", action="append", default=[])
    p.add_argument("--percent", action="store_true", help="print scores in percent")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("query", help="run a SPARQL query over a comparison store")
    p.add_argument("store", help="directory of comparison CSVs")
    p.add_argument("query", help="query file")
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--explain", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="score one system over a fixture manifest")
    p.add_argument("manifest")
    p.add_argument("--system", required=True, help="sparql, <setting>:<provider> or replay:<model>")
    p.add_argument("--providers", help="JSON file mapping provider names to provider specs")
    p.add_argument("--embedder", help="provider name of the embedder for the rag setting")
    p.add_argument("--replay-dir")
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--timeout", type=float, help="per-request timeout for HTTP providers, seconds")
    p.add_argument("--retries", type=int, help="retry count for HTTP providers")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("agree", help="agreement statistics over a long-format ratings CSV")
    p.add_argument("ratings")
    p.add_argument("--stat", choices=("fleiss", "alpha", "cohen", "exact"), required=True)
    p.add_argument("--item-col", default="item")
    p.add_argument("--rater-col", default="rater")
    p.add_argument("--rating-col", default="rating")
    p.add_argument("--raters", help="two comma-separated rater ids for cohen/exact")
    p.add_argument("--filter", action="append", default=[], help="keep rows where COLUMN=VALUE")
    p.set_defaults(func=cmd_agree)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TableFormatError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
