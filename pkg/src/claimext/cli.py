"""Command-line interface: composable stage subcommands plus `run`.

Exit codes: 0 success, 1 input error, 2 wire-protocol error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import LABELS, label_distribution, transition_matrix
from .claimgen import condense_seq
from .corpus import VerdictLabel, load_documents, load_scheme
from .errors import InputError, ProtocolError
from .linker import build_index, link, linking_coverage, load_kb
from .ner import evaluate_ner, ingest_annotations, load_gazetteer, prepare_gold, recognize
from .pipeline import RunConfig, parse_config, run_pipeline
from .select import ScorerHandle, derive_doc_seed, score_candidates, select_main_claim, select_random
from .verdict import VerdictRecord, VerifierHandle, check_records, delta_full, evaluate_verdicts
from .wire import ScorerClient


def _cmd_run(args: argparse.Namespace) -> int:
    overrides = {
        "corpus": args.corpus,
        "output": args.output,
        "mode": args.mode,
        "seed": str(args.seed) if args.seed is not None else None,
    }
    if args.config:
        config = parse_config(args.config, overrides)
    else:
        missing = [k for k in ("corpus", "output") if not overrides.get(k)]
        if missing:
            raise InputError(f"--config or --{'/--'.join(missing)} required")
        config = RunConfig(
            corpus=Path(args.corpus),
            output=Path(args.output),
            mode=args.mode or "core_claim",
            seed=args.seed or 0,
        )
    manifest = run_pipeline(config)
    for stage in manifest.stages:
        hit = "cached" if stage.cache_hit else "computed"
        print(f"stage {stage.name:<12} {hit:<9} {stage.counts}")
    print(f"counts: {manifest.counts}")
    return 0


def _cmd_ner_eval(args: argparse.Namespace) -> int:
    scheme_name, classes = load_scheme(args.scheme)
    docs = load_documents(args.corpus, scheme=args.corpus_scheme)
    gold = prepare_gold({d.id: list(d.gold_entities) for d in docs}, bear_classes=classes)
    pred_raw = ingest_annotations(args.pred, docs)
    pred = {d.id: pred_raw.get(d.id, []) for d in docs}
    score = evaluate_ner(pred, gold, mode=args.mode)
    print(f"mode: {args.mode}   scheme: {scheme_name}")
    print(f"evaluated classes: {', '.join(score.evaluated_classes) or '(none)'}")
    for cls, s in sorted(score.per_class.items()):
        print(f"  {cls:<20} P {s.precision:6.3f}  R {s.recall:6.3f}  F1 {s.f1:6.3f}")
    print(f"  {'macro':<20} P {score.macro.precision:6.3f}  R {score.macro.recall:6.3f}  F1 {score.macro.f1:6.3f}")
    if args.json:
        payload = {
            "mode": args.mode,
            "evaluated_classes": list(score.evaluated_classes),
            "per_class": {
                cls: {"precision": s.precision, "recall": s.recall, "f1": s.f1}
                for cls, s in score.per_class.items()
            },
            "macro": {
                "precision": score.macro.precision,
                "recall": score.macro.recall,
                "f1": score.macro.f1,
            },
        }
        Path(args.json).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def _read_mentions(args: argparse.Namespace) -> list[str]:
    if args.mention:
        return list(args.mention)
    if args.mentions_file:
        lines = Path(args.mentions_file).read_text(encoding="utf-8").splitlines()
        return [line.strip() for line in lines if line.strip()]
    raise InputError("provide --mention or --mentions-file")


def _cmd_link(args: argparse.Namespace) -> int:
    index = build_index(load_kb(args.kb))
    mentions = _read_mentions(args)
    if args.sweep:
        thresholds = [float(t) for t in args.sweep.split(",")]
        print(f"{'threshold':>9}  {'linked':>6}  {'total':>5}  fraction")
        for threshold in thresholds:
            outcomes = [bool(link(m, index, k=args.top_k, threshold=threshold)) for m in mentions]
            cov = linking_coverage(outcomes)
            print(f"{threshold:>9.2f}  {cov.linked_count:>6}  {cov.total_count:>5}  {cov.fraction:.3f}")
        return 0
    for mention in mentions:
        candidates = link(mention, index, k=args.top_k, threshold=args.threshold)
        if not candidates:
            print(f"{mention} -> (not linked)")
        for cand in candidates:
            print(f"{mention} -> {cand.canonical_name} [{cand.concept_id}] {cand.score:.4f}")
    return 0


def _cmd_extract(args: argparse.Namespace) -> int:
    from .pipeline import _candidate_to_dict, _write_jsonl

    docs = load_documents(args.corpus, scheme=args.corpus_scheme)
    if args.gold:
        spans_by_doc = {d.id: list(d.gold_entities) for d in docs}
    elif args.entities:
        ingested = ingest_annotations(args.entities, docs)
        spans_by_doc = {d.id: ingested.get(d.id, []) for d in docs}
    elif args.gazetteer:
        gazetteer = load_gazetteer(args.gazetteer)
        spans_by_doc = {d.id: recognize(d, gazetteer) for d in docs}
    else:
        raise InputError("provide --gold, --entities or --gazetteer")
    records = []
    skipped = 0
    for doc in docs:
        result = condense_seq(doc, spans_by_doc[doc.id])
        if result.skipped:
            skipped += 1
        records.extend(_candidate_to_dict(c) for c in result.candidates)
    _write_jsonl(Path(args.out), records)
    print(f"documents: {len(docs)}  skipped: {skipped}  candidates: {len(records)}")
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    from .pipeline import _candidate_from_dict, _candidate_to_dict, _read_jsonl, _write_jsonl

    rows = _read_jsonl(Path(args.candidates))
    by_doc: dict[str, list] = {}
    for row in rows:
        by_doc.setdefault(row["doc_id"], []).append(_candidate_from_dict(row))
    records = []
    scorer = ScorerHandle.from_spec(args.scorer)
    client = ScorerClient(scorer.endpoint) if scorer.kind == "external" and not args.random else None
    try:
        for doc_id in sorted(by_doc):
            candidates = by_doc[doc_id]
            if args.random:
                chosen = select_random(candidates, derive_doc_seed(args.seed, doc_id))
            else:
                chosen = select_main_claim(score_candidates(candidates, scorer, client=client))
            records.append(_candidate_to_dict(chosen))
    finally:
        if client is not None:
            client.close()
    _write_jsonl(Path(args.out), records)
    print(f"claims: {len(records)}")
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    from .pipeline import _read_jsonl, _write_jsonl

    docs = {d.id: d for d in load_documents(args.corpus, scheme=args.corpus_scheme)}
    verifier = VerifierHandle.from_spec(args.verifier)
    pairs = []
    for row in _read_jsonl(Path(args.claims)):
        doc = docs.get(row["doc_id"])
        if doc is None:
            raise InputError(f"claim references unknown document id {row['doc_id']!r}")
        if doc.gold_verdict is None:
            continue
        pairs.append((doc.id, row["text"], doc.evidence, doc.gold_verdict))
    records = check_records(pairs, verifier)
    _write_jsonl(
        Path(args.out),
        [
            {
                "doc_id": r.doc_id,
                "claim": r.claim_text,
                "evidence": r.evidence_text,
                "predicted": r.predicted.value,
                "gold": r.gold.value,
            }
            for r in records
        ],
    )
    score = evaluate_verdicts(records) if records else None
    if score:
        print(f"P {score.precision:.3f}  R {score.recall:.3f}  F1 {score.f1:.3f}  ({len(records)} records)")
    else:
        print("no records with a gold verdict")
    return 0


def _load_verdicts(path: str) -> list[VerdictRecord]:
    from .pipeline import _read_jsonl

    return [
        VerdictRecord(
            doc_id=row["doc_id"],
            claim_text=row["claim"],
            evidence_text=row["evidence"],
            predicted=VerdictLabel(row["predicted"]),
            gold=VerdictLabel(row["gold"]),
        )
        for row in _read_jsonl(Path(path))
    ]


def _cmd_report_metrics(args: argparse.Namespace) -> int:
    runs: dict[str, list[VerdictRecord]] = {}
    for spec in args.run:
        if "=" not in spec:
            raise InputError(f"--run expects NAME=verdicts.jsonl, got {spec!r}")
        name, path = spec.split("=", 1)
        runs[name] = _load_verdicts(path)
    scores = {name: evaluate_verdicts(records) for name, records in runs.items()}
    full_f1 = scores[args.full].f1 * 100 if args.full else None
    header = f"{'variant':<20} {'P':>7} {'R':>7} {'F1':>7}"
    if full_f1 is not None:
        header += f" {'d_full':>7}"
    print(header)
    payload = {}
    for name, score in scores.items():
        row = f"{name:<20} {score.precision * 100:>7.1f} {score.recall * 100:>7.1f} {score.f1 * 100:>7.1f}"
        entry = {
            "precision": score.precision,
            "recall": score.recall,
            "f1": score.f1,
            "counts": {
                "n_gold_sr": score.counts.n_gold_sr,
                "n_pred_sr": score.counts.n_pred_sr,
                "n_correct_sr": score.counts.n_correct_sr,
                "n_pred_nei": score.counts.n_pred_nei,
            },
        }
        if full_f1 is not None:
            delta = delta_full(score.f1 * 100, full_f1)
            row += f" {delta:>+7.1f}"
            entry["delta_full"] = delta
        payload[name] = entry
        print(row)
    if args.json:
        Path(args.json).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_report_distribution(args: argparse.Namespace) -> int:
    records = _load_verdicts(args.verdicts)
    counts = label_distribution({r.doc_id: r.predicted for r in records})
    for label in LABELS:
        print(f"{label.value:<10} {counts[label]:>6}")
    if args.json:
        Path(args.json).write_text(
            json.dumps({label.value: counts[label] for label in LABELS}, indent=2) + "\n"
        )
    return 0


def _cmd_report_transitions(args: argparse.Namespace) -> int:
    run_a = {r.doc_id: r.predicted for r in _load_verdicts(args.run_a)}
    run_b = {r.doc_id: r.predicted for r in _load_verdicts(args.run_b)}
    matrix = transition_matrix(run_a, run_b)
    print(f"{'':<10}" + "".join(f"{label.value:>10}" for label in LABELS))
    for i, label in enumerate(LABELS):
        print(f"{label.value:<10}" + "".join(f"{matrix.counts[i][j]:>10}" for j in range(len(LABELS))))
    print(f"consistent: {matrix.diagonal_total()}  shifted: {matrix.off_diagonal_total()}  only in A: {matrix.n_only_a}")
    if args.json:
        payload = {
            "counts": [list(row) for row in matrix.counts],
            "labels": [label.value for label in LABELS],
            "n_only_a": matrix.n_only_a,
            "diagonal_total": matrix.diagonal_total(),
            "off_diagonal_total": matrix.off_diagonal_total(),
        }
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="claimext", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the full pipeline")
    p_run.add_argument("--config", help="key/value config file")
    p_run.add_argument("--corpus")
    p_run.add_argument("--output")
    p_run.add_argument("--mode", choices=["core_claim", "random", "gold_seq", "full_text"])
    p_run.add_argument("--seed", type=int)
    p_run.set_defaults(func=_cmd_run)

    p_ner = sub.add_parser("ner-eval", help="strict/relaxed recognition scoring")
    p_ner.add_argument("--corpus", required=True)
    p_ner.add_argument("--corpus-scheme", default="COVERT")
    p_ner.add_argument("--pred", required=True, help="annotation file with predicted spans")
    p_ner.add_argument("--mode", choices=["strict", "relaxed"], required=True)
    p_ner.add_argument("--scheme", required=True, help="scheme file with the closed class set")
    p_ner.add_argument("--json", help="also write scores to this JSON file")
    p_ner.set_defaults(func=_cmd_ner_eval)

    p_link = sub.add_parser("link", help="rank concepts for mentions")
    p_link.add_argument("--kb", required=True)
    p_link.add_argument("--threshold", type=float, default=0.7)
    p_link.add_argument("--top-k", type=int, default=5)
    p_link.add_argument("--mention", action="append", help="mention text (repeatable)")
    p_link.add_argument("--mentions-file")
    p_link.add_argument("--sweep", help="comma-separated thresholds; print coverage per threshold")
    p_link.set_defaults(func=_cmd_link)

    p_extract = sub.add_parser("extract", help="generate claim candidates")
    p_extract.add_argument("--corpus", required=True)
    p_extract.add_argument("--corpus-scheme", default="COVERT")
    p_extract.add_argument("--gold", action="store_true", help="use gold entities")
    p_extract.add_argument("--entities", help="ingest annotation file")
    p_extract.add_argument("--gazetteer")
    p_extract.add_argument("--out", required=True)
    p_extract.set_defaults(func=_cmd_extract)

    p_select = sub.add_parser("select", help="pick the main claim per document")
    p_select.add_argument("--candidates", required=True)
    p_select.add_argument("--scorer", default="builtin")
    p_select.add_argument("--random", action="store_true")
    p_select.add_argument("--seed", type=int, default=0)
    p_select.add_argument("--out", required=True)
    p_select.set_defaults(func=_cmd_select)

    p_check = sub.add_parser("check", help="verdict-check claims against evidence")
    p_check.add_argument("--claims", required=True)
    p_check.add_argument("--corpus", required=True)
    p_check.add_argument("--corpus-scheme", default="COVERT")
    p_check.add_argument("--verifier", default="toy")
    p_check.add_argument("--out", required=True)
    p_check.set_defaults(func=_cmd_check)

    p_report = sub.add_parser("report", help="tables over verdict result files")
    report_sub = p_report.add_subparsers(dest="report_kind", required=True)

    p_metrics = report_sub.add_parser("metrics", help="P/R/F1 (+ delta) per run")
    p_metrics.add_argument("--run", action="append", required=True, help="NAME=verdicts.jsonl")
    p_metrics.add_argument("--full", help="run name to compute deltas against")
    p_metrics.add_argument("--json")
    p_metrics.set_defaults(func=_cmd_report_metrics)

    p_dist = report_sub.add_parser("distribution", help="predicted label counts")
    p_dist.add_argument("--verdicts", required=True)
    p_dist.add_argument("--json")
    p_dist.set_defaults(func=_cmd_report_distribution)

    p_trans = report_sub.add_parser("transitions", help="label transitions between two runs")
    p_trans.add_argument("--run-a", required=True)
    p_trans.add_argument("--run-b", required=True)
    p_trans.add_argument("--json")
    p_trans.set_defaults(func=_cmd_report_transitions)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    sys.exit(main())
