"""End-to-end run orchestration with file-boundary stages and caching.

Stages run in fixed order (entities, candidates, claims, verdicts,
metrics), each writing one output file into the run directory. A stage is
skipped on re-run when its input hashes, its config fingerprint and its
recorded output hash all still match the manifest of the previous run;
any upstream change invalidates everything downstream through the input
hashes. Stage outputs are deterministic byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .claimgen import (
    ClaimCandidate,
    FullText,
    PairSpan,
    TripleSource,
    apply_normalization,
    condense_seq,
)
from .corpus import COVERT, EntityClass, EntitySpan, VerdictLabel, load_documents
from .errors import ClaimextError, InputError
from .linker import build_index, expanding_normalizer, load_kb, resolve_abbreviations
from .ner import ingest_annotations, load_gazetteer, recognize
from .select import ScorerHandle, derive_doc_seed, score_candidates, select_main_claim, select_random
from .verdict import VerdictRecord, VerifierHandle, check_records, evaluate_verdicts
from .wire import ScorerClient

MODES = ("core_claim", "random", "gold_seq", "full_text")

SCORER_ENV = "CLAIMEXT_SCORER_ENDPOINT"
VERIFIER_ENV = "CLAIMEXT_VERIFIER_ENDPOINT"


@dataclass(frozen=True)
class RunConfig:
    corpus: Path
    output: Path
    mode: str = "core_claim"
    corpus_scheme: str = COVERT
    gazetteer: Path | None = None
    annotations: Path | None = None
    kb: Path | None = None
    normalize: bool = False
    scorer: str = "builtin"
    verifier: str = "toy"
    seed: int = 0
    link_threshold: float = 0.7
    link_top_k: int = 5
    toy_overlap_floor: float = 0.4

    def validate(self) -> None:
        if self.mode not in MODES:
            raise InputError(f"unknown selection mode: {self.mode!r}")
        if self.normalize and self.mode == "full_text":
            raise InputError("normalization needs entity provenance; full_text has none")
        if self.normalize and self.kb is None:
            raise InputError("normalization requires a knowledge base (kb)")
        if self.mode in ("core_claim", "random") and not (self.gazetteer or self.annotations):
            raise InputError(f"mode {self.mode!r} needs a gazetteer or an annotations file")


_BOOL_VALUES = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def parse_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Parse the key/value run-config format.

    One ``key = value`` pair per line; blank lines and ``#`` comments are
    ignored. Scorer/verifier endpoints can also come from the environment
    (CLAIMEXT_SCORER_ENDPOINT / CLAIMEXT_VERIFIER_ENDPOINT), which wins
    over the file.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    raw: dict[str, str] = {}
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise InputError(f"{path}: line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in stripped.split("=", 1))
        raw[key] = value
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    if os.environ.get(SCORER_ENV):
        raw["scorer"] = os.environ[SCORER_ENV]
    if os.environ.get(VERIFIER_ENV):
        raw["verifier"] = os.environ[VERIFIER_ENV]

    known = {f.name: f for f in fields(RunConfig)}
    unknown = set(raw) - set(known)
    if unknown:
        raise InputError(f"{path}: unknown config keys: {', '.join(sorted(unknown))}")
    kwargs: dict = {}
    for key, value in raw.items():
        if value == "":
            continue
        typ = known[key].type
        if typ.startswith("Path"):
            kwargs[key] = Path(value)
        elif typ == "bool":
            try:
                kwargs[key] = _BOOL_VALUES[value.lower()]
            except KeyError:
                raise InputError(f"{path}: bad boolean for {key!r}: {value!r}") from None
        elif typ == "int":
            kwargs[key] = int(value)
        elif typ == "float":
            kwargs[key] = float(value)
        else:
            kwargs[key] = value
    for required in ("corpus", "output"):
        if required not in kwargs:
            raise InputError(f"{path}: missing required key {required!r}")
    return RunConfig(**kwargs)


# -- stage serialization -----------------------------------------------------


def _span_to_dict(span: EntitySpan) -> dict:
    return {
        "start": span.start,
        "end": span.end,
        "scheme": span.label.scheme,
        "label": span.label.name,
        "surface": span.surface,
    }


def _span_from_dict(rec: dict) -> EntitySpan:
    return EntitySpan(
        start=rec["start"],
        end=rec["end"],
        label=EntityClass(rec["scheme"], rec["label"]),
        surface=rec["surface"],
    )


def _provenance_to_dict(candidate: ClaimCandidate) -> dict:
    prov = candidate.provenance
    if isinstance(prov, PairSpan):
        return {"kind": "pair", "first": _span_to_dict(prov.first), "second": _span_to_dict(prov.second)}
    if isinstance(prov, TripleSource):
        triple = prov.triple
        return {
            "kind": "triple",
            "subject": _span_to_dict(triple.subject),
            "relation": triple.relation_surface,
            "object": _span_to_dict(triple.object),
        }
    return {"kind": "full_text"}


def _candidate_to_dict(candidate: ClaimCandidate) -> dict:
    return {
        "doc_id": candidate.doc_id,
        "text": candidate.text,
        "provenance": _provenance_to_dict(candidate),
        "normalized": candidate.normalized,
        "score": candidate.score,
    }


def _write_jsonl(path: Path, records: Sequence[dict]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    out = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _fingerprint(parts: dict) -> str:
    return hashlib.sha256(json.dumps(parts, sort_keys=True).encode("utf-8")).hexdigest()


@dataclass
class StageRecord:
    name: str
    output: str
    output_sha256: str
    fingerprint: str
    counts: dict
    cache_hit: bool


@dataclass
class RunManifest:
    config: dict
    seed: int
    package_version: str
    stages: list[StageRecord] = field(default_factory=list)
    counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "format": "claimext-run-manifest/1",
            "package_version": self.package_version,
            "seed": self.seed,
            "config": self.config,
            "stages": [asdict(s) for s in self.stages],
            "counts": self.counts,
        }


class _StageRunner:
    def __init__(self, out_dir: Path, previous: dict | None):
        self.out_dir = out_dir
        self.previous = {s["name"]: s for s in (previous or {}).get("stages", [])}
        self.records: list[StageRecord] = []

    def run(
        self,
        name: str,
        filename: str,
        inputs: dict[str, str],
        config_subset: dict,
        compute: Callable[[Path], dict],
    ) -> tuple[Path, StageRecord]:
        """Run or reuse one stage; ``compute`` writes the output file and
        returns the stage counts."""
        output = self.out_dir / filename
        fingerprint = _fingerprint({"inputs": inputs, "config": config_subset})
        prev = self.previous.get(name)
        if (
            prev is not None
            and prev["fingerprint"] == fingerprint
            and output.exists()
            and _sha256(output) == prev["output_sha256"]
        ):
            record = StageRecord(
                name=name,
                output=filename,
                output_sha256=prev["output_sha256"],
                fingerprint=fingerprint,
                counts=dict(prev["counts"]),
                cache_hit=True,
            )
            self.records.append(record)
            return output, record
        try:
            counts = compute(output)
        except ClaimextError as exc:
            raise type(exc)(f"stage {name!r}: {exc}") from None
        record = StageRecord(
            name=name,
            output=filename,
            output_sha256=_sha256(output),
            fingerprint=fingerprint,
            counts=counts,
            cache_hit=False,
        )
        self.records.append(record)
        return output, record


def run_pipeline(config: RunConfig) -> RunManifest:
    """Execute the pipeline stages and write a run manifest.

    Stage order: entity recognition, claim candidate generation (with
    optional normalization), main claim selection, verdict checking,
    metric aggregation.
    """
    config.validate()
    out_dir = Path(config.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    previous = None
    if manifest_path.exists():
        try:
            previous = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            previous = None

    docs = load_documents(config.corpus, scheme=config.corpus_scheme)
    doc_by_id = {doc.id: doc for doc in docs}
    runner = _StageRunner(out_dir, previous)
    corpus_hash = _sha256(Path(config.corpus))

    # -- stage: entities ------------------------------------------------
    entity_inputs = {"corpus": corpus_hash}
    entity_source = "gold" if config.mode == "gold_seq" else "none" if config.mode == "full_text" else None
    if entity_source is None:
        if config.annotations:
            entity_source = "annotations"
            entity_inputs["annotations"] = _sha256(Path(config.annotations))
        else:
            entity_source = "gazetteer"
            entity_inputs["gazetteer"] = _sha256(Path(config.gazetteer))

    def _compute_entities(output: Path) -> dict:
        per_doc: dict[str, list[EntitySpan]] = {doc.id: [] for doc in docs}
        if entity_source == "gold":
            for doc in docs:
                per_doc[doc.id] = list(doc.gold_entities)
        elif entity_source == "annotations":
            per_doc.update(ingest_annotations(config.annotations, docs))
        elif entity_source == "gazetteer":
            gazetteer = load_gazetteer(config.gazetteer)
            for doc in docs:
                per_doc[doc.id] = recognize(doc, gazetteer)
        records = [
            {"doc_id": doc.id, "entities": [_span_to_dict(s) for s in per_doc[doc.id]]}
            for doc in docs
        ]
        _write_jsonl(output, records)
        return {
            "documents_in": len(docs),
            "entities_total": sum(len(v) for v in per_doc.values()),
        }

    entities_path, _ = runner.run(
        "entities",
        "entities.jsonl",
        entity_inputs,
        {"source": entity_source, "scheme": config.corpus_scheme},
        _compute_entities,
    )

    # -- stage: candidates ----------------------------------------------
    candidate_inputs = {"corpus": corpus_hash, "entities": _sha256(entities_path)}
    candidate_config = {"mode": "full_text" if config.mode == "full_text" else "pairs",
                        "normalize": config.normalize}
    if config.normalize:
        candidate_inputs["kb"] = _sha256(Path(config.kb))
        candidate_config["link_threshold"] = config.link_threshold

    def _compute_candidates(output: Path) -> dict:
        records = []
        skipped = 0
        n_candidates = 0
        if config.mode == "full_text":
            for doc in docs:
                candidate = ClaimCandidate(doc_id=doc.id, text=doc.text, provenance=FullText())
                records.append(_candidate_to_dict(candidate))
                n_candidates += 1
        else:
            entity_rows = {rec["doc_id"]: rec["entities"] for rec in _read_jsonl(entities_path)}
            index = build_index(load_kb(config.kb)) if config.normalize else None
            for doc in docs:
                spans = [_span_from_dict(r) for r in entity_rows.get(doc.id, [])]
                result = condense_seq(doc, spans)
                if result.skipped:
                    skipped += 1
                    continue
                candidates = result.candidates
                if index is not None:
                    normalizer = expanding_normalizer(
                        index, resolve_abbreviations(doc), threshold=config.link_threshold
                    )
                    candidates = tuple(apply_normalization(c, normalizer) for c in candidates)
                for candidate in candidates:
                    records.append(_candidate_to_dict(candidate))
                    n_candidates += 1
        _write_jsonl(output, records)
        return {"documents_in": len(docs), "skipped_documents": skipped, "candidates": n_candidates}

    candidates_path, candidates_record = runner.run(
        "candidates", "candidates.jsonl", candidate_inputs, candidate_config, _compute_candidates
    )

    # -- stage: claims ---------------------------------------------------
    claims_inputs = {"candidates": _sha256(candidates_path)}
    claims_config: dict = {"mode": config.mode}
    if config.mode in ("core_claim", "gold_seq"):
        claims_config["scorer"] = config.scorer
    elif config.mode == "random":
        claims_config["seed"] = config.seed

    def _compute_claims(output: Path) -> dict:
        rows = _read_jsonl(candidates_path)
        by_doc: dict[str, list[dict]] = {}
        for row in rows:
            by_doc.setdefault(row["doc_id"], []).append(row)
        scorer = ScorerHandle.from_spec(config.scorer)
        client = None
        if config.mode in ("core_claim", "gold_seq") and scorer.kind == "external":
            client = ScorerClient(scorer.endpoint, batch_size=scorer.batch_size)
        records = []
        try:
            for doc in docs:
                doc_rows = by_doc.get(doc.id)
                if not doc_rows:
                    continue
                candidates = [_candidate_from_dict(r) for r in doc_rows]
                if config.mode == "full_text":
                    chosen = candidates[0]
                elif config.mode == "random":
                    chosen = select_random(candidates, derive_doc_seed(config.seed, doc.id))
                else:
                    chosen = select_main_claim(score_candidates(candidates, scorer, client=client))
                records.append(_candidate_to_dict(chosen))
        finally:
            if client is not None:
                client.close()
        _write_jsonl(output, records)
        return {"claims_emitted": len(records)}

    claims_path, claims_record = runner.run(
        "claims", "claims.jsonl", claims_inputs, claims_config, _compute_claims
    )

    # -- stage: verdicts --------------------------------------------------
    verdict_inputs = {"corpus": corpus_hash, "claims": _sha256(claims_path)}
    verdict_config = {"verifier": config.verifier, "toy_overlap_floor": config.toy_overlap_floor}

    def _compute_verdicts(output: Path) -> dict:
        verifier = VerifierHandle.from_spec(config.verifier, overlap_floor=config.toy_overlap_floor)
        pairs = []
        without_gold = 0
        for row in _read_jsonl(claims_path):
            doc = doc_by_id[row["doc_id"]]
            if doc.gold_verdict is None:
                without_gold += 1
                continue
            pairs.append((doc.id, row["text"], doc.evidence, doc.gold_verdict))
        records = check_records(pairs, verifier)
        _write_jsonl(
            output,
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
        return {"verdicts": len(records), "without_gold_verdict": without_gold}

    verdicts_path, _ = runner.run(
        "verdicts", "verdicts.jsonl", verdict_inputs, verdict_config, _compute_verdicts
    )

    # -- stage: metrics ----------------------------------------------------
    def _compute_metrics(output: Path) -> dict:
        records = [
            VerdictRecord(
                doc_id=row["doc_id"],
                claim_text=row["claim"],
                evidence_text=row["evidence"],
                predicted=VerdictLabel(row["predicted"]),
                gold=VerdictLabel(row["gold"]),
            )
            for row in _read_jsonl(verdicts_path)
        ]
        if records:
            score = evaluate_verdicts(records)
            payload = {
                "precision": score.precision,
                "recall": score.recall,
                "f1": score.f1,
                "counts": asdict(score.counts),
            }
        else:
            payload = {"precision": 0.0, "recall": 0.0, "f1": 0.0, "counts": {}}
        distribution: dict[str, int] = {}
        for row in _read_jsonl(verdicts_path):
            distribution[row["predicted"]] = distribution.get(row["predicted"], 0) + 1
        payload["predicted_distribution"] = dict(sorted(distribution.items()))
        output.write_text(
            json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        return {"records_scored": len(records)}

    runner.run(
        "metrics",
        "metrics.json",
        {"verdicts": _sha256(verdicts_path)},
        {},
        _compute_metrics,
    )

    manifest = RunManifest(
        config=_config_to_dict(config),
        seed=config.seed,
        package_version=__version__,
        stages=runner.records,
    )
    manifest.counts = {
        "documents_in": len(docs),
        "skipped_documents": candidates_record.counts.get("skipped_documents", 0),
        "candidates": candidates_record.counts.get("candidates", 0),
        "claims_emitted": claims_record.counts.get("claims_emitted", 0),
    }
    manifest_path.write_text(
        json.dumps(manifest.to_dict(), ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return manifest


def _config_to_dict(config: RunConfig) -> dict:
    out = {}
    for f in fields(config):
        value = getattr(config, f.name)
        out[f.name] = str(value) if isinstance(value, Path) else value
    return out


def _candidate_from_dict(rec: dict) -> ClaimCandidate:
    prov_rec = rec["provenance"]
    kind = prov_rec["kind"]
    if kind == "pair":
        provenance: PairSpan | TripleSource | FullText = PairSpan(
            first=_span_from_dict(prov_rec["first"]),
            second=_span_from_dict(prov_rec["second"]),
        )
    elif kind == "triple":
        from .corpus import RelationTriple

        provenance = TripleSource(
            triple=RelationTriple(
                subject=_span_from_dict(prov_rec["subject"]),
                relation_surface=prov_rec["relation"],
                object=_span_from_dict(prov_rec["object"]),
            )
        )
    else:
        provenance = FullText()
    return ClaimCandidate(
        doc_id=rec["doc_id"],
        text=rec["text"],
        provenance=provenance,
        normalized=rec.get("normalized", False),
        score=rec.get("score"),
    )
