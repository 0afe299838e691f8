"""Shared builders for synthetic corpora and pipeline fixtures."""

from __future__ import annotations

import json
import random
from pathlib import Path

from claimext.corpus import (
    BEAR,
    Document,
    EntityClass,
    EntitySpan,
    VerdictLabel,
    save_documents,
)

WORDS = (
    "masks vaccine fever aspirin cough doctor says study shows people think "
    "reports concern daily online posting maybe truly never often blood clots "
    "plague illness therapy dose remedy virus immunity patient clinic nurse"
).split()

ENTITY_TERMS = {
    "aspirin": "treat_therapy",
    "vaccine": "treat_therapy",
    "therapy": "treat_therapy",
    "remedy": "treat_therapy",
    "fever": "med_C",
    "plague": "med_C",
    "illness": "med_C",
    "cough": "med_C",
    "virus": "med_C",
    "immunity": "med_C",
}


def make_document(doc_id: str, rng: random.Random, n_entities: int) -> Document:
    """A token-soup document with ``n_entities`` gazetteer terms placed in it.

    Entity surfaces are dictionary words separated by fillers, so a
    gazetteer built from ENTITY_TERMS recovers exactly the gold spans.
    """
    entity_terms = rng.sample(sorted(ENTITY_TERMS), k=n_entities) if n_entities else []
    fillers = [w for w in WORDS if w not in ENTITY_TERMS]
    tokens: list[str] = []
    entity_token_idx: list[int] = []
    for term in entity_terms:
        tokens.extend(rng.choices(fillers, k=rng.randint(1, 3)))
        entity_token_idx.append(len(tokens))
        tokens.append(term)
    tokens.extend(rng.choices(fillers, k=rng.randint(1, 3)))
    text = " ".join(tokens)
    offsets = []
    pos = 0
    for tok in tokens:
        offsets.append((pos, pos + len(tok)))
        pos += len(tok) + 1
    entities = tuple(
        EntitySpan(
            start=offsets[i][0],
            end=offsets[i][1],
            label=EntityClass(BEAR, ENTITY_TERMS[tokens[i]]),
            surface=tokens[i],
        )
        for i in entity_token_idx
    )
    return Document(id=doc_id, text=text, gold_entities=entities)


def make_pipeline_corpus(path: Path, n_docs: int = 20, seed: int = 11) -> list[Document]:
    """Corpus for end-to-end runs: every doc has 2-4 entities, evidence and
    a gold verdict."""
    rng = random.Random(seed)
    docs = []
    for i in range(n_docs):
        doc = make_document(f"doc-{i:03d}", rng, n_entities=rng.randint(2, 4))
        evidence_style = i % 3
        if evidence_style == 0:
            evidence = doc.text
            gold = VerdictLabel.SUPPORTS
        elif evidence_style == 1:
            evidence = "never " + doc.text
            gold = VerdictLabel.REFUTES
        else:
            evidence = "totally unrelated archive material about gardening"
            gold = VerdictLabel.NEI
        docs.append(
            Document(
                id=doc.id,
                text=doc.text,
                gold_entities=doc.gold_entities,
                evidence=evidence,
                gold_verdict=gold,
            )
        )
    save_documents(docs, path)
    return docs


def write_gazetteer(path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for term, label in sorted(ENTITY_TERMS.items()):
            fh.write(json.dumps({"term": term, "label": label, "scheme": BEAR}) + "\n")


def write_kb(path: Path) -> None:
    concepts = [
        {
            "concept_id": "C0001",
            "canonical_name": "Pharmaceutical Preparations",
            "aliases": ["medicines", "medication"],
        },
        {"concept_id": "C0002", "canonical_name": "Thrombus", "aliases": ["blood clot"]},
        {"concept_id": "C0003", "canonical_name": "Dyspnea", "aliases": ["breathlessness"]},
    ]
    with path.open("w", encoding="utf-8") as fh:
        for rec in concepts:
            fh.write(json.dumps(rec) + "\n")


ORACLE_SCORER = r'''
import json
import sys

mapping = json.load(open(sys.argv[1], encoding="utf-8"))
for line in sys.stdin:
    line = line.strip()
    if not line:
        continue
    req = json.loads(line)
    scores = [mapping.get(text, 0.1) for text in req["texts"]]
    sys.stdout.write(json.dumps({"id": req["id"], "scores": scores}) + "\n")
    sys.stdout.flush()
'''


def write_oracle_scorer(tmp_path: Path, preferred_texts: dict[str, float]) -> str:
    """An external scorer command that ranks the given texts highest."""
    script = tmp_path / "oracle_scorer.py"
    table = tmp_path / "oracle_scores.json"
    script.write_text(ORACLE_SCORER, encoding="utf-8")
    table.write_text(json.dumps(preferred_texts), encoding="utf-8")
    import sys

    return f"{sys.executable} {script} {table}"
