"""Entity recognition and strict/relaxed recognition scoring.

The built-in recognizer is a gazetteer matcher: case-insensitive,
longest-match-first on token boundaries (maximal alphanumeric runs).
Predictions from externally trained recognizers enter the pipeline through
``ingest_annotations`` instead.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Iterable, Mapping, Sequence

from .corpus import BEAR, Document, EntityClass, EntitySpan, map_entity_label
from .errors import CorpusFormatError, InputError
from .textutil import alnum_token_spans

STRICT = "strict"
RELAXED = "relaxed"

#: pseudo-class used when relaxed scoring pools every span together
POOLED_CLASS = "span"

#: catch-all bucket for predictions whose class never occurs in gold;
#: reported but excluded from macro averaging (which runs over gold classes)
STRAY_CLASS = "__stray__"


@dataclass(frozen=True)
class Gazetteer:
    """Term dictionary; keys are casefolded, single-space-joined token forms."""

    entries: Mapping[str, EntityClass]
    max_term_tokens: int


def _term_key(term: str) -> str:
    folded = term.casefold()
    return " ".join(folded[a:b] for a, b in alnum_token_spans(folded))


def build_gazetteer(terms: Mapping[str, EntityClass]) -> Gazetteer:
    entries: dict[str, EntityClass] = {}
    max_tokens = 1
    for term, label in terms.items():
        key = _term_key(term)
        if not key:
            raise InputError(f"empty gazetteer term: {term!r}")
        entries[key] = label
        max_tokens = max(max_tokens, key.count(" ") + 1)
    return Gazetteer(entries=entries, max_term_tokens=max_tokens)


def load_gazetteer(path: str | Path, default_scheme: str = BEAR) -> Gazetteer:
    """Load a gazetteer file: JSON lines ``{"term", "label", "scheme"?}``."""
    path = Path(path)
    terms: dict[str, EntityClass] = {}
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                term, label = str(rec["term"]), str(rec["label"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusFormatError(f"{path}: line {line_no}: bad gazetteer record: {exc}") from None
            terms[term] = EntityClass(str(rec.get("scheme", default_scheme)), label)
    if not terms:
        raise InputError(f"{path}: empty gazetteer")
    return build_gazetteer(terms)


def recognize(doc: Document, gaz: Gazetteer) -> list[EntitySpan]:
    """Longest-match-first gazetteer matching over token boundaries.

    Returned spans never overlap, are sorted by start, and matching is
    tolerant of whitespace/punctuation between the term's tokens.
    """
    token_spans = alnum_token_spans(doc.text)
    folded = [doc.text[a:b].casefold() for a, b in token_spans]
    spans: list[EntitySpan] = []
    i = 0
    n = len(token_spans)
    while i < n:
        matched = False
        for length in range(min(gaz.max_term_tokens, n - i), 0, -1):
            key = " ".join(folded[i : i + length])
            label = gaz.entries.get(key)
            if label is not None:
                start = token_spans[i][0]
                end = token_spans[i + length - 1][1]
                spans.append(EntitySpan(start=start, end=end, label=label, surface=doc.text[start:end]))
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return spans


def ingest_annotations(
    path: str | Path,
    corpus: Sequence[Document],
    default_scheme: str = BEAR,
) -> dict[str, list[EntitySpan]]:
    """Attach externally produced spans to documents by id.

    The file holds JSON lines ``{"doc_id", "start", "end", "label"}``.
    Spans are validated against the document text; failures name the
    document and the offending span.
    """
    path = Path(path)
    by_id = {doc.id: doc for doc in corpus}
    out: dict[str, list[EntitySpan]] = {}
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                doc_id = str(rec["doc_id"])
                start, end = int(rec["start"]), int(rec["end"])
                label = str(rec["label"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"{path}: line {line_no}: bad annotation record: {exc}") from None
            doc = by_id.get(doc_id)
            if doc is None:
                raise InputError(f"{path}: line {line_no}: unknown document id {doc_id!r}")
            if not (0 <= start < end <= len(doc.text)):
                raise InputError(
                    f"{path}: document {doc_id!r}: span ({start}, {end}) out of bounds"
                )
            scheme = str(rec.get("scheme", default_scheme))
            span = EntitySpan(
                start=start, end=end, label=EntityClass(scheme, label), surface=doc.text[start:end]
            )
            out.setdefault(doc_id, []).append(span)
    for spans in out.values():
        spans.sort(key=lambda s: (s.start, s.end))
    return out


def prepare_gold(
    gold: Mapping[str, Sequence[EntitySpan]],
    bear_classes: Collection[str] | None = None,
) -> dict[str, list[EntitySpan]]:
    """Map gold spans into the shared scheme and drop ignored-marker spans."""
    out: dict[str, list[EntitySpan]] = {}
    for doc_id, spans in gold.items():
        kept = []
        for span in spans:
            mapped = map_entity_label(span.label, bear_classes)
            if mapped.ignored:
                continue
            kept.append(EntitySpan(span.start, span.end, mapped, span.surface))
        out[doc_id] = kept
    return out


@dataclass(frozen=True)
class ClassScore:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class NerScore:
    per_class: dict[str, ClassScore]
    macro: ClassScore
    evaluated_classes: tuple[str, ...]


def _prf(tp: int, n_pred: int, n_gold: int) -> ClassScore:
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gold if n_gold else 0.0
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return ClassScore(precision, recall, f1)


def evaluate_ner(
    pred: Mapping[str, Sequence[EntitySpan]],
    gold: Mapping[str, Sequence[EntitySpan]],
    mode: str,
) -> NerScore:
    """Score predictions against gold spans.

    strict: a true positive needs identical (start, end, class).
    relaxed: class labels are ignored; all spans are pooled into a single
    pseudo-class and a true positive needs identical (start, end).

    Gold spans are expected in a single scheme with ignored-marker spans
    already removed (see ``prepare_gold``). Macro averages run over the
    classes present in gold; predictions of classes never seen in gold are
    reported under ``__stray__`` but stay out of the macro average.
    """
    if mode not in (STRICT, RELAXED):
        raise InputError(f"unknown evaluation mode: {mode!r}")
    if set(pred) != set(gold):
        raise InputError("pred and gold must cover the same document ids")

    if mode == RELAXED:
        tp = n_pred = n_gold = 0
        for doc_id in gold:
            pred_spans = Counter((s.start, s.end) for s in pred[doc_id])
            gold_spans = Counter((s.start, s.end) for s in gold[doc_id])
            tp += sum((pred_spans & gold_spans).values())
            n_pred += sum(pred_spans.values())
            n_gold += sum(gold_spans.values())
        score = _prf(tp, n_pred, n_gold)
        return NerScore(
            per_class={POOLED_CLASS: score}, macro=score, evaluated_classes=(POOLED_CLASS,)
        )

    tp_by_class: Counter[str] = Counter()
    pred_by_class: Counter[str] = Counter()
    gold_by_class: Counter[str] = Counter()
    gold_classes: set[str] = set()
    for doc_id in gold:
        gold_counter = Counter((s.start, s.end, s.label.name) for s in gold[doc_id])
        pred_counter = Counter((s.start, s.end, s.label.name) for s in pred[doc_id])
        for (_, _, cls), count in gold_counter.items():
            gold_by_class[cls] += count
            gold_classes.add(cls)
        for (_, _, cls), count in pred_counter.items():
            pred_by_class[cls] += count
        for key, count in (pred_counter & gold_counter).items():
            tp_by_class[key[2]] += count

    evaluated = tuple(sorted(gold_classes))
    per_class = {
        cls: _prf(tp_by_class[cls], pred_by_class[cls], gold_by_class[cls]) for cls in evaluated
    }
    stray_pred = sum(count for cls, count in pred_by_class.items() if cls not in gold_classes)
    if stray_pred:
        per_class[STRAY_CLASS] = _prf(0, stray_pred, 0)
    if evaluated:
        macro = ClassScore(
            precision=sum(per_class[c].precision for c in evaluated) / len(evaluated),
            recall=sum(per_class[c].recall for c in evaluated) / len(evaluated),
            f1=sum(per_class[c].f1 for c in evaluated) / len(evaluated),
        )
    else:
        macro = ClassScore(0.0, 0.0, 0.0)
    return NerScore(per_class=per_class, macro=macro, evaluated_classes=evaluated)
