"""Data model, on-disk formats, validation and entity-class mapping.

A corpus is a UTF-8 file with one JSON record per line:

    {"id": ..., "text": ..., "entities": [{"start", "end", "label", "surface"}],
     "relations": [{"subject_index", "relation", "object_index"}],
     "evidence": ..., "verdict": "SUPPORTS" | "REFUTES" | "NEI" | null}

Relation records reference rows of the ``entities`` array. All offsets are
counted in Unicode scalar values; a loader flag reinterprets byte offsets
for corpora that were exported with byte positions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Collection, Iterable, Mapping, Sequence

from .errors import CorpusFormatError, InputError, UnknownLabelError

BEAR = "BEAR"
COVERT = "COVERT"

COVERT_CLASSES = ("Medical Condition", "Symptom/Side-effect", "Treatment", "OTHER")

# cross-dataset class alignment; targets are the shared recognizer scheme
_COVERT_TO_BEAR = {
    "Medical Condition": "med_C",
    "Symptom/Side-effect": "med_C",
    "Treatment": "treat_therapy",
    "OTHER": "other",
}
_MAPPED_BEAR_NAMES = frozenset(_COVERT_TO_BEAR.values())

IGNORED_NAME = "__ignored__"


class VerdictLabel(Enum):
    SUPPORTS = "SUPPORTS"
    REFUTES = "REFUTES"
    NEI = "NEI"

    @classmethod
    def parse(cls, value: str) -> "VerdictLabel":
        try:
            return cls(value)
        except ValueError:
            raise InputError(f"unknown verdict label: {value!r}") from None


@dataclass(frozen=True)
class EntityClass:
    scheme: str  # BEAR or COVERT
    name: str

    @property
    def ignored(self) -> bool:
        return self.name == IGNORED_NAME


#: marker class for entities excluded from evaluation
IGNORED = EntityClass(BEAR, IGNORED_NAME)


@dataclass(frozen=True)
class EntitySpan:
    start: int  # inclusive, Unicode scalar values
    end: int  # exclusive
    label: EntityClass
    surface: str


@dataclass(frozen=True)
class RelationTriple:
    subject: EntitySpan
    relation_surface: str
    object: EntitySpan


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    gold_entities: tuple[EntitySpan, ...] = ()
    gold_relations: tuple[RelationTriple, ...] = ()
    evidence: str = ""
    gold_verdict: VerdictLabel | None = None


@dataclass
class ValidationReport:
    ok: bool
    issues: list[str] = field(default_factory=list)


def _span_issues(text: str, span: EntitySpan, what: str) -> list[str]:
    issues = []
    if not (0 <= span.start < span.end <= len(text)):
        issues.append(f"{what} out of bounds: ({span.start}, {span.end}) in text of length {len(text)}")
        return issues
    if not span.surface:
        issues.append(f"{what} has empty surface")
    if span.surface != text[span.start : span.end]:
        issues.append(
            f"{what} surface mismatch: {span.surface!r} != {text[span.start:span.end]!r} at ({span.start}, {span.end})"
        )
    return issues


def validate_document(doc: Document) -> ValidationReport:
    """Report-only check of every Document invariant."""
    issues: list[str] = []
    for i, span in enumerate(doc.gold_entities):
        issues.extend(_span_issues(doc.text, span, f"entity {i}"))
    for i, rel in enumerate(doc.gold_relations):
        for endpoint, name in ((rel.subject, "subject"), (rel.object, "object")):
            bad = _span_issues(doc.text, endpoint, f"relation {i} {name}")
            if bad:
                # a span that does not check out against this text belongs elsewhere
                issues.append(f"relation {i} {name}: foreign span")
                issues.extend(bad)
        if rel.subject == rel.object:
            issues.append(f"relation {i}: subject and object are the same span")
        if not rel.relation_surface:
            issues.append(f"relation {i}: empty relation surface")
    return ValidationReport(ok=not issues, issues=issues)


def map_entity_label(source: EntityClass, bear_classes: Collection[str] | None = None) -> EntityClass:
    """Map an entity class into the shared BEAR-side scheme.

    COVERT classes map onto their BEAR counterparts (two of them collapse
    into ``med_C``). BEAR classes without a COVERT counterpart map to the
    ignored marker, which callers drop before evaluation. Already-mapped
    BEAR names pass through unchanged, so the mapping is idempotent.

    When ``bear_classes`` is given, BEAR names outside that closed set (and
    outside the mapped targets) raise UnknownLabelError.
    """
    if source.scheme == COVERT:
        try:
            return EntityClass(BEAR, _COVERT_TO_BEAR[source.name])
        except KeyError:
            raise UnknownLabelError(f"unknown COVERT class: {source.name!r}") from None
    if source.scheme == BEAR:
        if source.name == IGNORED_NAME or source.name in _MAPPED_BEAR_NAMES:
            return source
        if bear_classes is not None and source.name not in bear_classes:
            raise UnknownLabelError(f"unknown BEAR class: {source.name!r}")
        return IGNORED
    raise UnknownLabelError(f"unknown scheme: {source.scheme!r}")


def load_scheme(path: str | Path) -> tuple[str, tuple[str, ...]]:
    """Read a scheme file: a ``scheme: NAME`` header, then one class per line."""
    path = Path(path)
    scheme_name: str | None = None
    classes: list[str] = []
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if scheme_name is None:
            if not line.lower().startswith("scheme:"):
                raise CorpusFormatError(f"{path}: line {line_no}: expected 'scheme: NAME' header")
            scheme_name = line.split(":", 1)[1].strip()
            continue
        classes.append(line)
    if scheme_name is None:
        raise CorpusFormatError(f"{path}: missing scheme header")
    return scheme_name, tuple(classes)


def _byte_to_char_map(text: str) -> dict[int, int]:
    mapping = {}
    byte_pos = 0
    for char_pos, ch in enumerate(text):
        mapping[byte_pos] = char_pos
        byte_pos += len(ch.encode("utf-8"))
    mapping[byte_pos] = len(text)
    return mapping


def _parse_entity(
    rec: Mapping,
    text: str,
    scheme: str,
    class_names: Collection[str] | None,
    where: str,
    byte_map: dict[int, int] | None,
) -> EntitySpan:
    try:
        start, end, label = int(rec["start"]), int(rec["end"]), str(rec["label"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusFormatError(f"{where}: bad entity record: {exc}") from None
    if byte_map is not None:
        try:
            start, end = byte_map[start], byte_map[end]
        except KeyError:
            raise CorpusFormatError(f"{where}: byte offset not on a character boundary") from None
    if scheme == COVERT and label not in COVERT_CLASSES:
        raise UnknownLabelError(f"{where}: unknown COVERT class: {label!r}")
    if scheme == BEAR and class_names is not None and label not in class_names:
        raise UnknownLabelError(f"{where}: unknown BEAR class: {label!r}")
    surface = rec.get("surface")
    if surface is None:
        if not (0 <= start < end <= len(text)):
            raise CorpusFormatError(f"{where}: span ({start}, {end}) out of bounds")
        surface = text[start:end]
    return EntitySpan(start=start, end=end, label=EntityClass(scheme, label), surface=str(surface))


def load_documents(
    path: str | Path,
    scheme: str = COVERT,
    *,
    class_names: Collection[str] | None = None,
    byte_offsets: bool = False,
) -> list[Document]:
    """Load a line-delimited corpus; every document is fully validated.

    ``scheme`` names the label scheme of the entity annotations. Pass
    ``byte_offsets=True`` for corpora whose offsets count UTF-8 bytes.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"corpus file not found: {path}")
    docs: list[Document] = []
    seen_ids: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}: line {line_no}: invalid JSON: {exc}") from None
            if not isinstance(rec, dict) or "id" not in rec or "text" not in rec:
                raise CorpusFormatError(f"{path}: line {line_no}: record needs 'id' and 'text'")
            doc_id, text = str(rec["id"]), str(rec["text"])
            if doc_id in seen_ids:
                raise CorpusFormatError(f"{path}: line {line_no}: duplicate document id {doc_id!r}")
            seen_ids.add(doc_id)
            byte_map = _byte_to_char_map(text) if byte_offsets else None
            entities = tuple(
                _parse_entity(e, text, scheme, class_names, f"{path}: document {doc_id!r}", byte_map)
                for e in rec.get("entities", ())
            )
            relations = []
            for r in rec.get("relations", ()):
                try:
                    subj = entities[int(r["subject_index"])]
                    obj = entities[int(r["object_index"])]
                    rel = str(r["relation"])
                except (KeyError, TypeError, ValueError, IndexError) as exc:
                    raise CorpusFormatError(
                        f"{path}: line {line_no}: bad relation record: {exc}"
                    ) from None
                relations.append(RelationTriple(subject=subj, relation_surface=rel, object=obj))
            verdict_raw = rec.get("verdict")
            verdict = VerdictLabel.parse(verdict_raw) if verdict_raw else None
            doc = Document(
                id=doc_id,
                text=text,
                gold_entities=entities,
                gold_relations=tuple(relations),
                evidence=str(rec.get("evidence", "") or ""),
                gold_verdict=verdict,
            )
            report = validate_document(doc)
            if not report.ok:
                raise CorpusFormatError(
                    f"{path}: document {doc_id!r}: " + "; ".join(report.issues)
                )
            docs.append(doc)
    return docs


def save_documents(docs: Iterable[Document], path: str | Path) -> None:
    """Write documents back to the line-delimited format (labels by name)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for doc in docs:
            entity_index = {span: i for i, span in enumerate(doc.gold_entities)}
            relations = []
            for rel in doc.gold_relations:
                try:
                    relations.append(
                        {
                            "subject_index": entity_index[rel.subject],
                            "relation": rel.relation_surface,
                            "object_index": entity_index[rel.object],
                        }
                    )
                except KeyError:
                    raise InputError(
                        f"document {doc.id!r}: relation endpoint not among gold entities"
                    ) from None
            rec = {
                "id": doc.id,
                "text": doc.text,
                "entities": [
                    {"start": s.start, "end": s.end, "label": s.label.name, "surface": s.surface}
                    for s in doc.gold_entities
                ],
                "relations": relations,
                "evidence": doc.evidence,
                "verdict": doc.gold_verdict.value if doc.gold_verdict else None,
            }
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
