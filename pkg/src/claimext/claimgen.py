"""Claim candidate construction from entity pairs and relation triples.

``condense_seq`` cuts, for every pair of recognized entities, the document
substring from the first entity's onset to the second entity's offset.
``condense_triple`` concatenates subject, relation surface and object of an
annotated relation. Either form can carry normalized entity text.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .corpus import Document, EntitySpan, RelationTriple
from .errors import InputError

Normalizer = Callable[[str], str]


@dataclass(frozen=True)
class PairSpan:
    first: EntitySpan
    second: EntitySpan


@dataclass(frozen=True)
class TripleSource:
    triple: RelationTriple


@dataclass(frozen=True)
class FullText:
    """Provenance marker for claims that are the unchanged document text."""


@dataclass(frozen=True)
class ClaimCandidate:
    doc_id: str
    text: str
    provenance: PairSpan | TripleSource | FullText
    normalized: bool = False
    score: float | None = None


@dataclass(frozen=True)
class PairClaims:
    candidates: tuple[ClaimCandidate, ...]
    skipped: bool  # true when fewer than two entities were available


def provenance_onset(candidate: ClaimCandidate) -> int:
    """Character onset used for deterministic tie-breaking."""
    prov = candidate.provenance
    if isinstance(prov, PairSpan):
        return prov.first.start
    if isinstance(prov, TripleSource):
        return prov.triple.subject.start
    return 0


def condense_seq(doc: Document, entities: Sequence[EntitySpan]) -> PairClaims:
    """One candidate per unordered entity pair, ordered by onset.

    Entities are deduplicated by (start, end) and sorted internally, so the
    result does not depend on input order. Pairs whose extracted span
    coincides with an earlier pair's span are dropped. A document with
    fewer than two distinct entity spans produces no candidates and is
    marked skipped.
    """
    unique: dict[tuple[int, int], EntitySpan] = {}
    for span in entities:
        unique.setdefault((span.start, span.end), span)
    ordered = [unique[key] for key in sorted(unique)]
    if len(ordered) < 2:
        return PairClaims(candidates=(), skipped=True)
    candidates: list[ClaimCandidate] = []
    seen_spans: set[tuple[int, int]] = set()
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            first, second = ordered[i], ordered[j]
            claim_span = (first.start, second.end)
            if claim_span in seen_spans:
                continue
            seen_spans.add(claim_span)
            candidates.append(
                ClaimCandidate(
                    doc_id=doc.id,
                    text=doc.text[first.start : second.end],
                    provenance=PairSpan(first=first, second=second),
                )
            )
    return PairClaims(candidates=tuple(candidates), skipped=False)


def condense_triple(
    doc: Document,
    triple: RelationTriple,
    normalizer: Normalizer | None = None,
) -> ClaimCandidate:
    """Build a claim from an annotated relation, optionally normalized.

    The three parts are joined with single spaces; no other whitespace or
    inflection repair happens.
    """
    if not triple.relation_surface.strip():
        raise InputError(f"document {doc.id!r}: relation has no surface text")
    subject_text = triple.subject.surface
    object_text = triple.object.surface
    if normalizer is not None:
        subject_text = normalizer(subject_text)
        object_text = normalizer(object_text)
    return ClaimCandidate(
        doc_id=doc.id,
        text=" ".join((subject_text, triple.relation_surface, object_text)),
        provenance=TripleSource(triple=triple),
        normalized=normalizer is not None,
    )


def apply_normalization(candidate: ClaimCandidate, normalizer: Normalizer) -> ClaimCandidate:
    """Replace the candidate's entity surfaces with normalized mentions.

    Replacement is anchored at the entity offsets recorded in the
    provenance, never free-text search. Pair candidates must still carry
    their original text (normalized=False); triple candidates are rebuilt
    from the relation's surfaces.
    """
    prov = candidate.provenance
    if isinstance(prov, TripleSource):
        triple = prov.triple
        return replace(
            candidate,
            text=" ".join(
                (
                    normalizer(triple.subject.surface),
                    triple.relation_surface,
                    normalizer(triple.object.surface),
                )
            ),
            normalized=True,
        )
    if isinstance(prov, PairSpan):
        if candidate.normalized:
            raise InputError("pair candidate is already normalized; offsets no longer apply")
        base = prov.first.start
        text = candidate.text
        # right-to-left so the first replacement's offsets stay valid
        second_lo, second_hi = prov.second.start - base, prov.second.end - base
        text = text[:second_lo] + normalizer(prov.second.surface) + text[second_hi:]
        first_lo, first_hi = prov.first.start - base, prov.first.end - base
        if first_hi <= second_lo:
            text = text[:first_lo] + normalizer(prov.first.surface) + text[first_hi:]
        return replace(candidate, text=text, normalized=True)
    raise InputError("cannot normalize a full-text claim: no entity provenance")
