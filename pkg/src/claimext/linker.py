"""Mention normalization against a local concept inventory.

Aliases and mentions are case-folded, whitespace-collapsed, wrapped in
boundary markers and cut into character 3-grams. Aliases become unit-norm
TF-IDF vectors (idf = ln((1+N)/(1+df)) + 1 over the N aliases); a query is
vectorized with the same weights and candidates are ranked by cosine
similarity via an inverted n-gram index. The scan is exact: aliases sharing
no 3-gram with the mention have cosine 0 and are never candidates, so they
cannot surface even at threshold 0.

Strings shorter than 3 characters produce no n-grams; such aliases are
flagged at build time and their concepts stay reachable through their other
aliases only.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import Document
from .errors import CorpusFormatError, InputError

_BOUNDARY_START = "\x02"
_BOUNDARY_END = "\x03"
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class ConceptEntry:
    concept_id: str
    canonical_name: str
    aliases: tuple[str, ...]


@dataclass(frozen=True)
class CandidateLink:
    concept_id: str
    canonical_name: str
    score: float


@dataclass
class LinkIndex:
    vocabulary: dict[str, int]
    idf: list[float]
    alias_vectors: list[dict[int, float]]  # unit L2 norm (or empty for short aliases)
    alias_to_concept: list[str]
    concepts: dict[str, ConceptEntry]
    postings: dict[int, list[tuple[int, float]]]
    short_aliases: list[str] = field(default_factory=list)  # flagged: no 3-grams


def char_trigrams(text: str) -> list[str]:
    """Boundary-marked character 3-grams of the normalized text."""
    normalized = _WS_RE.sub(" ", text.casefold().strip())
    if len(normalized) < 3:
        return []
    padded = _BOUNDARY_START + normalized + _BOUNDARY_END
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


def load_kb(path: str | Path) -> list[ConceptEntry]:
    """Load a concept file: JSON lines ``{"concept_id", "canonical_name", "aliases"}``.

    The canonical name is added to the alias list when missing, so it is
    always indexed.
    """
    path = Path(path)
    entries: list[ConceptEntry] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                concept_id = str(rec["concept_id"])
                canonical = str(rec["canonical_name"])
                aliases = [str(a) for a in rec.get("aliases", ())]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusFormatError(f"{path}: line {line_no}: bad concept record: {exc}") from None
            if concept_id in seen:
                raise CorpusFormatError(f"{path}: line {line_no}: duplicate concept id {concept_id!r}")
            seen.add(concept_id)
            if canonical not in aliases:
                aliases.insert(0, canonical)
            entries.append(ConceptEntry(concept_id, canonical, tuple(aliases)))
    if not entries:
        raise InputError(f"{path}: empty knowledge base")
    return entries


def build_index(kb: Sequence[ConceptEntry]) -> LinkIndex:
    """Build the immutable TF-IDF retrieval index over every alias."""
    if not kb:
        raise InputError("cannot build a link index from an empty knowledge base")
    alias_texts: list[str] = []
    alias_to_concept: list[str] = []
    concepts: dict[str, ConceptEntry] = {}
    for entry in kb:
        if entry.concept_id in concepts:
            raise InputError(f"duplicate concept id: {entry.concept_id!r}")
        concepts[entry.concept_id] = entry
        names = list(entry.aliases)
        if entry.canonical_name not in names:
            names.insert(0, entry.canonical_name)
        for alias in names:
            alias_texts.append(alias)
            alias_to_concept.append(entry.concept_id)

    gram_lists = [char_trigrams(a) for a in alias_texts]
    df: dict[str, int] = {}
    for grams in gram_lists:
        for gram in set(grams):
            df[gram] = df.get(gram, 0) + 1
    vocabulary = {gram: i for i, gram in enumerate(sorted(df))}
    n_aliases = len(alias_texts)
    idf = [0.0] * len(vocabulary)
    for gram, dim in vocabulary.items():
        idf[dim] = math.log((1 + n_aliases) / (1 + df[gram])) + 1.0

    alias_vectors: list[dict[int, float]] = []
    short_aliases: list[str] = []
    for alias, grams in zip(alias_texts, gram_lists):
        if not grams:
            short_aliases.append(alias)
            alias_vectors.append({})
            continue
        counts: dict[int, int] = {}
        for gram in grams:
            dim = vocabulary[gram]
            counts[dim] = counts.get(dim, 0) + 1
        vec = {dim: count * idf[dim] for dim, count in counts.items()}
        norm = math.sqrt(sum(w * w for w in vec.values()))
        alias_vectors.append({dim: w / norm for dim, w in vec.items()})

    postings: dict[int, list[tuple[int, float]]] = {}
    for row, vec in enumerate(alias_vectors):
        for dim, weight in vec.items():
            postings.setdefault(dim, []).append((row, weight))
    return LinkIndex(
        vocabulary=vocabulary,
        idf=idf,
        alias_vectors=alias_vectors,
        alias_to_concept=alias_to_concept,
        concepts=concepts,
        postings=postings,
        short_aliases=short_aliases,
    )


def _query_vector(mention: str, index: LinkIndex) -> dict[int, float]:
    counts: dict[int, int] = {}
    for gram in char_trigrams(mention):
        dim = index.vocabulary.get(gram)
        if dim is None:  # grams unseen in the alias corpus cannot match anything
            continue
        counts[dim] = counts.get(dim, 0) + 1
    if not counts:
        return {}
    vec = {dim: count * index.idf[dim] for dim, count in counts.items()}
    norm = math.sqrt(sum(w * w for w in vec.values()))
    return {dim: w / norm for dim, w in vec.items()}


def link(mention: str, index: LinkIndex, k: int = 5, threshold: float = 0.7) -> list[CandidateLink]:
    """Rank concepts for a mention; empty result means "could not be linked".

    The k highest-cosine aliases are selected (ties broken by concept id,
    then alias order), deduplicated by concept keeping each concept's best
    alias score, and filtered to ``score >= threshold``.
    """
    if k <= 0:
        raise InputError(f"k must be positive, got {k}")
    query = _query_vector(mention, index)
    if not query:
        return []
    scores: dict[int, float] = {}
    for dim, q_weight in query.items():
        for row, a_weight in index.postings.get(dim, ()):
            scores[row] = scores.get(row, 0.0) + q_weight * a_weight
    ranked = sorted(
        scores.items(), key=lambda item: (-item[1], index.alias_to_concept[item[0]], item[0])
    )
    out: list[CandidateLink] = []
    seen_concepts: set[str] = set()
    for row, score in ranked[:k]:
        concept_id = index.alias_to_concept[row]
        if concept_id in seen_concepts:
            continue
        seen_concepts.add(concept_id)
        if score >= threshold:
            out.append(CandidateLink(concept_id, index.concepts[concept_id].canonical_name, score))
    return out


def normalize_mention(mention: str, index: LinkIndex, threshold: float = 0.7) -> str:
    """Replace a mention with its top concept's canonical name (casefolded).

    Mentions that cannot be linked come back unchanged.
    """
    candidates = link(mention, index, k=1, threshold=threshold)
    if not candidates:
        return mention
    return candidates[0].canonical_name.casefold()


# -- abbreviation resolution -------------------------------------------------

_PAREN_RE = re.compile(r"\(([^()]{2,10})\)")


def _candidate_short_form(text: str) -> bool:
    if not text or not text[0].isalnum():
        return False
    if len(text.split()) > 2:
        return False
    return any(ch.isalpha() for ch in text)


def _find_long_form(short: str, window: str) -> str | None:
    """Right-to-left alignment of short-form characters onto the window.

    Every short-form character must appear in order; its first character
    must sit at the start of a word.
    """
    s_idx = len(short) - 1
    w_idx = len(window) - 1
    while s_idx >= 0:
        ch = short[s_idx].casefold()
        if not ch.isalnum():
            s_idx -= 1
            continue
        while w_idx >= 0 and (
            window[w_idx].casefold() != ch
            or (s_idx == 0 and w_idx > 0 and window[w_idx - 1].isalnum())
        ):
            w_idx -= 1
        if w_idx < 0:
            return None
        s_idx -= 1
        w_idx -= 1
    return window[w_idx + 1 :]


def resolve_abbreviations(doc: Document) -> dict[str, str]:
    """Detect ``long form (SF)`` definitions in the document text.

    Returns a mapping from each detected short form to its long form;
    callers expand mentions equal to a short form before linking them.
    """
    out: dict[str, str] = {}
    for match in _PAREN_RE.finditer(doc.text):
        short = match.group(1).strip()
        if not _candidate_short_form(short) or short in out:
            continue
        before = doc.text[: match.start()].rstrip()
        words = before.split()
        max_words = min(len(short) + 5, len(short) * 2)
        window_words = words[-max_words:] if max_words else []
        if not window_words:
            continue
        window = " ".join(window_words)
        long_form = _find_long_form(short, window)
        if long_form is None:
            continue
        long_form = long_form.strip()
        if len(long_form) <= len(short) or short in long_form.split():
            continue
        out[short] = long_form
    return out


def expanding_normalizer(
    index: LinkIndex,
    abbreviations: Mapping[str, str] | None = None,
    threshold: float = 0.7,
) -> Callable[[str], str]:
    """Normalizer that expands known short forms before linking."""
    abbrev = dict(abbreviations or {})

    def _normalize(mention: str) -> str:
        expanded = abbrev.get(mention, mention)
        normalized = normalize_mention(expanded, index, threshold)
        if normalized == expanded and expanded != mention:
            # the expansion itself could not be linked: fall back to the mention
            return mention
        return normalized

    return _normalize


@dataclass(frozen=True)
class CoverageReport:
    linked_count: int
    total_count: int
    fraction: float
    empty: bool = False  # warning flag: no outcomes at all


def linking_coverage(outcomes: Iterable[bool]) -> CoverageReport:
    """Fraction of mentions that linked to any concept."""
    linked = total = 0
    for outcome in outcomes:
        total += 1
        linked += bool(outcome)
    if total == 0:
        return CoverageReport(0, 0, 0.0, empty=True)
    return CoverageReport(linked, total, linked / total)
