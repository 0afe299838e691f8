"""Small tokenization helpers shared across modules.

Two tokenizers are deliberately kept separate: entity recognition works on
maximal alphanumeric runs (punctuation is a hard boundary), while the claim
scorer and the toy verifier keep internal apostrophes so that contracted
negations ("don't") survive as single tokens.
"""

from __future__ import annotations

import re

# maximal runs of alphanumerics; the entity-matching token unit
_ALNUM_RE = re.compile(r"[0-9A-Za-z]+")

# word tokens that keep internal apostrophes ("don't" stays whole)
_WORD_RE = re.compile(r"[0-9A-Za-z]+(?:'[0-9A-Za-z]+)*")

STOPWORDS = frozenset(
    """
    a an the and or but if then than so as of in on at to for with by from
    is are was were be been being am do does did have has had this that it
    its they them he she we you i me my your their his her our us
    """.split()
)

NEGATION_TOKENS = frozenset(("not", "no", "never", "don't", "doesn't"))


def alnum_token_spans(text: str) -> list[tuple[int, int]]:
    """Offsets of maximal alphanumeric runs, in order."""
    return [(m.start(), m.end()) for m in _ALNUM_RE.finditer(text)]


def word_tokens(text: str) -> list[str]:
    """Casefolded apostrophe-aware word tokens."""
    return [m.group(0) for m in _WORD_RE.finditer(text.casefold())]


def content_tokens(text: str) -> set[str]:
    """Token set with stopwords and negation markers removed."""
    return {t for t in word_tokens(text) if t not in STOPWORDS and t not in NEGATION_TOKENS}


def negation_count(text: str) -> int:
    return sum(1 for t in word_tokens(text) if t in NEGATION_TOKENS)
