"""Main-claim selection: candidate scoring, argmax pick, random baseline.

The built-in scorer is a deterministic, training-free lexical model: a
logistic squash over causal-cue hits, content-token presence, declarative
form and a length penalty. A fine-tuned classifier can take its place via
the scorer wire protocol (see ``wire``).
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, replace
from typing import Sequence

from .claimgen import ClaimCandidate, provenance_onset
from .errors import InputError
from .textutil import STOPWORDS, word_tokens
from .wire import ScorerClient

BUILTIN_LEXICAL = "builtin_lexical"
EXTERNAL = "external"


@dataclass(frozen=True)
class ScorerHandle:
    kind: str  # builtin_lexical | external
    endpoint: str | None = None
    batch_size: int = 32

    def __post_init__(self):
        if self.kind not in (BUILTIN_LEXICAL, EXTERNAL):
            raise InputError(f"unknown scorer kind: {self.kind!r}")
        if self.kind == EXTERNAL and not self.endpoint:
            raise InputError("external scorer handle needs an endpoint")

    @classmethod
    def from_spec(cls, spec: str, batch_size: int = 32) -> "ScorerHandle":
        if spec in ("builtin", BUILTIN_LEXICAL):
            return cls(kind=BUILTIN_LEXICAL)
        return cls(kind=EXTERNAL, endpoint=spec, batch_size=batch_size)


@dataclass(frozen=True)
class ScoredCandidate:
    candidate: ClaimCandidate
    claim_probability: float


CAUSAL_CUES = frozenset(
    """
    cause causes caused causing cure cures cured prevent prevents prevented
    increase increases increased reduce reduces reduced treat treats treated
    improve improves improved worsen worsens worsened trigger triggers
    triggered linked induces induced
    """.split()
)

CAUSAL_PHRASES = (
    "leads to",
    "lead to",
    "led to",
    "results in",
    "result in",
    "due to",
    "because of",
    "side effect",
    "side effects",
    "risk of",
    "protects against",
)

_QUESTION_LEADS = frozenset(
    """
    who what when where why how which whose whom do does did is are was were
    can could will would should shall may might am
    """.split()
)

_BIAS = -2.5
_W_CUE = 1.5
_W_CONTENT = 1.0
_W_DECLARATIVE = 1.0
_LENGTH_PENALTY = 0.05
_MAX_PLAIN_TOKENS = 40


def builtin_lexical_score(text: str) -> float:
    """Deterministic claim-likelihood score in [0, 1]."""
    tokens = word_tokens(text)
    folded = " ".join(tokens)
    cue_hits = sum(1 for t in tokens if t in CAUSAL_CUES)
    cue_hits += sum(1 for phrase in CAUSAL_PHRASES if phrase in folded)
    content = [t for t in tokens if t not in STOPWORDS]
    has_content = len(content) >= 2
    declarative = bool(tokens) and tokens[0] not in _QUESTION_LEADS and not text.rstrip().endswith("?")
    z = (
        _BIAS
        + _W_CUE * min(cue_hits, 3)
        + _W_CONTENT * has_content
        + _W_DECLARATIVE * declarative
        - _LENGTH_PENALTY * max(0, len(tokens) - _MAX_PLAIN_TOKENS)
    )
    return 1.0 / (1.0 + math.exp(-z))


def score_candidates(
    candidates: Sequence[ClaimCandidate],
    scorer: ScorerHandle,
    client: ScorerClient | None = None,
) -> list[ScoredCandidate]:
    """Attach a claim probability to every candidate, order preserved.

    Pass an open ``ScorerClient`` to reuse one external connection across
    many calls; otherwise a fresh one is opened and closed per call.
    """
    if not candidates:
        raise InputError("no candidates to score")
    if scorer.kind == BUILTIN_LEXICAL:
        probs = [builtin_lexical_score(c.text) for c in candidates]
    elif client is not None:
        probs = client.score_texts([c.text for c in candidates])
    else:
        assert scorer.endpoint is not None
        with ScorerClient(scorer.endpoint, batch_size=scorer.batch_size) as client:
            probs = client.score_texts([c.text for c in candidates])
    return [
        ScoredCandidate(candidate=replace(c, score=p), claim_probability=p)
        for c, p in zip(candidates, probs)
    ]


def select_main_claim(scored: Sequence[ScoredCandidate]) -> ClaimCandidate:
    """Argmax of claim probability; ties go to the earlier onset, then to
    the shorter text, then lexicographically."""
    if not scored:
        raise InputError("no scored candidates to select from")
    best = min(
        scored,
        key=lambda sc: (
            -sc.claim_probability,
            provenance_onset(sc.candidate),
            len(sc.candidate.text),
            sc.candidate.text,
        ),
    )
    return best.candidate


def select_random(candidates: Sequence[ClaimCandidate], seed: int) -> ClaimCandidate:
    """Uniform random baseline pick.

    The generator is Python's ``random.Random`` (Mersenne Twister), seeded
    with ``seed``; the same seed and candidate order always pick the same
    candidate.
    """
    if not candidates:
        raise InputError("no candidates to select from")
    return candidates[random.Random(seed).randrange(len(candidates))]


def derive_doc_seed(run_seed: int, doc_id: str) -> int:
    """Per-document seed so random picks do not depend on corpus order."""
    digest = hashlib.sha256(f"{run_seed}:{doc_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
