"""Claim-evidence verdict checking and its by-proxy evaluation metrics.

An NEI prediction counts as an abstention: it never enters the precision
denominator but the gold record still counts toward recall. This is the
only reading under which precision can sit far above recall, as the
reference results show.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import VerdictLabel
from .errors import InputError
from .textutil import content_tokens, negation_count
from .wire import VerifierClient

TOY = "toy"
EXTERNAL = "external"

MICRO = "micro"
MACRO = "macro"


@dataclass(frozen=True)
class VerifierHandle:
    kind: str  # toy | external
    endpoint: str | None = None
    overlap_floor: float = 0.4  # toy verifier knob

    def __post_init__(self):
        if self.kind not in (TOY, EXTERNAL):
            raise InputError(f"unknown verifier kind: {self.kind!r}")
        if self.kind == EXTERNAL and not self.endpoint:
            raise InputError("external verifier handle needs an endpoint")

    @classmethod
    def from_spec(cls, spec: str, overlap_floor: float = 0.4) -> "VerifierHandle":
        if spec == TOY:
            return cls(kind=TOY, overlap_floor=overlap_floor)
        return cls(kind=EXTERNAL, endpoint=spec)


@dataclass(frozen=True)
class VerdictRecord:
    doc_id: str
    claim_text: str
    evidence_text: str
    predicted: VerdictLabel
    gold: VerdictLabel


@dataclass(frozen=True)
class VerdictCounts:
    n_gold_sr: int
    n_pred_sr: int
    n_correct_sr: int
    n_pred_nei: int


@dataclass(frozen=True)
class VerdictScore:
    precision: float
    recall: float
    f1: float
    counts: VerdictCounts


def toy_verifier(claim: str, evidence: str, overlap_floor: float = 0.4) -> VerdictLabel:
    """Deterministic stand-in for a pretrained fact-checker.

    Content-token Jaccard overlap below the floor gives NEI. At or above
    the floor, equal negation-marker parity between claim and evidence
    gives SUPPORTS, unequal parity gives REFUTES.
    """
    claim_tokens = content_tokens(claim)
    evidence_tokens = content_tokens(evidence)
    union = claim_tokens | evidence_tokens
    overlap = len(claim_tokens & evidence_tokens) / len(union) if union else 0.0
    if overlap < overlap_floor:
        return VerdictLabel.NEI
    if negation_count(claim) % 2 != negation_count(evidence) % 2:
        return VerdictLabel.REFUTES
    return VerdictLabel.SUPPORTS


def check(claim: str, evidence: str, verifier: VerifierHandle) -> VerdictLabel:
    """Obtain a verdict for one claim-evidence pair."""
    if not claim.strip():
        raise InputError("cannot check an empty claim")
    if verifier.kind == TOY:
        return toy_verifier(claim, evidence, overlap_floor=verifier.overlap_floor)
    assert verifier.endpoint is not None
    with VerifierClient(verifier.endpoint) as client:
        return VerdictLabel(client.verify(claim, evidence))


def check_records(
    pairs: Sequence[tuple[str, str, str, VerdictLabel]],
    verifier: VerifierHandle,
) -> list[VerdictRecord]:
    """Check (doc_id, claim, evidence, gold) tuples, reusing one connection."""
    records: list[VerdictRecord] = []
    if verifier.kind == TOY:
        for doc_id, claim, evidence, gold in pairs:
            if not claim.strip():
                raise InputError(f"document {doc_id!r}: cannot check an empty claim")
            predicted = toy_verifier(claim, evidence, overlap_floor=verifier.overlap_floor)
            records.append(VerdictRecord(doc_id, claim, evidence, predicted, gold))
        return records
    assert verifier.endpoint is not None
    with VerifierClient(verifier.endpoint) as client:
        for doc_id, claim, evidence, gold in pairs:
            if not claim.strip():
                raise InputError(f"document {doc_id!r}: cannot check an empty claim")
            predicted = VerdictLabel(client.verify(claim, evidence))
            records.append(VerdictRecord(doc_id, claim, evidence, predicted, gold))
    return records


def _f1(precision: float, recall: float) -> float:
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


def evaluate_verdicts(records: Sequence[VerdictRecord], average: str = MICRO) -> VerdictScore:
    """Score predicted verdicts with NEI as abstention.

    The default micro average implements: precision = correct / predicted
    SUPPORTS-or-REFUTES, recall = correct / gold SUPPORTS-or-REFUTES. The
    macro variant averages per-label precision/recall/F1 over the two
    committal labels instead; counts are identical either way.
    """
    if not records:
        raise InputError("no verdict records to evaluate")
    if average not in (MICRO, MACRO):
        raise InputError(f"unknown averaging mode: {average!r}")
    committal = (VerdictLabel.SUPPORTS, VerdictLabel.REFUTES)
    n_gold_sr = sum(1 for r in records if r.gold in committal)
    n_pred_sr = sum(1 for r in records if r.predicted in committal)
    n_pred_nei = sum(1 for r in records if r.predicted is VerdictLabel.NEI)
    n_correct = sum(1 for r in records if r.predicted in committal and r.predicted == r.gold)
    counts = VerdictCounts(n_gold_sr, n_pred_sr, n_correct, n_pred_nei)
    if average == MICRO:
        precision = n_correct / n_pred_sr if n_pred_sr else 0.0
        recall = n_correct / n_gold_sr if n_gold_sr else 0.0
        return VerdictScore(precision, recall, _f1(precision, recall), counts)
    per_label = []
    for label in committal:
        pred_l = sum(1 for r in records if r.predicted is label)
        gold_l = sum(1 for r in records if r.gold is label)
        correct_l = sum(1 for r in records if r.predicted is label and r.gold is label)
        p = correct_l / pred_l if pred_l else 0.0
        r = correct_l / gold_l if gold_l else 0.0
        per_label.append((p, r, _f1(p, r)))
    precision = sum(p for p, _, _ in per_label) / len(per_label)
    recall = sum(r for _, r, _ in per_label) / len(per_label)
    f1 = sum(f for _, _, f in per_label) / len(per_label)
    return VerdictScore(precision, recall, f1, counts)


PERCENT = "percent"
UNIT = "unit"

_SCALE_RANGES = {PERCENT: (0.0, 100.0), UNIT: (0.0, 1.0)}


def delta_full(f1_variant: float, f1_full: float, scale: str = PERCENT) -> float:
    """F1 difference between a claim-input variant and the full-post input."""
    try:
        lo, hi = _SCALE_RANGES[scale]
    except KeyError:
        raise InputError(f"unknown scale: {scale!r}") from None
    for value in (f1_variant, f1_full):
        if not lo <= value <= hi:
            raise InputError(
                f"value {value} outside the {scale} scale [{lo}, {hi}]; mixed scales?"
            )
    return f1_variant - f1_full
