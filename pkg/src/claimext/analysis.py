"""Prediction-comparison statistics between two verdict runs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .corpus import VerdictLabel

LABELS = (VerdictLabel.SUPPORTS, VerdictLabel.REFUTES, VerdictLabel.NEI)
_LABEL_INDEX = {label: i for i, label in enumerate(LABELS)}


def label_distribution(preds: Mapping[str, VerdictLabel]) -> dict[VerdictLabel, int]:
    """Count predictions per label; every label is present (zero-filled)."""
    counts = {label: 0 for label in LABELS}
    for label in preds.values():
        counts[label] += 1
    return counts


@dataclass(frozen=True)
class TransitionMatrix:
    counts: tuple[tuple[int, int, int], ...]  # rows: run A label, cols: run B label
    n_only_a: int  # documents present only in run A (no comparison possible)

    def count(self, a: VerdictLabel, b: VerdictLabel) -> int:
        return self.counts[_LABEL_INDEX[a]][_LABEL_INDEX[b]]

    def diagonal_total(self) -> int:
        return sum(self.counts[i][i] for i in range(len(LABELS)))

    def off_diagonal_total(self) -> int:
        return sum(
            self.counts[i][j] for i in range(len(LABELS)) for j in range(len(LABELS)) if i != j
        )

    def row_sums(self) -> dict[VerdictLabel, int]:
        return {label: sum(self.counts[i]) for i, label in enumerate(LABELS)}

    def col_sums(self) -> dict[VerdictLabel, int]:
        return {
            label: sum(self.counts[i][j] for i in range(len(LABELS)))
            for j, label in enumerate(LABELS)
        }


def transition_matrix(
    run_a: Mapping[str, VerdictLabel],
    run_b: Mapping[str, VerdictLabel],
) -> TransitionMatrix:
    """Label-transition counts over the documents both runs predicted.

    Documents present only in run A (e.g. the pipeline produced no claim
    for them) are tallied in ``n_only_a`` and kept out of the matrix.
    """
    cells = [[0, 0, 0] for _ in LABELS]
    n_only_a = 0
    for doc_id, label_a in run_a.items():
        label_b = run_b.get(doc_id)
        if label_b is None:
            n_only_a += 1
            continue
        cells[_LABEL_INDEX[label_a]][_LABEL_INDEX[label_b]] += 1
    return TransitionMatrix(
        counts=tuple(tuple(row) for row in cells),
        n_only_a=n_only_a,
    )
