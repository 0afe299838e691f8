"""Access to the shipped reference evaluation results and their checks.

The data file stores published verifier results per model and claim-input
variant, the prediction-comparison counts for the healthver model, and one
flagged cell whose printed average is arithmetically inconsistent with its
own rows (the recomputed mean is stored alongside).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .corpus import VerdictLabel
from .verdict import PERCENT, delta_full

COLUMNS = ("precision", "recall", "f1")


def load_reference_results() -> dict:
    path = resources.files("claimext").joinpath("data/reference_results.json")
    return json.loads(path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class AverageCheck:
    variant: str
    column: str
    printed: float
    row_mean: float
    ok: bool
    flagged: bool  # printed value known-inconsistent; checked against the recorded mean


def check_average_rows(benchmark: dict, tol: float = 0.05) -> list[AverageCheck]:
    """Verify that each variant's average row is the mean of its model rows.

    Cells listed under ``average_deviations`` are known printed
    inconsistencies; for those the recomputed mean must match the recorded
    ``row_mean`` instead.
    """
    checks: list[AverageCheck] = []
    for variant_name, variant in benchmark["variants"].items():
        rows = variant["rows"]
        printed = variant["average"]
        deviations = variant.get("average_deviations", {})
        for idx, column in enumerate(COLUMNS):
            mean = sum(row[idx] for row in rows.values()) / len(rows)
            known = deviations.get(column)
            if known is None:
                ok = abs(mean - printed[idx]) <= tol
                flagged = False
            else:
                ok = abs(mean - known["row_mean"]) <= 0.005 and printed[idx] == known["printed"]
                flagged = True
            checks.append(AverageCheck(variant_name, column, printed[idx], mean, ok, flagged))
    return checks


@dataclass(frozen=True)
class DeltaCheck:
    variant: str
    model: str
    printed: float
    computed: float
    ok: bool


def check_delta_cells(benchmark: dict, tol: float = 0.05) -> list[DeltaCheck]:
    """Recompute every stored delta cell from its F1 pair via delta_full."""
    full = benchmark["variants"][benchmark["full_variant"]]
    checks: list[DeltaCheck] = []
    for variant_name, variant in benchmark["variants"].items():
        expected = variant.get("delta_full")
        if not expected:
            continue
        for model, printed in expected.items():
            if model == "average":
                f1_variant, f1_full = variant["average"][2], full["average"][2]
            else:
                f1_variant, f1_full = variant["rows"][model][2], full["rows"][model][2]
            computed = delta_full(f1_variant, f1_full, scale=PERCENT)
            checks.append(
                DeltaCheck(variant_name, model, printed, computed, abs(computed - printed) <= tol)
            )
    return checks


def comparison_runs(comparison: dict) -> tuple[dict[str, VerdictLabel], dict[str, VerdictLabel]]:
    """Materialize the stored prediction comparison as two doc-id -> label maps."""
    run_a: dict[str, VerdictLabel] = {}
    run_b: dict[str, VerdictLabel] = {}
    counter = 0

    def _next_id() -> str:
        nonlocal counter
        counter += 1
        return f"doc-{counter:04d}"

    for a_name, row in comparison["transitions"].items():
        for b_name, count in row.items():
            for _ in range(count):
                doc_id = _next_id()
                run_a[doc_id] = VerdictLabel(a_name)
                run_b[doc_id] = VerdictLabel(b_name)
    for a_name, count in comparison["only_in_a"].items():
        for _ in range(count):
            run_a[_next_id()] = VerdictLabel(a_name)
    return run_a, run_b
