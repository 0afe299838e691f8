"""Toy verifier, external verifier protocol, abstention metrics, deltas."""

import sys

import pytest
from hypothesis import given, settings, strategies as st

from claimext.corpus import VerdictLabel
from claimext.errors import InputError, ProtocolError
from claimext.refdata import check_average_rows, check_delta_cells, load_reference_results
from claimext.verdict import (
    VerdictRecord,
    VerifierHandle,
    check,
    delta_full,
    evaluate_verdicts,
    toy_verifier,
)

S, R, N = VerdictLabel.SUPPORTS, VerdictLabel.REFUTES, VerdictLabel.NEI


def record(predicted, gold, i=0):
    return VerdictRecord(
        doc_id=f"d{i}",
        claim_text="claim",
        evidence_text="evidence",
        predicted=predicted,
        gold=gold,
    )


class TestToyVerifier:
    def test_identical_supports(self):
        assert toy_verifier("masks cause plague", "masks cause plague") is S

    def test_negation_flip_refutes(self):
        assert toy_verifier("masks cause plague", "masks do not cause plague") is R

    def test_disjoint_nei(self):
        assert toy_verifier("masks cause plague", "gardening is lovely in spring") is N

    def test_high_overlap_odd_parity_refutes(self):
        # hand-evaluated: content tokens {vaccines, cause, illness} on both
        # sides -> Jaccard 1.0 >= 0.4; negation counts 0 vs 1 -> parity differs
        claim = "vaccines cause illness"
        evidence = "vaccines don't cause illness"
        assert toy_verifier(claim, evidence) is R

    def test_double_negation_supports(self):
        claim = "masks never cause plague, no way"
        evidence = "masks cause plague"
        assert toy_verifier(claim, evidence) is S  # parity 2 vs 0: equal mod 2

    def test_floor_is_configurable(self):
        claim = "masks cause plague"
        evidence = "masks cause illness and plague and fevers"
        # overlap is |{masks,cause,plague}| / |{masks,cause,plague,illness,fevers}| = 0.6
        assert toy_verifier(claim, evidence, overlap_floor=0.5) is S
        assert toy_verifier(claim, evidence, overlap_floor=0.7) is N


class TestCheck:
    def test_empty_claim_rejected(self):
        with pytest.raises(InputError):
            check("   ", "evidence", VerifierHandle(kind="toy"))

    def test_toy_path(self):
        assert check("masks cause plague", "masks cause plague", VerifierHandle(kind="toy")) is S

    def test_external_verifier(self, tmp_path):
        script = tmp_path / "verifier.py"
        script.write_text(
            r"""
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    label = "SUPPORTS" if "plague" in req["claim"] else "NEI"
    sys.stdout.write(json.dumps({"id": req["id"], "label": label}) + "\n")
    sys.stdout.flush()
"""
        )
        handle = VerifierHandle.from_spec(f"{sys.executable} {script}")
        assert check("masks cause plague", "x", handle) is S
        assert check("aspirin", "x", handle) is N

    def test_external_bad_label_is_protocol_error(self, tmp_path):
        script = tmp_path / "verifier.py"
        script.write_text(
            r"""
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    sys.stdout.write(json.dumps({"id": req["id"], "label": "MAYBE"}) + "\n")
    sys.stdout.flush()
"""
        )
        handle = VerifierHandle.from_spec(f"{sys.executable} {script}")
        with pytest.raises(ProtocolError, match="MAYBE"):
            check("claim", "evidence", handle)


class TestEvaluateVerdicts:
    def test_all_correct_committal(self):
        records = [record(S, S, 0), record(R, R, 1), record(S, S, 2)]
        score = evaluate_verdicts(records)
        assert score.precision == score.recall == score.f1 == 1.0

    def test_hand_enumerated_counts(self):
        # 4 gold SUPPORTS; predictions: 2 correct S, 1 NEI, 1 REFUTES
        records = [
            record(S, S, 0),
            record(S, S, 1),
            record(N, S, 2),
            record(R, S, 3),
        ]
        score = evaluate_verdicts(records)
        assert score.counts.n_gold_sr == 4
        assert score.counts.n_pred_sr == 3
        assert score.counts.n_correct_sr == 2
        assert score.counts.n_pred_nei == 1
        assert score.precision == pytest.approx(2 / 3, abs=1e-9)
        assert score.recall == pytest.approx(1 / 2, abs=1e-9)
        assert score.f1 == pytest.approx(4 / 7, abs=1e-9)

    def test_all_nei_zero_guarded(self):
        records = [record(N, S, i) for i in range(5)]
        score = evaluate_verdicts(records)
        assert score.precision == 0.0
        assert score.recall == 0.0
        assert score.f1 == 0.0

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            evaluate_verdicts([])

    def test_nei_additions_keep_precision_lower_recall(self):
        base = [record(S, S, 0), record(R, S, 1)]
        before = evaluate_verdicts(base)
        extended = base + [record(N, S, 2), record(N, R, 3)]
        after = evaluate_verdicts(extended)
        assert after.precision == before.precision
        assert after.recall < before.recall

    @settings(max_examples=60)
    @given(
        st.lists(
            st.tuples(st.sampled_from((S, R, N)), st.sampled_from((S, R, N))),
            min_size=1,
            max_size=30,
        )
    )
    def test_f1_between_min_and_max(self, pairs):
        records = [record(p, g, i) for i, (p, g) in enumerate(pairs)]
        score = evaluate_verdicts(records)
        if score.precision == 0.0 or score.recall == 0.0:
            assert score.f1 == 0.0
        else:
            lo, hi = sorted((score.precision, score.recall))
            assert lo <= score.f1 <= hi
            if score.precision != score.recall:
                assert lo < score.f1 < hi

    def test_macro_variant(self):
        records = [record(S, S, 0), record(S, R, 1), record(R, R, 2), record(N, S, 3)]
        micro = evaluate_verdicts(records)
        macro = evaluate_verdicts(records, average="macro")
        assert macro.counts == micro.counts
        # S: P=1/2, R=1/2; R(label): P=1/1, R=1/1 -> macro P = R = 0.75
        assert macro.precision == pytest.approx(0.75)
        assert macro.recall == pytest.approx(0.75)

    def test_unknown_average_rejected(self):
        with pytest.raises(InputError):
            evaluate_verdicts([record(S, S)], average="weighted")


class TestDeltaFull:
    def test_reported_cells(self):
        assert delta_full(37.6, 7.9) == pytest.approx(29.7, abs=1e-9)
        assert delta_full(41.9, 45.2) == pytest.approx(-3.3, abs=1e-9)

    def test_equal_inputs_zero(self):
        assert delta_full(12.4, 12.4) == 0.0

    def test_unit_scale(self):
        assert delta_full(0.376, 0.079, scale="unit") == pytest.approx(0.297, abs=1e-9)

    def test_mixed_scales_rejected(self):
        with pytest.raises(InputError):
            delta_full(37.6, 0.5, scale="unit")
        with pytest.raises(InputError):
            delta_full(101.0, 5.0, scale="percent")
        with pytest.raises(InputError):
            delta_full(0.5, 0.2, scale="fraction")


class TestReferenceTables:
    def test_average_rows_consistent(self):
        data = load_reference_results()
        for key in ("claim_input_benchmark", "normalization_benchmark"):
            checks = check_average_rows(data[key])
            for c in checks:
                assert c.ok, c

    def test_single_known_flagged_cell(self):
        data = load_reference_results()
        flagged = [
            c
            for key in ("claim_input_benchmark", "normalization_benchmark")
            for c in check_average_rows(data[key])
            if c.flagged
        ]
        assert [(c.variant, c.column) for c in flagged] == [("ner_core_claim", "recall")]
        assert flagged[0].printed == 10.1
        assert flagged[0].row_mean == pytest.approx(10.28, abs=0.005)

    def test_every_delta_cell_reproduced(self):
        data = load_reference_results()
        checks = check_delta_cells(data["claim_input_benchmark"])
        assert len(checks) == 18  # 3 delta-bearing variants x (5 models + average)
        for c in checks:
            assert c.ok, c
        printed = {(c.variant, c.model): c.printed for c in checks}
        assert printed[("gold_seq", "covidfact")] == 29.7
        assert printed[("ner_core_claim", "healthver")] == -3.3
