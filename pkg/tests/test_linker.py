"""Link index construction, candidate ranking, abbreviations, coverage."""

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from claimext.corpus import Document
from claimext.errors import InputError
from claimext.linker import (
    CandidateLink,
    ConceptEntry,
    build_index,
    char_trigrams,
    link,
    linking_coverage,
    load_kb,
    normalize_mention,
    resolve_abbreviations,
)

from linker_oracle import brute_force_top_k, random_kb


TOY_KB = [
    ConceptEntry("C0021345", "Infectious Mononucleosis", ("Infectious Mononucleosis", "glandular fever")),
    ConceptEntry("C0016053", "Fibromyalgia", ("Fibromyalgia",)),
    ConceptEntry("C0013404", "Dyspnea", ("Dyspnea", "breathlessness")),
]

TABLE_KB = [
    ConceptEntry(
        "C0013227",
        "Pharmaceutical Preparations",
        ("Pharmaceutical Preparations", "medicines", "medication"),
    ),
    ConceptEntry("C0087086", "Thrombus", ("Thrombus", "blood clot")),
    ConceptEntry("C0013404", "Dyspnea", ("Dyspnea", "breathlessness")),
]


class TestBuildIndex:
    def test_single_alias_unit_norm(self):
        index = build_index([ConceptEntry("C1", "aspirin", ("aspirin",))])
        (vec,) = index.alias_vectors
        assert math.sqrt(sum(w * w for w in vec.values())) == pytest.approx(1.0)

    def test_short_alias_flagged_zero_vector(self):
        index = build_index([ConceptEntry("C1", "Aspirin Tablet", ("Aspirin Tablet", "at"))])
        assert "at" in index.short_aliases
        row = index.alias_to_concept.index("C1")  # canonical row still usable
        assert index.alias_vectors[1] == {}
        assert link("aspirin tablet", index, k=1, threshold=0.5)[0].concept_id == "C1"

    def test_empty_kb_rejected(self):
        with pytest.raises(InputError):
            build_index([])

    def test_ubiquitous_gram_has_minimum_idf(self):
        kb = [
            ConceptEntry("C1", "tonsillitis", ("tonsillitis",)),
            ConceptEntry("C2", "bronchitis", ("bronchitis",)),
            ConceptEntry("C3", "dermatitis", ("dermatitis",)),
        ]
        index = build_index(kb)
        # brute-force idf over the 3 aliases: df("iti") = 3 (appears in all)
        n = 3
        expected = math.log((1 + n) / (1 + 3)) + 1.0
        assert index.idf[index.vocabulary["iti"]] == pytest.approx(expected)
        assert index.idf[index.vocabulary["iti"]] == pytest.approx(min(index.idf))

    def test_trigram_extraction(self):
        assert char_trigrams("ab") == []
        grams = char_trigrams("  Blood  Clot ")
        assert "\x02bl" in grams[0]
        assert grams == char_trigrams("blood clot")


class TestLink:
    def test_exact_alias_scores_one(self):
        index = build_index(TOY_KB)
        candidates = link("glandular fever", index, k=5, threshold=0.5)
        assert candidates[0].concept_id == "C0021345"
        assert candidates[0].canonical_name == "Infectious Mononucleosis"
        assert candidates[0].score == pytest.approx(1.0, abs=1e-9)

    def test_no_shared_grams_empty(self):
        index = build_index(TOY_KB)
        assert link("zzqx", index, k=5, threshold=0.1) == []
        assert link("zzqx", index, k=5, threshold=0.9) == []

    def test_candidates_sorted_and_deduplicated(self):
        kb = [
            ConceptEntry("C2", "blood clotting", ("blood clotting", "blood clots form")),
            ConceptEntry("C1", "blood clot", ("blood clot", "blood clots")),
        ]
        index = build_index(kb)
        candidates = link("blood clots", index, k=5, threshold=0.0)
        ids = [c.concept_id for c in candidates]
        assert len(ids) == len(set(ids))
        scores = [c.score for c in candidates]
        assert scores == sorted(scores, reverse=True)
        assert candidates[0].concept_id == "C1"

    def test_k_bounds_result_length(self):
        index = build_index(random_kb(random.Random(0), n_concepts=30))
        mention = index.concepts[sorted(index.concepts)[0]].canonical_name
        assert len(link(mention, index, k=3, threshold=0.0)) <= 3

    def test_bad_k(self):
        index = build_index(TOY_KB)
        with pytest.raises(InputError):
            link("fever", index, k=0, threshold=0.5)

    @settings(max_examples=40)
    @given(st.sampled_from(["glandular fever", "Glandular FEVER", "BREATHLESSNESS", "fibroMyalgia"]))
    def test_case_invariance(self, mention):
        index = build_index(TOY_KB)
        lower = link(mention.lower(), index, k=3, threshold=0.0)
        anycase = link(mention, index, k=3, threshold=0.0)
        assert [(c.concept_id, pytest.approx(c.score)) for c in lower] == [
            (c.concept_id, pytest.approx(c.score)) for c in anycase
        ]

    def test_exact_alias_never_outranked(self):
        rng = random.Random(42)
        kb = random_kb(rng, n_concepts=60)
        index = build_index(kb)
        for entry in kb[:20]:
            alias = entry.aliases[-1]
            if len(alias) < 3:
                continue
            top = link(alias, index, k=3, threshold=0.0)
            assert top[0].concept_id == entry.concept_id
            assert top[0].score == pytest.approx(1.0, abs=1e-9)


class TestNormalizeMention:
    def test_table_examples(self):
        index = build_index(TABLE_KB)
        assert normalize_mention("medicines", index, 0.7) == "pharmaceutical preparations"
        assert normalize_mention("blood clots", index, 0.7) == "thrombus"

    def test_unlinked_mention_unchanged(self):
        index = build_index(TABLE_KB)
        assert normalize_mention("zzqx", index, 0.7) == "zzqx"

    def test_below_threshold_unchanged(self):
        index = build_index(TABLE_KB)
        assert normalize_mention("bloods", index, threshold=0.99) == "bloods"


class TestOracleEquivalence:
    def test_small_kb_exact_match_with_brute_force(self):
        rng = random.Random(7)
        kb = random_kb(rng, n_concepts=150)
        index = build_index(kb)
        mentions = [e.aliases[rng.randrange(len(e.aliases))] for e in kb[:30]]
        mentions += ["".join(rng.choices("abcdefgh ", k=10)) for _ in range(20)]
        for mention in mentions:
            ours = link(mention, index, k=5, threshold=0.1)
            oracle = brute_force_top_k(mention, kb, k=5, threshold=0.1)
            assert [c.concept_id for c in ours] == [c[0] for c in oracle]
            for got, (_, want_score) in zip(ours, oracle):
                assert got.score == pytest.approx(want_score, abs=1e-9)


class TestAbbreviations:
    def test_initials_alignment(self):
        doc = Document(id="a", text="history of venous thromboembolic events (VTE) was noted")
        assert resolve_abbreviations(doc) == {"VTE": "venous thromboembolic events"}

    def test_no_parentheses(self):
        doc = Document(id="a", text="plain text with nothing to expand")
        assert resolve_abbreviations(doc) == {}

    def test_who_expansion(self):
        doc = Document(id="a", text="the World Health Organization (WHO) said so")
        assert resolve_abbreviations(doc) == {"WHO": "World Health Organization"}

    def test_prefix_alignment(self):
        doc = Document(id="a", text="chronic fatigue syndrome (CFS) patients")
        assert resolve_abbreviations(doc) == {"CFS": "chronic fatigue syndrome"}

    def test_parenthetical_aside_not_an_abbreviation(self):
        doc = Document(id="a", text="masks (which I dislike wearing) work")
        assert resolve_abbreviations(doc) == {}

    def test_unalignable_short_form_skipped(self):
        doc = Document(id="a", text="masks work fine (XQZ) anyway")
        assert resolve_abbreviations(doc) == {}


class TestLinkingCoverage:
    def test_reported_fraction(self):
        outcomes = [True] * 495 + [False] * (719 - 495)
        report = linking_coverage(outcomes)
        assert report.linked_count == 495
        assert report.total_count == 719
        assert report.fraction == pytest.approx(0.688, abs=0.0005)
        assert not report.empty

    def test_empty_input_warns(self):
        report = linking_coverage([])
        assert report.fraction == 0.0
        assert report.empty

    def test_all_linked(self):
        report = linking_coverage([True] * 5)
        assert report.fraction == 1.0


def test_load_kb_adds_canonical_alias(tmp_path):
    path = tmp_path / "kb.jsonl"
    path.write_text(
        '{"concept_id": "C1", "canonical_name": "Thrombus", "aliases": ["blood clot"]}\n'
    )
    (entry,) = load_kb(path)
    assert entry.aliases[0] == "Thrombus"
    assert "blood clot" in entry.aliases
