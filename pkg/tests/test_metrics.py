"""Tests for the evaluation metrics: Porter stemming, BLEU, METEOR,
ROUGE-L, CIDEr, and the combined corpus report.

Each metric has hand-worked pinned values plus a randomized comparison
against an independent naive oracle (dictionary-based BLEU, full-table
LCS, brute-force alignment search for METEOR, explicit tf-idf vectors for
CIDEr). The stemmer table below was derived by hand from the published
algorithm, stepping each word through all five rule groups.
"""

import math

import numpy as np
import pytest

import oracles
from storyteller.metrics import (
    EvalPair,
    MetricReport,
    bleu,
    cider,
    cider_per_story,
    evaluate_corpus,
    meteor,
    porter_stem,
    render_table,
    render_table_row,
    rouge_l,
)
from storyteller.metrics.bleu import ngram_counts
from storyteller.metrics.meteor import meteor_single
from storyteller.metrics.rouge import lcs_length

WORD_POOL = ["the", "cat", "dog", "sat", "ran", "big", "cats", "dogs"]


# ---------------------------------------------------------------- stemming

STEM_TABLE = [
    ("caresses", "caress"),
    ("ponies", "poni"),
    ("ties", "ti"),
    ("caress", "caress"),
    ("cats", "cat"),
    ("feed", "feed"),
    ("agreed", "agre"),
    ("plastered", "plaster"),
    ("bled", "bled"),
    ("motoring", "motor"),
    ("sing", "sing"),
    ("hopping", "hop"),
    ("tanned", "tan"),
    ("falling", "fall"),
    ("hissing", "hiss"),
    ("fizzing", "fizz"),
    ("failing", "fail"),
    ("filing", "file"),
    ("happy", "happi"),
    ("sky", "sky"),
    ("running", "run"),
    ("hoping", "hope"),
    ("sized", "size"),
    ("relational", "relat"),
    ("conditional", "condit"),
    ("rational", "ration"),
    ("digitizer", "digit"),
    ("operator", "oper"),
    ("feudalism", "feudal"),
    ("adjustable", "adjust"),
    ("effective", "effect"),
    ("bowdlerize", "bowdler"),
    ("probate", "probat"),
    ("cease", "ceas"),
    ("controlling", "control"),
    ("roll", "roll"),
    ("sensitivity", "sensit"),
    ("generalization", "gener"),
    ("oscillators", "oscil"),
    ("the", "the"),
    ("cat", "cat"),
]


def test_porter_stem_known_answers():
    for word, expected in STEM_TABLE:
        assert porter_stem(word) == expected, word


def test_porter_stem_leaves_short_words_alone():
    for word in ("a", "i", "is", "ax", "be"):
        assert porter_stem(word) == word


def test_porter_stem_plural_and_stem_agree():
    """A word and its simple plural collapse to the same stem."""
    for word in ("cat", "dog", "store", "picture"):
        assert porter_stem(word + "s") == porter_stem(word)


# -------------------------------------------------------------------- bleu


def test_bleu_identity_corpus_is_perfect():
    pairs = [
        ("the cat sat on the mat".split(), ["the cat sat on the mat".split()]),
        ("a big dog ran far away".split(), ["a big dog ran far away".split()]),
    ]
    assert bleu(pairs) == [1.0, 1.0, 1.0, 1.0]


def test_bleu_clipping_hand_example():
    """Candidate 'the the the' against reference 'the cat': the unigram
    'the' is clipped at its reference count 1, so p1 = 1/3; there are no
    shared bigrams, so orders 2..4 are zero."""
    pairs = [(["the", "the", "the"], [["the", "cat"]])]
    scores = bleu(pairs)
    assert scores[0] == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert scores[1:] == [0.0, 0.0, 0.0]


def test_bleu_brevity_penalty_short_candidate():
    pairs = [(["the", "cat"], [["the", "cat", "sat"]])]
    scores = bleu(pairs)
    bp = math.exp(1.0 - 3.0 / 2.0)
    assert scores[0] == pytest.approx(bp, abs=1e-12)
    assert scores[1] == pytest.approx(bp, abs=1e-12)


def test_bleu_closest_reference_length_ties_go_shorter():
    """Candidate length 3 with references of lengths 2 and 4: both are one
    away, the tie picks 2, and a candidate longer than r has no penalty."""
    pairs = [(["a", "b", "c"], [["a", "b"], ["a", "b", "c", "d"]])]
    assert bleu(pairs)[0] == 1.0


def test_bleu_rejects_bad_inputs():
    with pytest.raises(ValueError):
        bleu([])
    with pytest.raises(ValueError):
        bleu([(["a"], [])])
    with pytest.raises(ValueError):
        bleu([(["a"], [["a"]])], n_max=0)
    with pytest.raises(ValueError):
        bleu([(["a"], [["a"]])], n_max=5)


def test_bleu_all_empty_candidates_score_zero():
    pairs = [([], [["a", "b"]]), ([], [["c"]])]
    assert bleu(pairs) == [0.0, 0.0, 0.0, 0.0]


def test_bleu_numerator_never_drops_when_reference_grows():
    """Adding candidate n-grams to a reference can only help the clipped
    numerator."""
    rng = np.random.default_rng(0)
    for _ in range(50):
        cand = list(rng.choice(WORD_POOL, size=int(rng.integers(2, 8))))
        ref = list(rng.choice(WORD_POOL, size=int(rng.integers(2, 8))))
        n = int(rng.integers(1, 3))
        if len(cand) < n:
            continue
        start = int(rng.integers(0, len(cand) - n + 1))
        gram = cand[start : start + n]
        before = oracles.bleu_numerator_oracle(cand, [ref], n)
        after = oracles.bleu_numerator_oracle(cand, [ref, ref + gram], n)
        assert after >= before


def test_bleu_matches_oracle_on_random_corpora():
    rng = np.random.default_rng(1)
    checked = 0
    while checked < 120:
        n_pairs = int(rng.integers(2, 7))
        pairs = []
        for _ in range(n_pairs):
            cand = list(rng.choice(WORD_POOL, size=int(rng.integers(1, 9))))
            refs = [
                list(rng.choice(WORD_POOL, size=int(rng.integers(1, 9))))
                for _ in range(int(rng.integers(1, 4)))
            ]
            pairs.append((cand, refs))
        got = bleu(pairs, 4)
        want = oracles.bleu_oracle(pairs, 4)
        for g, w in zip(got, want):
            assert abs(g - w) < 1e-9
        checked += n_pairs


def test_ngram_counts_slides_a_window():
    counts = ngram_counts(["a", "b", "a", "b"], 2)
    assert counts[("a", "b")] == 2
    assert counts[("b", "a")] == 1
    assert ngram_counts(["a"], 2) == {}


# ------------------------------------------------------------------ meteor


def test_meteor_identical_two_words():
    """'the cat' against itself: P = R = 1, one chunk over two matches, so
    the score is 1 - 0.5 * (1/2)^3 = 0.9375."""
    assert meteor(["the", "cat"], [["the", "cat"]]) == pytest.approx(0.9375, abs=1e-12)


def test_meteor_identity_formula_by_length():
    words = ["w%d" % k for k in range(6)]
    for m in range(1, 7):
        cand = words[:m]
        expected = 1.0 - 0.5 * (1.0 / m) ** 3
        assert meteor(cand, [list(cand)]) == pytest.approx(expected, abs=1e-12)


def test_meteor_disjoint_and_empty_are_zero():
    assert meteor(["aa", "bb"], [["cc", "dd"]]) == 0.0
    assert meteor([], [["the", "cat"]]) == 0.0
    assert meteor_single(["the"], []) == 0.0


def test_meteor_stem_match_scores_half_for_single_word():
    """'cats' vs 'cat' match through the stemmer: P = R = 1 with a single
    match and chunk, so the score is 1 * (1 - 0.5) = 0.5."""
    assert meteor(["cats"], [["cat"]]) == pytest.approx(0.5, abs=1e-12)
    assert meteor(["cats"], [["dog"]]) == 0.0


def test_meteor_stemmed_sentence():
    score = meteor(["the", "cats", "run"], [["the", "cat", "runs"]])
    assert score == pytest.approx(1.0 - 0.5 * (1.0 / 3.0) ** 3, abs=1e-12)


def test_meteor_fragmentation_penalty_counts_chunks():
    """'a b c d' vs 'b a c d': all four words match but the best alignment
    needs 3 chunks ((a), (b), (c d)), giving 1 - 0.5 * (3/4)^3."""
    score = meteor(["a1", "b1", "c1", "d1"], [["b1", "a1", "c1", "d1"]])
    assert score == pytest.approx(1.0 - 0.5 * (3.0 / 4.0) ** 3, abs=1e-12)


def test_meteor_chunk_minimization_beats_greedy_pairing():
    """cand 'the cat the' vs ref 'the the cat': pairing the first 'the'
    with the first reference slot gives 3 chunks, but pairing it with the
    second slot yields ('the cat')('the'), only 2 chunks. The score must
    reflect the optimal 2."""
    score = meteor(["the", "cat", "the"], [["the", "the", "cat"]])
    assert score == pytest.approx(1.0 - 0.5 * (2.0 / 3.0) ** 3, abs=1e-12)


def test_meteor_multi_reference_takes_max():
    cand = ["the", "cat", "sat"]
    bad_ref = ["dog", "ran"]
    score = meteor(cand, [bad_ref, list(cand)])
    assert score == pytest.approx(meteor(cand, [list(cand)]), abs=1e-15)
    with pytest.raises(ValueError):
        meteor(cand, [])


def test_meteor_long_exact_match_uses_greedy_path():
    """Above 12 matches the aligner switches to its greedy path; for an
    exact in-order match that still yields a single chunk."""
    cand = ["w%d" % k for k in range(14)]
    expected = 1.0 - 0.5 * (1.0 / 14.0) ** 3
    assert meteor(cand, [list(cand)]) == pytest.approx(expected, abs=1e-12)


def test_meteor_matches_brute_force_oracle():
    rng = np.random.default_rng(2)
    for _ in range(120):
        cand = list(rng.choice(WORD_POOL, size=int(rng.integers(1, 8))))
        refs = [
            list(rng.choice(WORD_POOL, size=int(rng.integers(1, 8))))
            for _ in range(int(rng.integers(1, 3)))
        ]
        got = meteor(cand, refs)
        want = oracles.meteor_oracle(cand, refs)
        assert abs(got - want) < 1e-12, (cand, refs)


# ----------------------------------------------------------------- rouge_l


def test_rouge_identity_is_one():
    toks = "the cat sat on the mat".split()
    assert rouge_l(toks, [list(toks)]) == pytest.approx(1.0, abs=1e-12)


def test_rouge_hand_example_transposition():
    """[a b c d] vs [a c b d]: the LCS has length 3, so P = R = 3/4 and
    the F-measure collapses to 0.75."""
    assert rouge_l(["a", "b", "c", "d"], [["a", "c", "b", "d"]]) == pytest.approx(0.75, abs=1e-12)


def test_rouge_weighs_recall_over_precision():
    """With beta = 1.2 the recall-heavy direction scores higher."""
    precision_heavy = rouge_l(["a"], [["a", "b"]])  # P=1, R=1/2
    recall_heavy = rouge_l(["a", "b"], [["a"]])  # P=1/2, R=1
    beta2 = 1.2**2
    assert precision_heavy == pytest.approx((1 + beta2) * 0.5 / (0.5 + beta2), abs=1e-12)
    assert recall_heavy == pytest.approx((1 + beta2) * 0.5 / (1 + beta2 * 0.5), abs=1e-12)
    assert recall_heavy > precision_heavy


def test_rouge_empty_candidate_and_errors():
    assert rouge_l([], [["a", "b"]]) == 0.0
    assert rouge_l(["x"], [["a", "b"]]) == 0.0
    with pytest.raises(ValueError):
        rouge_l(["a"], [])


def test_rouge_multi_reference_takes_max():
    cand = ["the", "cat", "sat"]
    score = rouge_l(cand, [["dog"], list(cand)])
    assert score == pytest.approx(1.0, abs=1e-12)


def test_lcs_and_rouge_match_full_table_oracle():
    rng = np.random.default_rng(3)
    for _ in range(150):
        a = list(rng.choice(WORD_POOL, size=int(rng.integers(0, 9))))
        b = list(rng.choice(WORD_POOL, size=int(rng.integers(1, 9))))
        assert lcs_length(a, b) == oracles.lcs_table_oracle(a, b)
        refs = [b, list(rng.choice(WORD_POOL, size=int(rng.integers(1, 9))))]
        assert abs(rouge_l(a, refs) - oracles.rouge_l_oracle(a, refs)) < 1e-12


# ------------------------------------------------------------------- cider


def _disjoint_identity_corpus():
    a = "alpha bravo charlie delta echo".split()
    b = "foxtrot golf hotel india juliet".split()
    return [(list(a), [list(a)]), (list(b), [list(b)])]


def test_cider_identity_on_disjoint_corpus_is_ten():
    """Candidates equal to their references with no cross-story overlap:
    every cosine is 1 and every idf is log 2 > 0, so each story gets the
    full 10 points."""
    scores = cider_per_story(_disjoint_identity_corpus())
    assert scores == pytest.approx([10.0, 10.0], abs=1e-9)
    assert cider(_disjoint_identity_corpus()) == pytest.approx(10.0, abs=1e-9)


def test_cider_orthogonal_candidate_scores_zero():
    pairs = _disjoint_identity_corpus()
    pairs[0] = ("kilo lima mike november oscar".split(), pairs[0][1])
    assert cider_per_story(pairs)[0] == 0.0


def test_cider_multi_reference_averages_cosines():
    """cand == ref1 with a disjoint ref2 halves every cosine: 5.0."""
    a = "alpha bravo charlie delta echo".split()
    other = "papa quebec romeo sierra tango".split()
    b = "foxtrot golf hotel india juliet".split()
    pairs = [(list(a), [list(a), list(other)]), (list(b), [list(b)])]
    scores = cider_per_story(pairs)
    assert scores[0] == pytest.approx(5.0, abs=1e-9)
    assert scores[1] == pytest.approx(10.0, abs=1e-9)


def test_cider_requires_two_stories_and_references():
    with pytest.raises(ValueError):
        cider_per_story([(["a"], [["a"]])])
    with pytest.raises(ValueError):
        cider_per_story([(["a"], [["a"]]), (["b"], [])])


def test_cider_matches_oracle_on_random_corpora():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n_stories = int(rng.integers(2, 7))
        pairs = []
        for _ in range(n_stories):
            cand = list(rng.choice(WORD_POOL, size=int(rng.integers(1, 9))))
            refs = [
                list(rng.choice(WORD_POOL, size=int(rng.integers(1, 9))))
                for _ in range(int(rng.integers(1, 4)))
            ]
            pairs.append((cand, refs))
        got = cider_per_story(pairs)
        want = oracles.cider_oracle(pairs)
        for g, w in zip(got, want):
            assert abs(g - w) < 1e-9


def test_cider_unseen_candidate_grams_use_default_idf():
    """A candidate word absent from every reference set still gets a
    finite tf-idf weight, and the score stays within bounds."""
    pairs = _disjoint_identity_corpus()
    pairs[0] = (["alpha", "zebra", "charlie", "delta", "echo"], pairs[0][1])
    scores = cider_per_story(pairs)
    assert 0.0 < scores[0] < 10.0
    want = oracles.cider_oracle(pairs)
    assert scores[0] == pytest.approx(want[0], abs=1e-9)


# ------------------------------------------------------------------ report


def test_eval_pair_validation():
    with pytest.raises(ValueError):
        EvalPair("s1", "text", [])
    with pytest.raises(ValueError):
        EvalPair("s1", "text", ["ok", "   "])
    pair = EvalPair("s1", "", ["a reference"])
    assert pair.candidate == ""


def test_evaluate_corpus_identity_values():
    pairs = [
        EvalPair("s1", "alpha bravo charlie delta echo", ["alpha bravo charlie delta echo"]),
        EvalPair("s2", "foxtrot golf hotel india juliet", ["foxtrot golf hotel india juliet"]),
    ]
    report = evaluate_corpus(pairs)
    assert report.bleu == [1.0, 1.0, 1.0, 1.0]
    assert report.meteor == pytest.approx(1.0 - 0.5 / 125.0, abs=1e-12)
    assert report.rouge_l == pytest.approx(1.0, abs=1e-12)
    assert report.cider == pytest.approx(10.0, abs=1e-9)
    assert [row["story_id"] for row in report.per_story] == ["s1", "s2"]
    for row in report.per_story:
        assert row["rouge_l"] == pytest.approx(1.0, abs=1e-12)
        assert row["cider"] == pytest.approx(10.0, abs=1e-9)


def test_evaluate_corpus_handles_empty_candidates():
    pairs = [
        EvalPair("s1", "", ["alpha bravo charlie"]),
        EvalPair("s2", "", ["delta echo foxtrot"]),
    ]
    report = evaluate_corpus(pairs)
    assert report.bleu == [0.0, 0.0, 0.0, 0.0]
    assert report.meteor == 0.0
    assert report.rouge_l == 0.0
    assert report.cider == 0.0
    with pytest.raises(ValueError):
        evaluate_corpus([])


def test_report_json_round_trip_and_re_render():
    pairs = [
        EvalPair("s1", "the cat sat on a mat", ["the cat sat on the mat"]),
        EvalPair("s2", "a dog ran far", ["the dog ran very far", "a dog ran"]),
    ]
    report = evaluate_corpus(pairs)
    clone = MetricReport.from_json(report.to_json())
    assert clone == report
    assert render_table(clone) == render_table(report)
    assert clone.to_json() == report.to_json()


def test_render_table_row_percent_formatting():
    report = MetricReport(bleu=[0.601, 0.365, 0.211, 0.127], meteor=0.344, rouge_l=0.292, cider=0.051)
    assert render_table_row(report, "percent") == "60.1 | 36.5 | 21.1 | 12.7 | 34.4 | 29.2 | 5.1"
    assert (
        render_table_row(report, "fraction")
        == "0.6010 | 0.3650 | 0.2110 | 0.1270 | 0.3440 | 0.2920 | 0.0510"
    )
    with pytest.raises(ValueError):
        render_table_row(report, "per-mille")


def test_render_table_includes_header():
    report = MetricReport(bleu=[1.0, 1.0, 1.0, 1.0], meteor=1.0, rouge_l=1.0, cider=10.0)
    table = render_table(report, "percent")
    lines = table.splitlines()
    assert lines[0] == "BLEU-1 | BLEU-2 | BLEU-3 | BLEU-4 | METEOR | ROUGE | CIDEr"
    assert lines[1] == "100.0 | 100.0 | 100.0 | 100.0 | 100.0 | 100.0 | 1000.0"


def test_scores_stay_in_range_on_random_corpus():
    rng = np.random.default_rng(5)
    pairs = []
    for i in range(6):
        cand = " ".join(rng.choice(WORD_POOL, size=int(rng.integers(1, 9))))
        refs = [
            " ".join(rng.choice(WORD_POOL, size=int(rng.integers(1, 9))))
            for _ in range(int(rng.integers(1, 3)))
        ]
        pairs.append(EvalPair(f"s{i}", cand, refs))
    report = evaluate_corpus(pairs)
    for value in [*report.bleu, report.meteor, report.rouge_l]:
        assert 0.0 <= value <= 1.0
    assert 0.0 <= report.cider <= 10.0
