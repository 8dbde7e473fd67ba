import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patternmine.builder import BalancedDataset
from patternmine.errors import (
    DegenerateVocabulary,
    DuplicateScore,
    EmptyClass,
    EmptyInput,
    MissingScore,
)
from patternmine.filtering import (
    ScoreRecord,
    _cut_count,
    builtin_score,
    filter_mismatches,
    label_agreement,
    oracle_score,
    read_scores,
    write_scores,
)

import helpers
from oracles import exact_cut, nb_posteriors


def ex(label, doc, text="mined sentence text."):
    return helpers.mined(label, "v", doc=doc, text=text)


def score(example, predicted, confidence, probs=None):
    return ScoreRecord(example_ref=example.ref(), predicted_label=predicted,
                       confidence=confidence, per_class_probs=probs)


# ------------------------------------------------------------ ScoreRecord


def test_score_record_validation():
    base = ex("a", 0)
    with pytest.raises(ValueError):
        score(base, "a", 1.5)
    with pytest.raises(ValueError):
        score(base, "a", 0.4, {"a": 0.4, "b": 0.7})          # sums to 1.1
    with pytest.raises(ValueError):
        score(base, "a", 0.4, {"a": 0.4, "b": 0.6})          # a is not the max
    with pytest.raises(ValueError):
        score(base, "b", 0.5, {"a": 0.4, "b": 0.6})          # confidence mismatch
    ok = score(base, "b", 0.6, {"a": 0.4, "b": 0.6})
    assert ok.confidence == 0.6


def test_score_record_json_round_trip(tmp_path):
    records = [
        score(ex("a", 0), "a", 0.9, {"a": 0.9, "b": 0.1}),
        score(ex("a", 1), "b", 1.0),
    ]
    path = tmp_path / "scores.jsonl"
    write_scores(path, records)
    assert read_scores(path) == records
    assert records[0].to_dict()["example_ref"] == [0, 0, 0]


# -------------------------------------------------------------- cut count


def test_cut_count_frozen_edges():
    assert _cut_count(0.29, 100) == 29   # 0.29 * 100 is 28.999... in floats
    assert _cut_count(0.1, 7) == 0
    assert _cut_count(0.1, 10) == 1
    assert _cut_count(1.0, 7) == 7
    assert _cut_count(0.0, 7) == 0
    assert _cut_count(0.1, 0) == 0


@settings(deadline=None, max_examples=300)
@given(k=st.integers(min_value=0, max_value=100), n=st.integers(min_value=0, max_value=10**6))
def test_cut_count_matches_exact_fraction(k, n):
    assert _cut_count(k / 100, n) == exact_cut(Fraction(k, 100), n)


# ----------------------------------------------------------------- filter


def agree(example):
    return score(example, example.label, 0.5)


def test_filter_removes_most_confident_mismatches():
    examples = [ex("a", i) for i in range(6)]
    scores = [
        agree(examples[0]),
        score(examples[1], "b", 0.9),
        score(examples[2], "b", 0.7),
        agree(examples[3]),
        score(examples[4], "b", 0.95),
        score(examples[5], "b", 0.6),
    ]
    kept, removed, report = filter_mismatches(examples, scores, fraction=0.5)
    # 4 mismatches, floor(0.5 * 4) = 2, ranked by confidence
    assert [e.doc_index for e in removed] == [4, 1]
    assert [e.doc_index for e in kept] == [0, 2, 3, 5]
    assert report.n_examples == 6
    assert report.n_mismatches == 4
    assert report.n_removed == 2
    assert report.agreement_pct == pytest.approx(100 * 2 / 6)
    assert report.confidence_threshold_used == 0.9
    # agreeing examples are never candidates, even at fraction 1
    _, removed_all, _ = filter_mismatches(examples, scores, fraction=1.0)
    assert {e.doc_index for e in removed_all} == {1, 2, 4, 5}


def test_filter_fraction_edges():
    examples = [ex("a", i) for i in range(3)]
    scores = [score(e, "b", 0.5) for e in examples]
    kept, removed, report = filter_mismatches(examples, scores, fraction=0.0)
    assert kept == examples and removed == []
    assert report.confidence_threshold_used is None
    kept, removed, _ = filter_mismatches(examples, scores, fraction=1.0)
    assert kept == [] and len(removed) == 3
    with pytest.raises(ValueError):
        filter_mismatches(examples, scores, fraction=1.5)


def test_filter_ties_break_by_example_ref():
    examples = [ex("a", 5), ex("a", 1), ex("a", 9)]
    scores = [score(e, "b", 0.8) for e in examples]
    _, removed, _ = filter_mismatches(examples, scores, fraction=0.67)
    assert [e.doc_index for e in removed] == [1, 5]


def test_filter_per_class_flag():
    left = [ex("left", i) for i in range(4)]
    right = [ex("right", i, text="other text.") for i in range(10, 12)]
    scores = [
        score(left[0], "right", 0.9),
        score(left[1], "right", 0.8),
        score(left[2], "right", 0.7),
        agree(left[3]),
        score(right[0], "left", 0.95),
        agree(right[1]),
    ]
    examples = left + right
    _, removed_global, _ = filter_mismatches(examples, scores, fraction=0.5)
    assert [e.doc_index for e in removed_global] == [10, 0]
    # per class: left floor(0.5*3)=1, right floor(0.5*1)=0
    _, removed_per, report = filter_mismatches(examples, scores, fraction=0.5, per_class=True)
    assert [e.doc_index for e in removed_per] == [0]
    assert report.n_removed == 1


def test_filter_kept_preserves_input_order():
    examples = [ex("a", i) for i in (3, 0, 2, 1)]
    scores = [agree(e) for e in examples[:2]] + [score(e, "b", 0.9) for e in examples[2:]]
    kept, _, _ = filter_mismatches(examples, scores, fraction=1.0)
    assert [e.doc_index for e in kept] == [3, 0]


def test_filter_input_errors():
    examples = [ex("a", 0), ex("a", 1)]
    with pytest.raises(EmptyInput):
        filter_mismatches([], [], fraction=0.1)
    with pytest.raises(MissingScore):
        filter_mismatches(examples, [agree(examples[0])])
    with pytest.raises(DuplicateScore):
        filter_mismatches(examples, [agree(examples[0])] * 2 + [agree(examples[1])])


@settings(deadline=None, max_examples=100)
@given(
    n=st.integers(min_value=1, max_value=120),
    k=st.integers(min_value=0, max_value=100),
    seed=st.integers(min_value=0, max_value=10**6),
)
def test_filter_count_and_threshold_properties(n, k, seed):
    rng = random.Random(seed)
    examples = [ex("a", i) for i in range(n)]
    scores = [
        score(e, rng.choice(["a", "b"]), rng.choice([0.25, 0.5, 0.5, 0.75, 1.0]))
        for e in examples
    ]
    fraction = k / 100
    kept, removed, report = filter_mismatches(examples, scores, fraction=fraction)
    mismatch_conf = [s.confidence for e, s in zip(examples, scores) if s.predicted_label != e.label]
    assert report.n_mismatches == len(mismatch_conf)
    assert report.n_removed == exact_cut(Fraction(k, 100), len(mismatch_conf))
    assert len(kept) + len(removed) == n
    if removed:
        removed_refs = {e.ref() for e in removed}
        retained_mismatch = [
            s.confidence
            for e, s in zip(examples, scores)
            if s.predicted_label != e.label and e.ref() not in removed_refs
        ]
        if retained_mismatch:
            assert report.confidence_threshold_used >= max(retained_mismatch)
    assert report.agreement_pct == float(Fraction(100 * (n - len(mismatch_conf)), n))


# -------------------------------------------------------------- agreement


def test_label_agreement_frozen():
    examples = [ex("a", i) for i in range(1000)]
    scores = [score(e, "b" if i < 313 else "a", 1.0) for i, e in enumerate(examples)]
    assert label_agreement(examples, scores) == 68.7
    with pytest.raises(EmptyInput):
        label_agreement([], [])


# ------------------------------------------------------------ oracle_score


def test_oracle_score_mapping_and_callable():
    examples = [ex("a", 0), ex("a", 1), ex("a", 1)]  # duplicate ref
    by_ref = {examples[0].ref(): "a", examples[1].ref(): "b"}
    records = oracle_score(examples, by_ref)
    assert len(records) == 2
    assert all(r.confidence == 1.0 for r in records)
    assert records[1].predicted_label == "b"

    records = oracle_score(examples, lambda e: "z")
    assert [r.predicted_label for r in records] == ["z", "z"]


# ----------------------------------------------------------- builtin_score


def nb_dataset(rows):
    """rows: (label, text); doc_index enumerates refs."""
    return BalancedDataset.from_examples(
        [helpers.mined(label, "v", doc=i, text=text) for i, (label, text) in enumerate(rows)]
    )


def record_for(records, ref):
    return next(r for r in records if r.example_ref == ref)


def test_builtin_score_prior_fixture():
    # example 4 sits alone in fold 4; its tokens are out of vocabulary, so
    # the posterior is the document-count prior: A 3/4, B 1/4
    ds = nb_dataset([
        ("A", "alpha beta"),
        ("A", "alpha"),
        ("A", "beta"),
        ("B", "gamma"),
        ("A", "zzz qqq"),
    ])
    record = record_for(builtin_score(ds), (0, 4, 0))
    assert record.predicted_label == "A"
    assert record.confidence == pytest.approx(0.75, abs=1e-12)
    assert record.per_class_probs["B"] == pytest.approx(0.25, abs=1e-12)


def test_builtin_score_likelihood_fixture():
    # train folds for example 4: A = {x, x}, B = {x, y}; priors 1/2 each
    # P(x|A) = (2+1)/(2+2) = 3/4, P(x|B) = (1+1)/(2+2) = 1/2
    # posterior for "x": {A: 3/5, B: 2/5}
    ds = nb_dataset([("A", "x"), ("A", "x"), ("B", "x"), ("B", "y"), ("A", "x")])
    record = record_for(builtin_score(ds), (0, 4, 0))
    assert record.predicted_label == "A"
    assert record.confidence == pytest.approx(0.6, abs=1e-12)
    assert record.per_class_probs == pytest.approx({"A": 0.6, "B": 0.4}, abs=1e-12)


def test_builtin_score_tie_prefers_later_label():
    # symmetric training folds make both posteriors exactly 1/2
    ds = nb_dataset([("A", "x"), ("A", "x"), ("B", "y"), ("B", "y"), ("A", "x y")])
    record = record_for(builtin_score(ds), (0, 4, 0))
    assert record.per_class_probs == pytest.approx({"A": 0.5, "B": 0.5})
    assert record.predicted_label == "B"


def test_builtin_score_one_record_per_ref():
    examples = [
        helpers.mined("A", "v", doc=0, text="same span text."),
        helpers.mined("B", "w", doc=0, text="same span text."),
        helpers.mined("A", "v", doc=1, text="alpha words here."),
        helpers.mined("B", "w", doc=2, text="beta words here."),
        helpers.mined("A", "v", doc=3, text="alpha again now."),
    ]
    records = builtin_score(BalancedDataset.from_examples(examples))
    refs = [r.example_ref for r in records]
    assert len(refs) == len(set(refs)) == 4


def test_builtin_score_input_validation():
    with pytest.raises(EmptyInput):
        builtin_score(BalancedDataset.from_examples([]))
    with pytest.raises(EmptyClass):
        builtin_score(nb_dataset([("A", "x"), ("A", "y")]))
    with pytest.raises(DegenerateVocabulary):
        builtin_score(nb_dataset([("A", "!!!"), ("B", "...")]))


def test_builtin_score_matches_exact_nb_oracle():
    rng = random.Random(4)
    vocab = ["red", "green", "blue", "cyan", "teal"]
    for _ in range(30):
        labels = ["A", "B", "C"][: rng.randint(2, 3)]
        rows = []
        for i in range(rng.randint(6, 20)):
            text = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 4)))
            rows.append((rng.choice(labels), text))
        if len({label for label, _ in rows}) < 2:
            continue
        ds = nb_dataset(rows)
        tokens = [text.split() for _, text in rows]
        for record in builtin_score(ds):
            i = record.example_ref[1]
            train = [j for j in range(len(rows)) if j % 5 != i % 5]
            expected = nb_posteriors(
                [tokens[j] for j in train],
                [rows[j][0] for j in train],
                tokens[i],
                sorted({label for label, _ in rows}),
            )
            for label, prob in expected.items():
                assert record.per_class_probs[label] == pytest.approx(float(prob), abs=1e-9)
