"""Evaluation harness: passage scoring, correlations, P/R/F1, sweeps, IO."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from samplecheck.eval import (
    BinaryRecord,
    DatasetError,
    EmptyLabels,
    InsufficientSamples,
    LabeledPassage,
    SweepRecord,
    correlate,
    corruption_corpus,
    mock_scorer,
    passage_score,
    passages_from_sweep_records,
    pr_f1,
    read_binary_jsonl,
    read_passages_jsonl,
    sample_sweep,
    stability_scorer,
    sweep_records_from_passages,
    threshold_sweep,
    write_binary_jsonl,
    write_passages_jsonl,
)
from samplecheck.providers import mock_embed
from samplecheck.vectors import ConstantSequence, pearson, spearman


class TestPassageScore:
    def test_all_accurate(self):
        assert passage_score(["accurate", "accurate"]) == 1.0

    def test_half(self):
        assert passage_score(["major", "accurate"]) == 0.5

    def test_three_way(self):
        assert passage_score(["major", "minor", "accurate"]) == pytest.approx(0.5)

    def test_exhaustive_small_multisets(self):
        values = {"major": 0.0, "minor": 0.5, "accurate": 1.0}
        for size in range(1, 5):
            for combo in itertools.combinations_with_replacement(values, size):
                expected = sum(values[c] for c in combo) / size
                assert passage_score(list(combo)) == pytest.approx(expected, abs=1e-12)

    def test_permutation_invariant_and_bounded(self):
        labels = ["major", "accurate", "minor", "accurate"]
        assert passage_score(labels) == passage_score(list(reversed(labels)))
        assert 0.0 <= passage_score(labels) <= 1.0

    def test_empty(self):
        with pytest.raises(EmptyLabels):
            passage_score([])

    def test_unknown_label(self):
        with pytest.raises(DatasetError):
            passage_score(["bogus"])


class TestCorrelate:
    def test_identity(self):
        assert correlate([1, 2, 3, 4], [1, 2, 3, 4]) == (100.0, 100.0)

    def test_negated(self):
        pe, sp = correlate([1, 2, 3, 4], [-1, -2, -3, -4])
        assert pe == -100.0 and sp == -100.0

    def test_ten_pair_fixture_matches_oracle(self):
        rng = np.random.default_rng(41)
        a = rng.normal(size=10).tolist()
        b = rng.normal(size=10).tolist()
        pe, sp = correlate(a, b)
        assert abs(pe - pearson(a, b) * 100) < 1e-9 + 0.05  # within rounding step
        assert pe == round(pearson(a, b) * 100, 1)
        assert sp == round(spearman(a, b) * 100, 1)

    def test_constant_rejected(self):
        with pytest.raises(ConstantSequence):
            correlate([1.0, 1.0, 1.0], [1, 2, 3])

    def test_min_length(self):
        with pytest.raises(ValueError):
            correlate([1, 2], [1, 2])


def oracle_pr_f1(scores, labels, threshold, polarity):
    tp = fp = tn = fn = 0
    for s, lab in zip(scores, labels):
        flagged = s <= threshold if polarity == "low_score_flags" else s >= threshold
        positive = lab == "hallucinated"
        if flagged and positive:
            tp += 1
        elif flagged and not positive:
            fp += 1
        elif not flagged and positive:
            fn += 1
        else:
            tn += 1
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


class TestPrF1:
    def test_perfect_separation(self):
        scores = [0.1, 0.2, 0.8, 0.9]
        labels = ["hallucinated", "hallucinated", "faithful", "faithful"]
        assert pr_f1(scores, labels, 0.5, "low_score_flags") == (1.0, 1.0, 1.0)

    def test_all_predicted_positive_half_actual(self):
        scores = [0.0, 0.0, 0.0, 0.0]
        labels = ["hallucinated", "faithful", "hallucinated", "faithful"]
        p, r, f1 = pr_f1(scores, labels, 0.5, "low_score_flags")
        assert (p, r) == (0.5, 1.0)
        assert f1 == pytest.approx(2 / 3)

    def test_twenty_record_fixture_exact_oracle(self):
        rng = np.random.default_rng(42)
        scores = rng.uniform(size=20).tolist()
        labels = ["hallucinated" if rng.uniform() < 0.5 else "faithful" for _ in range(20)]
        for threshold in (0.2, 0.5, 0.8):
            for polarity in ("low_score_flags", "high_score_flags"):
                assert pr_f1(scores, labels, threshold, polarity) == oracle_pr_f1(
                    scores, labels, threshold, polarity
                )

    def test_polarity_flip_with_negated_scores(self):
        rng = np.random.default_rng(43)
        scores = rng.uniform(size=15).tolist()
        labels = ["hallucinated" if rng.uniform() < 0.4 else "faithful" for _ in range(15)]
        low = pr_f1(scores, labels, 0.5, "low_score_flags")
        high = pr_f1([-s for s in scores], labels, -0.5, "high_score_flags")
        assert low == high

    def test_degenerate_denominators(self):
        assert pr_f1([1.0], ["faithful"], 0.5, "low_score_flags") == (0.0, 0.0, 0.0)

    def test_bad_polarity(self):
        with pytest.raises(ValueError):
            pr_f1([1.0], ["faithful"], 0.5, "sideways")


class TestThresholdSweep:
    def test_separable_returns_smallest_separating(self):
        scores = [0.1, 0.2, 0.8, 0.9]
        labels = ["hallucinated", "hallucinated", "faithful", "faithful"]
        grid = [0.0, 0.2, 0.5, 0.7, 1.0]
        sweep = threshold_sweep(scores, labels, "low_score_flags", grid)
        assert sweep.best_f1 == 1.0
        assert sweep.best_threshold == 0.2  # smallest grid point with f1 == 1

    def test_single_point_grid(self):
        sweep = threshold_sweep([0.3], ["hallucinated"], "low_score_flags", [0.4])
        assert sweep.best_threshold == 0.4
        assert len(sweep.curve) == 1

    def test_dominance(self):
        rng = np.random.default_rng(44)
        scores = rng.uniform(size=30).tolist()
        labels = ["hallucinated" if rng.uniform() < 0.5 else "faithful" for _ in range(30)]
        grid = np.linspace(0, 1, 21).tolist()
        sweep = threshold_sweep(scores, labels, "low_score_flags", grid)
        assert all(sweep.best_f1 >= point.f1 for point in sweep.curve)

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            threshold_sweep([0.5], ["faithful"], "low_score_flags", [])


class TestStabilityScorer:
    def test_identical_samples_score_one(self):
        score = mock_scorer(dim=64)(["same text here"] * 4)
        assert score == 1.0

    def test_frobenius_statistic(self):
        scorer = mock_scorer(dim=64, statistic="frobenius_normalized")
        assert scorer(["same text here"] * 3) == 1.0

    def test_needs_two(self):
        with pytest.raises(InsufficientSamples):
            mock_scorer(dim=64)(["only one"])

    def test_unknown_statistic(self):
        with pytest.raises(ValueError):
            stability_scorer(lambda t: mock_embed(t, 64, 0), statistic="determinant")


class TestSampleSweep:
    def test_more_samples_do_not_hurt_on_synthetic(self):
        records, _ = corruption_corpus(
            n_levels=5, records_per_level=6, k=8, base_tokens=40, seed=2
        )
        rows = sample_sweep(records, [2, 8], mock_scorer(dim=1024, seed=2))
        by_k = {row.k: row for row in rows}
        assert by_k[8].spearman_pct >= by_k[2].spearman_pct

    def test_single_k(self):
        records = [
            SweepRecord(samples=("a b", "a b"), gold=1.0),
            SweepRecord(samples=("a b", "c d"), gold=0.5),
            SweepRecord(samples=("e f", "g h"), gold=0.0),
        ]
        rows = sample_sweep(records, [2], mock_scorer(dim=256))
        assert len(rows) == 1 and rows[0].k == 2

    def test_insufficient_samples(self):
        records = [SweepRecord(samples=("a", "b"), gold=1.0)]
        with pytest.raises(InsufficientSamples):
            sample_sweep(records, [4], mock_scorer(dim=64))


class TestCorruptionCorpus:
    def test_shape_and_gold_levels(self):
        records, fractions = corruption_corpus(
            n_levels=4, records_per_level=3, k=5, base_tokens=20, seed=1
        )
        assert len(records) == 12 and len(fractions) == 12
        assert all(len(r.samples) == 5 for r in records)
        assert sorted(set(fractions)) == [0.0, 0.25, 0.5, 0.75]
        for record, p in zip(records, fractions):
            assert record.gold == pytest.approx(1.0 - p)

    def test_deterministic(self):
        a, _ = corruption_corpus(n_levels=2, records_per_level=2, k=3, base_tokens=10, seed=9)
        b, _ = corruption_corpus(n_levels=2, records_per_level=2, k=3, base_tokens=10, seed=9)
        assert [r.samples for r in a] == [r.samples for r in b]

    def test_zero_corruption_replies_identical(self):
        records, fractions = corruption_corpus(
            n_levels=2, records_per_level=1, k=4, base_tokens=15, seed=3
        )
        pristine = records[fractions.index(0.0)]
        assert len(set(pristine.samples)) == 1


class TestDatasetIO:
    def test_passages_round_trip(self, tmp_path):
        records = [
            LabeledPassage(
                id="r1",
                sentences=("First.", "Second."),
                labels=("accurate", "minor"),
                samples=("s1", "s2"),
            ),
            LabeledPassage(id="r2", sentences=("Only.",), labels=("major",)),
        ]
        path = tmp_path / "passages.jsonl"
        write_passages_jsonl(path, records)
        assert read_passages_jsonl(path) == records

    def test_binary_round_trip(self, tmp_path):
        records = [
            BinaryRecord(id="b1", response="resp", label="hallucinated", samples=("x", "y")),
            BinaryRecord(id="b2", response="resp2", label="faithful", samples=("z",)),
        ]
        path = tmp_path / "binary.jsonl"
        write_binary_jsonl(path, records)
        assert read_binary_jsonl(path) == records

    def test_invalid_label_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "x", "sentences": ["a"], "labels": ["wrong"]}\n')
        with pytest.raises(DatasetError):
            read_passages_jsonl(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text("{broken\n")
        with pytest.raises(DatasetError):
            read_passages_jsonl(path)

    def test_sweep_records_from_passages(self):
        passages = [
            LabeledPassage(
                id="p", sentences=("a.", "b."), labels=("accurate", "major"), samples=("x", "y")
            )
        ]
        records = sweep_records_from_passages(passages)
        assert records[0].gold == 0.5 and records[0].samples == ("x", "y")

    def test_passages_encode_gold(self):
        records, _ = corruption_corpus(
            n_levels=5, records_per_level=1, k=3, base_tokens=10, seed=4
        )
        passages = passages_from_sweep_records(records)
        for record, passage in zip(records, passages):
            assert passage_score(passage.labels) == pytest.approx(record.gold, abs=1e-12)
            assert passage.samples == record.samples
