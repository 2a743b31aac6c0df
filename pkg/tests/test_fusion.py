import itertools
import math

import numpy as np
import pytest

from serfuse import synth
from serfuse.cache import CachedPredictions
from serfuse.classify import PredictionTable, confusion, uar
from serfuse.corpus import EmotionLabel, split_ids
from serfuse.errors import FusionError
from serfuse.fusion import (
    Combination,
    GroupFilter,
    enumerate_combinations,
    fusion_search,
    majority_vote,
    report_table,
)


def _names(n):
    return [f"s{i:02d}" for i in range(n)]


def test_combination_sorts_and_validates():
    combo = Combination(feature_set_names=("c", "a", "b"))
    assert combo.feature_set_names == ("a", "b", "c")
    with pytest.raises(FusionError):
        Combination(feature_set_names=("a", "b"))
    with pytest.raises(FusionError):
        Combination(feature_set_names=("a", "a", "b"))


@pytest.mark.parametrize("n,expected", [(4, 5), (8, 219), (12, 4017)])
def test_combination_counts(n, expected):
    combos = enumerate_combinations(_names(n))
    assert len(combos) == expected
    # Closed form: 2^n - 1 - n - C(n,2).
    assert expected == 2**n - 1 - n - math.comb(n, 2)


def test_enumeration_order_size_then_lex():
    combos = enumerate_combinations(["d", "b", "a", "c"])
    as_tuples = [c.feature_set_names for c in combos]
    assert as_tuples == [
        ("a", "b", "c"),
        ("a", "b", "d"),
        ("a", "c", "d"),
        ("b", "c", "d"),
        ("a", "b", "c", "d"),
    ]


def test_enumeration_rejects_duplicates():
    with pytest.raises(FusionError):
        enumerate_combinations(["a", "a", "b"])


def _table(labels_by_id, scores_by_id=None):
    entries = {}
    for utt_id, label in labels_by_id.items():
        scores = np.zeros(4)
        if scores_by_id and utt_id in scores_by_id:
            scores = np.asarray(scores_by_id[utt_id], dtype=float)
        entries[utt_id] = (EmotionLabel(label), scores)
    return PredictionTable(entries=entries)


def test_majority_vote_simple():
    ids = ["x", "y"]
    t1 = _table({"x": 0, "y": 1})
    t2 = _table({"x": 0, "y": 2})
    t3 = _table({"x": 3, "y": 1})
    fused = majority_vote([t1, t2, t3], ids)
    assert fused.label_of("x") is EmotionLabel.HAPPY  # 2 of 3 votes
    assert fused.label_of("y") is EmotionLabel.SAD
    # Output scores are the vote counts.
    assert fused.entries["x"][1].tolist() == [2.0, 0.0, 0.0, 1.0]


def test_majority_vote_tie_uses_summed_scores():
    ids = ["x"]
    t1 = _table({"x": 0}, {"x": [0.9, 0.0, 0.0, 0.0]})
    t2 = _table({"x": 1}, {"x": [0.0, 1.5, 0.0, 0.0]})
    fused = majority_vote([t1, t2], ids)
    # 1-1 vote tie; summed score favors class 1.
    assert fused.label_of("x") is EmotionLabel.SAD


def test_majority_vote_full_tie_takes_lowest_index():
    ids = ["x"]
    t1 = _table({"x": 2})
    t2 = _table({"x": 3})
    fused = majority_vote([t1, t2], ids)
    # Votes tied, summed scores all zero: lowest class index wins.
    assert fused.label_of("x") is EmotionLabel.ANGRY  # lowest index among tied {2, 3}
    t3 = _table({"x": 1})
    fused2 = majority_vote([t1, t2, t3], ids)
    assert fused2.label_of("x") is EmotionLabel.SAD


def test_majority_vote_idempotent_on_copies():
    ids = ["x", "y", "z"]
    base = _table(
        {"x": 0, "y": 2, "z": 3},
        {"x": [0.4, 0.1, 0.0, 0.0], "y": [0.0, 0.0, 0.9, 0.1], "z": [0.0, 0.0, 0.0, 1.0]},
    )
    for k in (1, 3, 5):
        fused = majority_vote([base] * k, ids)
        assert all(fused.label_of(i) == base.label_of(i) for i in ids)


def test_majority_vote_requires_coverage():
    t1 = _table({"x": 0})
    with pytest.raises(FusionError):
        majority_vote([t1], ["x", "missing"])
    with pytest.raises(FusionError):
        majority_vote([], ["x"])


def test_group_filter_parse():
    g = GroupFilter.parse("audio")
    assert g.modalities == frozenset({"audio"}) and g.label == "Audio"
    g = GroupFilter.parse("asr-text+gs-text")
    assert g.modalities == frozenset({"asr-text", "gs-text"})
    assert g.label == "ASR-Text + GS-Text"
    g = GroupFilter.parse("all")
    assert g.modalities == frozenset({"audio", "gs-text", "asr-text"})
    with pytest.raises(FusionError):
        GroupFilter.parse("video")


def _random_cached(manifest, names_modalities, seed=0):
    """Random prediction tables with continuous scores, fixed per seed."""
    rng = np.random.default_rng(seed)
    dev_ids = split_ids(manifest, "dev")
    test_ids = split_ids(manifest, "test")
    tables = {}
    for name, modality in names_modalities:
        halves = []
        for ids in (dev_ids, test_ids):
            entries = {}
            for i in ids:
                scores = rng.normal(size=4)
                entries[i] = (EmotionLabel(int(np.argmax(scores))), scores)
            halves.append(PredictionTable(entries=entries))
        tables[name] = CachedPredictions(
            name=name, modality=modality, c=1.0, dev=halves[0], test=halves[1]
        )
    return tables


def test_fusion_search_matches_brute_force(tiny_manifest):
    """Vectorized search equals per-combination majority_vote recomputation."""
    spec = [("a", "audio"), ("b", "gs-text"), ("c", "asr-text"), ("d", "audio"), ("e", "gs-text")]
    tables = _random_cached(tiny_manifest, spec, seed=3)
    results, summary = fusion_search(tables, GroupFilter.parse("all"), tiny_manifest)
    assert summary.count == 2**5 - 1 - 5 - 10  # 16

    dev_ids = split_ids(tiny_manifest, "dev")
    test_ids = split_ids(tiny_manifest, "test")
    truth_dev = tiny_manifest.labels(dev_ids)
    truth_test = tiny_manifest.labels(test_ids)
    for res in results:
        dev_tables = [tables[n].dev for n in res.combination.feature_set_names]
        test_tables = [tables[n].test for n in res.combination.feature_set_names]
        fused_dev = majority_vote(dev_tables, dev_ids)
        fused_test = majority_vote(test_tables, test_ids)
        assert res.dev_uar == pytest.approx(
            uar(confusion(truth_dev, fused_dev.labels(dev_ids)))
        )
        assert res.test_uar == pytest.approx(
            uar(confusion(truth_test, fused_test.labels(test_ids)))
        )


def test_fusion_search_twelve_sets_full_count(tiny_manifest):
    # Largest pool the sweep ever sees: all subsets of size >= 3 of 12 sets.
    spec = [
        (f"s{i:02d}", ("audio", "gs-text", "asr-text")[i % 3]) for i in range(12)
    ]
    tables = _random_cached(tiny_manifest, spec, seed=13)
    results, summary = fusion_search(tables, GroupFilter.parse("all"), tiny_manifest)
    assert summary.count == len(results) == 4017


def test_fusion_search_group_filter_restricts_pool(tiny_manifest):
    spec = [("a", "audio"), ("b", "audio"), ("c", "audio"), ("d", "gs-text")]
    tables = _random_cached(tiny_manifest, spec, seed=5)
    _, audio_only = fusion_search(tables, GroupFilter.parse("audio"), tiny_manifest)
    assert audio_only.count == 1  # exactly {a, b, c}
    assert audio_only.best.feature_set_names == ("a", "b", "c")
    _, pooled = fusion_search(tables, GroupFilter.parse("audio+gs-text"), tiny_manifest)
    assert pooled.count == 5
    with pytest.raises(FusionError):
        fusion_search(tables, GroupFilter.parse("asr-text"), tiny_manifest)


def test_fusion_search_jobs_invariant(tiny_manifest):
    spec = [("a", "audio"), ("b", "gs-text"), ("c", "asr-text"), ("d", "audio")]
    tables = _random_cached(tiny_manifest, spec, seed=7)
    serial_results, serial_summary = fusion_search(
        tables, GroupFilter.parse("all"), tiny_manifest, jobs=1
    )
    par_results, par_summary = fusion_search(
        tables, GroupFilter.parse("all"), tiny_manifest, jobs=4
    )
    assert serial_summary == par_summary
    assert [r.dev_uar for r in serial_results] == [r.dev_uar for r in par_results]
    assert [r.tie_count for r in serial_results] == [r.tie_count for r in par_results]


def test_fusion_summary_statistics(tiny_manifest):
    spec = [("a", "audio"), ("b", "gs-text"), ("c", "asr-text"), ("d", "audio")]
    tables = _random_cached(tiny_manifest, spec, seed=11)
    results, summary = fusion_search(tables, GroupFilter.parse("all"), tiny_manifest)
    dev_uars = [r.dev_uar for r in results]
    assert summary.count == len(results) == 5
    assert summary.mean_dev_uar == pytest.approx(np.mean(dev_uars))
    assert summary.std_dev_uar == pytest.approx(np.std(dev_uars, ddof=1))
    assert summary.max_dev_uar == max(dev_uars)
    # The reported test score belongs to the dev argmax, not the test argmax.
    best = max(
        results,
        key=lambda r: (
            r.dev_uar,
            -len(r.combination),
            tuple(-ord(ch) for ch in "+".join(r.combination.feature_set_names)),
        ),
    )
    assert summary.test_uar == best.test_uar


def test_fusion_best_tie_prefers_fewer_then_lex(tiny_manifest):
    dev_ids = split_ids(tiny_manifest, "dev")
    test_ids = split_ids(tiny_manifest, "test")
    # All predictors perfect: every combination reaches dev UAR 1.0.
    def perfect():
        dev = {
            i: (tiny_manifest[i].label, np.zeros(4)) for i in dev_ids
        }
        test = {
            i: (tiny_manifest[i].label, np.zeros(4)) for i in test_ids
        }
        return PredictionTable(entries=dev), PredictionTable(entries=test)

    tables = {}
    for name, modality in [("b", "audio"), ("a", "audio"), ("c", "audio"), ("d", "audio")]:
        dev, test = perfect()
        tables[name] = CachedPredictions(name=name, modality=modality, c=1.0, dev=dev, test=test)
    _, summary = fusion_search(tables, GroupFilter.parse("audio"), tiny_manifest)
    assert summary.max_dev_uar == 1.0
    # Size-3 combos precede the size-4 one; lexicographically first wins.
    assert summary.best.feature_set_names == ("a", "b", "c")


def test_tie_count_reflects_vote_ties(tiny_manifest):
    dev_ids = split_ids(tiny_manifest, "dev")
    test_ids = split_ids(tiny_manifest, "test")

    def constant(label):
        dev = {i: (label, np.zeros(4)) for i in dev_ids}
        test = {i: (label, np.zeros(4)) for i in test_ids}
        return PredictionTable(entries=dev), PredictionTable(entries=test)

    tables = {}
    for name, label in [
        ("a", EmotionLabel.HAPPY),
        ("b", EmotionLabel.SAD),
        ("c", EmotionLabel.ANGRY),
    ]:
        dev, test = constant(label)
        tables[name] = CachedPredictions(name=name, modality="audio", c=1.0, dev=dev, test=test)
    results, _ = fusion_search(tables, GroupFilter.parse("audio"), tiny_manifest)
    # Three disagreeing voters tie on every utterance of both splits.
    assert results[0].tie_count == len(dev_ids) + len(test_ids)


def test_report_table_formatting():
    from serfuse.fusion import FusionSummary

    summary = FusionSummary(
        group_label="Audio",
        count=5,
        mean_dev_uar=0.7355,
        std_dev_uar=0.0111,
        max_dev_uar=0.75,
        test_uar=0.738,
        best=Combination(feature_set_names=("a", "b", "c")),
    )
    text = report_table([summary])
    lines = text.splitlines()
    assert lines[0] == "Group\t#\tMean Dev\tMax Dev\tTest"
    assert lines[1] == "Audio\t5\t73.6 ± 1.1\t75.0\t73.8"


def test_report_table_empty_is_header_only():
    assert report_table([]) == "Group\t#\tMean Dev\tMax Dev\tTest\n"
