"""Majority-vote late fusion over cached per-classifier predictions.

Every feature-set combination of size >= 3 is evaluated on the development
split; the summary reports how many combinations a group admits, their mean
and spread, the development maximum, and the test score of the
development-selected combination (never the test argmax).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations as iter_combinations
from statistics import mean, stdev

import numpy as np

from .classify import N_CLASSES, EmotionLabel, PredictionTable, confusion, uar
from .corpus import Manifest, split_ids
from .errors import FusionError
from .util import pct

MIN_COMBINATION_SIZE = 3


@dataclass(frozen=True)
class Combination:
    feature_set_names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(sorted(self.feature_set_names))
        object.__setattr__(self, "feature_set_names", names)
        if len(set(names)) != len(names):
            raise FusionError(f"combination has duplicate names: {names}")
        if len(names) < MIN_COMBINATION_SIZE:
            raise FusionError(f"combination needs >= {MIN_COMBINATION_SIZE} sets, got {len(names)}")

    def __len__(self) -> int:
        return len(self.feature_set_names)


@dataclass(frozen=True)
class FusionResult:
    combination: Combination
    dev_uar: float
    test_uar: float
    tie_count: int  # utterances (dev + test) decided by the tie rule


@dataclass(frozen=True)
class GroupFilter:
    """Modality pool for one summary row.

    A multi-group row admits every >= 3-subset of the pooled sets; there is
    no requirement that each group actually be represented, which is what
    makes a two-group pool of 8 sets yield 219 combinations.
    """

    modalities: frozenset[str]
    label: str

    def __post_init__(self):
        if not self.modalities:
            raise FusionError("group filter needs at least one modality")

    @classmethod
    def parse(cls, spec: str) -> "GroupFilter":
        key = spec.strip().lower()
        if key in ("all", "all-systems"):
            return cls(frozenset({"audio", "gs-text", "asr-text"}), "All Systems")
        parts = tuple(sorted(p.strip() for p in key.split("+")))
        for part in parts:
            if part not in ("audio", "gs-text", "asr-text"):
                raise FusionError(f"unknown modality group {part!r} in {spec!r}")
        label = " + ".join(_DISPLAY[p] for p in parts)
        return cls(frozenset(parts), label)


_DISPLAY = {"audio": "Audio", "gs-text": "GS-Text", "asr-text": "ASR-Text"}

DEFAULT_GROUP_SPECS = (
    "audio",
    "gs-text",
    "asr-text",
    "audio+gs-text",
    "audio+asr-text",
    "asr-text+gs-text",
    "all",
)


def enumerate_combinations(pool: list[str], min_size: int = MIN_COMBINATION_SIZE) -> list[Combination]:
    """All subsets of size >= min_size, ordered by size then lexicographically."""
    if len(set(pool)) != len(pool):
        raise FusionError("feature-set pool contains duplicate names")
    ordered = sorted(pool)
    out = []
    for k in range(min_size, len(ordered) + 1):
        for names in iter_combinations(ordered, k):
            out.append(Combination(feature_set_names=names))
    return out


def majority_vote(tables: list[PredictionTable], ids: list[str]) -> PredictionTable:
    """Label with the most votes per utterance; output scores are vote counts.

    Vote ties break by the highest summed raw decision score over the tied
    labels; any remaining exact tie goes to the lowest class index.
    """
    if not tables:
        raise FusionError("majority vote needs at least one prediction table")
    for table in tables:
        if not table.covers(ids):
            raise FusionError("a prediction table does not cover all requested ids")
    entries = {}
    for utt_id in ids:
        votes = np.zeros(N_CLASSES)
        score_sum = np.zeros(N_CLASSES)
        for table in tables:
            label, scores = table.entries[utt_id]
            votes[int(label)] += 1.0
            score_sum += scores
        winner = _resolve_votes(votes, score_sum)[0]
        entries[utt_id] = (EmotionLabel(winner), votes.copy())
    return PredictionTable(entries=entries)


def _resolve_votes(votes: np.ndarray, score_sum: np.ndarray) -> tuple[int, bool]:
    top = votes.max()
    tied = np.flatnonzero(votes == top)
    if len(tied) == 1:
        return int(tied[0]), False
    best = tied[np.argmax(score_sum[tied])]  # argmax ties already favor low index
    return int(best), True


@dataclass(frozen=True)
class FusionSummary:
    group_label: str
    count: int
    mean_dev_uar: float
    std_dev_uar: float
    max_dev_uar: float
    test_uar: float
    best: Combination


class _VoteCache:
    """Per-split label one-hots and score stacks for fast combination scoring."""

    def __init__(self, tables, manifest: Manifest, split: str):
        self.ids = split_ids(manifest, split)
        self.truth = manifest.labels(self.ids)
        self.onehot = {}
        self.scores = {}
        for name, cached in tables.items():
            table = cached.split(split)
            labels = table.labels(self.ids)
            eye = np.zeros((len(self.ids), N_CLASSES))
            eye[np.arange(len(self.ids)), labels] = 1.0
            self.onehot[name] = eye
            self.scores[name] = table.scores(self.ids)

    def evaluate(self, names: tuple[str, ...]) -> tuple[float, int]:
        votes = sum(self.onehot[n] for n in names)
        top = votes.max(axis=1, keepdims=True)
        tied = votes == top
        n_tied = tied.sum(axis=1)
        score_sum = sum(self.scores[n] for n in names)
        # Rank primarily by vote count, within ties by summed decision score.
        masked = np.where(tied, score_sum, -np.inf)
        predicted = np.argmax(masked, axis=1)
        clear = n_tied == 1
        predicted = np.where(clear, np.argmax(votes, axis=1), predicted)
        ties = int((~clear).sum())
        return uar(confusion(self.truth, predicted)), ties


def fusion_search(
    tables,
    group: GroupFilter,
    manifest: Manifest,
    min_size: int = MIN_COMBINATION_SIZE,
    jobs: int = 1,
) -> tuple[list[FusionResult], FusionSummary]:
    """Evaluate every admitted combination and summarize the group row.

    ``tables`` maps feature-set name to cached per-split predictions (see
    :class:`serfuse.cache.CachedPredictions`). Results are deterministic and
    independent of ``jobs``.
    """
    pool = sorted(name for name, cached in tables.items() if cached.modality in group.modalities)
    combos = enumerate_combinations(pool, min_size)
    if not combos:
        raise FusionError(
            f"group {group.label!r} admits no combinations of >= {min_size} sets "
            f"(pool size {len(pool)})"
        )
    dev_cache = _VoteCache(tables, manifest, "dev")
    test_cache = _VoteCache(tables, manifest, "test")

    def score(combo: Combination) -> FusionResult:
        dev_uar, dev_ties = dev_cache.evaluate(combo.feature_set_names)
        test_uar, test_ties = test_cache.evaluate(combo.feature_set_names)
        return FusionResult(combo, dev_uar, test_uar, dev_ties + test_ties)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
            results = list(pool_exec.map(score, combos))
    else:
        results = [score(c) for c in combos]

    best = results[0]
    for res in results[1:]:
        if res.dev_uar > best.dev_uar:
            best = res
        elif res.dev_uar == best.dev_uar:
            # Prefer fewer sets, then lexicographic order.
            if (len(res.combination), res.combination.feature_set_names) < (
                len(best.combination),
                best.combination.feature_set_names,
            ):
                best = res
    dev_uars = [r.dev_uar for r in results]
    summary = FusionSummary(
        group_label=group.label,
        count=len(results),
        mean_dev_uar=mean(dev_uars),
        std_dev_uar=stdev(dev_uars) if len(dev_uars) > 1 else 0.0,
        max_dev_uar=best.dev_uar,
        test_uar=best.test_uar,
        best=best.combination,
    )
    return results, summary


def report_table(summaries: list[FusionSummary]) -> str:
    """Tab-separated rows: group, #, mean +/- std dev UAR, max dev, test."""
    lines = ["Group\t#\tMean Dev\tMax Dev\tTest"]
    for s in summaries:
        lines.append(
            "\t".join(
                [
                    s.group_label,
                    str(s.count),
                    f"{pct(s.mean_dev_uar)} ± {pct(s.std_dev_uar)}",
                    pct(s.max_dev_uar),
                    pct(s.test_uar),
                ]
            )
        )
    return "\n".join(lines) + "\n"
