"""Prediction persistence for fusion and report runs.

A cached file holds one classifier's predictions for one split:

    #predictions set=<name> modality=<m> C=<c> split=<dev|test>
    <id>\t<label>\t<s0> <s1> <s2> <s3>

Scores are serialized with repr() so a read/write round trip preserves the
exact float64 values.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import N_CLASSES, EmotionLabel, PredictionTable
from .corpus import MODALITIES
from .errors import FeatureSetError


@dataclass(frozen=True)
class CachedPredictions:
    """Dev and test predictions of one trained classifier."""

    name: str
    modality: str
    c: float
    dev: PredictionTable
    test: PredictionTable

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise FeatureSetError(f"unknown modality {self.modality!r} for {self.name!r}")

    def split(self, split: str) -> PredictionTable:
        if split == "dev":
            return self.dev
        if split == "test":
            return self.test
        raise ValueError(f"no cached predictions for split {split!r}")


def write_predictions(path: Path, table: PredictionTable, name: str, modality: str, c: float, split: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#predictions set={name} modality={modality} C={repr(float(c))} split={split}\n")
        for utt_id in sorted(table.entries):
            label, scores = table.entries[utt_id]
            score_text = " ".join(repr(float(v)) for v in scores)
            fh.write(f"{utt_id}\t{label.tag}\t{score_text}\n")


def read_predictions(path: Path) -> tuple[PredictionTable, dict]:
    """Returns the table plus the header fields (set, modality, C, split)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("#predictions "):
            raise FeatureSetError(f"{path}: not a predictions file")
        meta = {}
        for field in header[len("#predictions "):].split():
            key, _, value = field.partition("=")
            meta[key] = value
        for want in ("set", "modality", "C", "split"):
            if want not in meta:
                raise FeatureSetError(f"{path}: header missing {want}=")
        meta["C"] = float(meta["C"])
        entries = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FeatureSetError(f"{path}:{lineno}: expected 3 tab-separated fields")
            utt_id, tag, score_text = parts
            scores = np.array([float(v) for v in score_text.split()])
            if scores.shape != (N_CLASSES,):
                raise FeatureSetError(f"{path}:{lineno}: expected {N_CLASSES} scores")
            if utt_id in entries:
                raise FeatureSetError(f"{path}:{lineno}: duplicate id {utt_id!r}")
            entries[utt_id] = (EmotionLabel.parse(tag), scores)
    return PredictionTable(entries=entries), meta


def load_cached(dev_path: Path, test_path: Path) -> CachedPredictions:
    dev, dev_meta = read_predictions(dev_path)
    test, test_meta = read_predictions(test_path)
    for key in ("set", "modality", "C"):
        if dev_meta[key] != test_meta[key]:
            raise FeatureSetError(f"cache mismatch between {dev_path} and {test_path}: {key}")
    if dev_meta["split"] != "dev" or test_meta["split"] != "test":
        raise FeatureSetError(f"cache files {dev_path}, {test_path} have wrong split tags")
    return CachedPredictions(
        name=dev_meta["set"],
        modality=dev_meta["modality"],
        c=dev_meta["C"],
        dev=dev,
        test=test,
    )
