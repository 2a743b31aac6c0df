"""Hashed bag-of-words text features with train-split TF-IDF.

These are the desk-scale stand-in for large pretrained sentence encoders;
their absolute scores are not comparable to published encoder results. The
tokenization is shared with the transcript scorer so features and error
rates see the same token stream. Pretrained embedding matrices can instead
be ingested from feature files and are only modality-checked here.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import FeatureSet, Manifest, load_feature_set, split_ids
from .errors import FeatureSetError, TranscriptError
from .transcripts import normalize
from .util import fnv1a_64

log = logging.getLogger(__name__)

_SIGN_BIT = 1 << 63

# Case-preserving variant of the shared tokenizer, for lowercase=False.
_CASED_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:'[A-Za-z0-9]+)*")


@dataclass(frozen=True)
class TextFeatConfig:
    hash_dim: int = 1024
    ngram_max: int = 1
    idf_smoothing: float = 1.0
    lowercase: bool = True

    def __post_init__(self):
        if self.hash_dim < 2:
            raise ValueError("hash_dim must be at least 2")
        if self.ngram_max not in (1, 2):
            raise ValueError("ngram_max must be 1 or 2")


@dataclass(frozen=True)
class IdfTable:
    """Inverse document frequencies fit on the training split only."""

    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", weights)
        if np.any(weights <= 0):
            raise ValueError("idf weights must be strictly positive")


def _terms(text: str, config: TextFeatConfig) -> list[str]:
    tokens = normalize(text) if config.lowercase else _CASED_TOKEN_RE.findall(text)
    if config.ngram_max == 2:
        tokens = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    return tokens


def _hashed_counts(terms: list[str], hash_dim: int) -> np.ndarray:
    vec = np.zeros(hash_dim, dtype=np.float64)
    for term in terms:
        h = fnv1a_64(term)
        sign = -1.0 if h & _SIGN_BIT else 1.0
        vec[h % hash_dim] += sign
    return vec


def fit_text_features(
    manifest: Manifest,
    source: str,
    config: TextFeatConfig | None = None,
    name: str | None = None,
) -> tuple[FeatureSet, IdfTable]:
    """Signed-hash token counts, TF-IDF weighted, L2-normalized per row.

    ``source`` is ``"gold"`` or ``"asr:<system>"``; the modality tag follows
    it. IDF document frequencies come from the training split alone.
    """
    config = config or TextFeatConfig()
    train = set(split_ids(manifest, "train"))
    if not train:
        raise TranscriptError("training split is empty; cannot fit idf")

    counts: dict[str, np.ndarray] = {}
    for utt in manifest:
        text = _transcript(utt, source)
        vec = _hashed_counts(_terms(text, config), config.hash_dim)
        if not vec.any():
            log.warning("utterance %s has an empty %s transcript; zero text vector", utt.id, source)
        counts[utt.id] = vec

    n_train = len(train)
    df = np.zeros(config.hash_dim, dtype=np.float64)
    for utt_id in train:
        df += counts[utt_id] != 0
    s = config.idf_smoothing
    idf = IdfTable(np.log((n_train + s) / (df + s)) + 1.0)

    vectors = {}
    for utt_id, vec in counts.items():
        weighted = vec * idf.weights
        norm = np.linalg.norm(weighted)
        vectors[utt_id] = weighted / norm if norm > 0 else weighted
    modality = "gs-text" if source == "gold" else "asr-text"
    if name is None:
        name = "text-gold" if source == "gold" else f"text-{source.replace(':', '-')}"
    return FeatureSet(name=name, modality=modality, dim=config.hash_dim, vectors=vectors), idf


def _transcript(utt, source: str) -> str:
    if source == "gold":
        return utt.gold_transcript
    if source.startswith("asr:"):
        system = source[len("asr:") :]
        try:
            return utt.asr_transcripts[system]
        except KeyError:
            raise TranscriptError(
                f"utterance {utt.id!r} has no transcript for ASR system {system!r}"
            ) from None
    raise TranscriptError(f"unknown transcript source {source!r}")


def transform_texts(
    texts: dict[str, str], idf: IdfTable, config: TextFeatConfig | None = None
) -> dict[str, np.ndarray]:
    """Apply an already-fit IdfTable to arbitrary texts (no refitting)."""
    config = config or TextFeatConfig()
    out = {}
    for utt_id, text in texts.items():
        vec = _hashed_counts(_terms(text, config), config.hash_dim) * idf.weights
        norm = np.linalg.norm(vec)
        out[utt_id] = vec / norm if norm > 0 else vec
    return out


def ingest_embeddings(path: Path | str, manifest: Manifest, modality: str) -> FeatureSet:
    """Load a pre-computed embedding feature file, enforcing the modality tag."""
    features = load_feature_set(path, manifest)
    if features.modality != modality:
        raise FeatureSetError(
            f"{path}: file declares modality {features.modality!r}, expected {modality!r}"
        )
    return features
