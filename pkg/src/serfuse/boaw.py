"""Bag-of-Audio-Words: random-sampling codebooks, 10-nearest quantization,
and log term-frequency weighted histograms.

Two codebooks are learnt from the training split only (one over LLD frames,
one over their deltas); every utterance is then encoded as the concatenation
of both histograms, giving vectors of length 2 * N.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .corpus import FeatureSet, Manifest, split_ids
from .dsp import LLDFrameSequence
from .errors import CodebookError

DEFAULT_CODEBOOK_SIZE = 2000
DEFAULT_ASSIGNMENTS = 10


@dataclass(frozen=True)
class Codebook:
    """N codewords sampled verbatim from training frames."""

    codewords: np.ndarray
    source: str
    seed: int

    def __post_init__(self):
        if self.source not in ("llds", "deltas"):
            raise CodebookError(f"codebook source must be llds|deltas, got {self.source!r}")
        cw = np.asarray(self.codewords, dtype=np.float64)
        object.__setattr__(self, "codewords", cw)
        if cw.ndim != 2 or cw.shape[0] < 1:
            raise CodebookError("codebook needs at least one codeword")
        if not np.all(np.isfinite(cw)):
            raise CodebookError("codebook contains non-finite values")

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def dim(self) -> int:
        return self.codewords.shape[1]


def learn_codebook(frames: np.ndarray, size_n: int, seed: int, source: str = "llds") -> Codebook:
    """Sample ``size_n`` rows uniformly without replacement, order-stable per seed."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise CodebookError("frames must be a 2-D matrix")
    if not np.all(np.isfinite(frames)):
        raise CodebookError("frames contain non-finite values")
    m = frames.shape[0]
    if m < size_n:
        raise CodebookError(f"cannot sample {size_n} codewords from {m} frames")
    rng = np.random.default_rng(seed)
    picks = rng.choice(m, size=size_n, replace=False)
    return Codebook(codewords=frames[picks].copy(), source=source, seed=seed)


def quantize(frames: np.ndarray, codebook: Codebook, assignments: int = DEFAULT_ASSIGNMENTS) -> np.ndarray:
    """Histogram of the ``assignments`` nearest codewords per frame.

    Distance ties break toward the lower codeword index (stable argsort), so
    quantization is deterministic. The histogram sums to assignments * T.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise ValueError("frames must be a 2-D matrix")
    if frames.shape[0] and frames.shape[1] != codebook.dim:
        raise ValueError(
            f"frame dimension {frames.shape[1]} does not match codebook dimension {codebook.dim}"
        )
    if assignments > codebook.size:
        raise ValueError(
            f"cannot assign {assignments} words from a codebook of {codebook.size}"
        )
    hist = np.zeros(codebook.size, dtype=np.float64)
    if frames.shape[0] == 0:
        return hist
    # Squared distances preserve the Euclidean ordering.
    sq = (
        (frames**2).sum(axis=1)[:, None]
        - 2.0 * frames @ codebook.codewords.T
        + (codebook.codewords**2).sum(axis=1)[None, :]
    )
    nearest = np.argsort(sq, axis=1, kind="stable")[:, :assignments]
    np.add.at(hist, nearest.ravel(), 1.0)
    return hist


def log_tf(histogram: np.ndarray) -> np.ndarray:
    """Elementwise ln(1 + c); compresses the numeric range, keeps zeros."""
    histogram = np.asarray(histogram, dtype=np.float64)
    if np.any(histogram < 0):
        raise ValueError("histogram entries must be non-negative")
    return np.log1p(histogram)


LLDProvider = Callable[[str], LLDFrameSequence]


def boaw_features(
    manifest: Manifest,
    lld_provider: LLDProvider | Mapping[str, LLDFrameSequence],
    size_n: int = DEFAULT_CODEBOOK_SIZE,
    assignments: int = DEFAULT_ASSIGNMENTS,
    seed: int = 0,
    name: str = "boaw",
) -> FeatureSet:
    """Full pipeline: train-split codebooks, per-utterance weighted histograms.

    Dev and test frames never reach codebook learning. The delta codebook
    uses seed + 1 so the two samples are independent but reproducible.
    """
    provider = lld_provider.__getitem__ if isinstance(lld_provider, Mapping) else lld_provider
    train = split_ids(manifest, "train")
    if not train:
        raise CodebookError("training split is empty; cannot learn codebooks")

    sequences = {utt.id: provider(utt.id) for utt in manifest}
    train_frames = np.concatenate([sequences[i].frames for i in train])
    train_deltas = np.concatenate([sequences[i].deltas for i in train])

    cb_llds = learn_codebook(train_frames, size_n, seed, source="llds")
    cb_deltas = learn_codebook(train_deltas, size_n, seed + 1, source="deltas")

    vectors = {}
    for utt in manifest:
        seq = sequences[utt.id]
        hist = np.concatenate(
            [
                quantize(seq.frames, cb_llds, assignments),
                quantize(seq.deltas, cb_deltas, assignments),
            ]
        )
        vectors[utt.id] = log_tf(hist)
    return FeatureSet(name=name, modality="audio", dim=2 * size_n, vectors=vectors)


def write_codebook(path: Path | str, codebook: Codebook) -> None:
    lines = [
        f"#codebook source={codebook.source} N={codebook.size} dim={codebook.dim} seed={codebook.seed}"
    ]
    for row in codebook.codewords:
        lines.append("\t".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_codebook(path: Path | str) -> Codebook:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#codebook"):
        raise CodebookError(f"{path}:1: missing '#codebook' header")
    meta = {}
    for part in lines[0].split()[1:]:
        if "=" not in part:
            raise CodebookError(f"{path}:1: malformed header field {part!r}")
        key, value = part.split("=", 1)
        meta[key] = value
    for key in ("source", "N", "dim", "seed"):
        if key not in meta:
            raise CodebookError(f"{path}:1: header missing {key!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rows.append([float(v) for v in line.split("\t")])
        except ValueError:
            raise CodebookError(f"{path}:{lineno}: non-numeric codeword value") from None
    codewords = np.array(rows, dtype=np.float64)
    if codewords.shape != (int(meta["N"]), int(meta["dim"])):
        raise CodebookError(
            f"{path}: body shape {codewords.shape} does not match header "
            f"N={meta['N']} dim={meta['dim']}"
        )
    return Codebook(codewords=codewords, source=meta["source"], seed=int(meta["seed"]))
