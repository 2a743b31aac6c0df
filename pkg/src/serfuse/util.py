"""Small shared helpers: stable hashing, report rounding, rank correlation."""
from __future__ import annotations

import hashlib
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: str | bytes) -> int:
    """64-bit FNV-1a hash; the one fixed string hash used everywhere.

    Both the hashed bag-of-words buckets and per-utterance corruption seeds
    depend on it, so it must never change.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def pct(fraction: float, decimals: int = 1) -> str:
    """Format a fraction as a percentage, rounding half away from zero.

    ``pct(0.7355) == "73.6"``; plain ``round`` would banker-round such ties.
    """
    q = Decimal(1).scaleb(-decimals)
    value = (Decimal(repr(float(fraction))) * 100).quantize(q, rounding=ROUND_HALF_UP)
    return f"{value:.{decimals}f}"


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties.

    Returns NaN when either side is constant or has fewer than two points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("spearman requires equally sized inputs")
    if len(x) < 2:
        return float("nan")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    sx = rx.std()
    sy = ry.std()
    if sx == 0.0 or sy == 0.0:
        return float("nan")
    return float(((rx - rx.mean()) * (ry - ry.mean())).mean() / (sx * sy))


def sha256_file(path: Path | str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
