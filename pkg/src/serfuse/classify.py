"""Per-feature-set linear SVMs with train-split standardization and UAR.

One one-vs-rest linear machine per emotion class, trained by deterministic
dual coordinate descent on the L2-regularized hinge loss. The bias is
carried as an appended constant feature, so it shares the regularizer; the
dual then has simple box constraints and needs no equality constraint.
Hyperparameters are selected on the development split by UAR.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import LABELS, EmotionLabel, FeatureSet, Manifest, split_ids
from .errors import TrainingError
from .util import fnv1a_64

N_CLASSES = len(LABELS)

DEFAULT_C_GRID = tuple(2.0**k for k in range(-5, 6, 2))
DEFAULT_TOL = 1e-4
DEFAULT_MAX_EPOCHS = 1000
_STD_FLOOR = 1e-8


@dataclass(frozen=True)
class Standardizer:
    """Per-dimension mean and (floored) population stddev from the train split."""

    mean: np.ndarray
    stddev: np.ndarray

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        return (np.asarray(matrix, dtype=np.float64) - self.mean) / self.stddev


def fit_standardizer(features: FeatureSet, train_ids: list[str]) -> Standardizer:
    if not train_ids:
        raise TrainingError("cannot fit a standardizer on an empty train split")
    matrix = features.matrix(train_ids)
    mean = matrix.mean(axis=0)
    stddev = np.maximum(matrix.std(axis=0), _STD_FLOOR)
    return Standardizer(mean=mean, stddev=stddev)


def standardize_features(features: FeatureSet, standardizer: Standardizer) -> FeatureSet:
    vectors = {i: standardizer.transform(v) for i, v in features.vectors.items()}
    return FeatureSet(
        name=features.name, modality=features.modality, dim=features.dim, vectors=vectors
    )


@dataclass(frozen=True)
class SvmModel:
    """One-vs-rest hyperplanes; column dim holds the bias weight."""

    weights: np.ndarray
    C: float
    feature_set_name: str

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", weights)
        if weights.shape[0] != N_CLASSES:
            raise ValueError(f"expected {N_CLASSES} hyperplane rows, got {weights.shape[0]}")
        if not np.all(np.isfinite(weights)):
            raise ValueError("model weights must be finite")

    @property
    def dim(self) -> int:
        return self.weights.shape[1] - 1

    def decision_scores(self, matrix: np.ndarray) -> np.ndarray:
        return matrix @ self.weights[:, :-1].T + self.weights[:, -1]

    def objective(self, matrix: np.ndarray, labels: np.ndarray) -> float:
        """Summed one-vs-rest objective 0.5*||w||^2 + C*sum(hinge) on given data."""
        scores = self.decision_scores(matrix)
        total = 0.0
        for k in range(N_CLASSES):
            y = np.where(labels == k, 1.0, -1.0)
            margin = 1.0 - y * scores[:, k]
            total += 0.5 * float(self.weights[k] @ self.weights[k])
            total += self.C * float(np.maximum(margin, 0.0).sum())
        return total


def _dual_cd(
    x_aug: np.ndarray,
    y: np.ndarray,
    c: float,
    rng: np.random.Generator,
    tol: float,
    max_epochs: int,
) -> np.ndarray:
    """Dual coordinate descent for the L1-loss (hinge) linear SVM.

    Stops when the largest projected gradient magnitude over an epoch falls
    below ``tol``.
    """
    n = x_aug.shape[0]
    q_diag = (x_aug**2).sum(axis=1)
    alpha = np.zeros(n)
    w = np.zeros(x_aug.shape[1])
    for _ in range(max_epochs):
        max_pg = 0.0
        for i in rng.permutation(n):
            xi = x_aug[i]
            g = y[i] * (w @ xi) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= c:
                pg = max(g, 0.0)
            else:
                pg = g
            if pg != 0.0:
                abs_pg = abs(pg)
                if abs_pg > max_pg:
                    max_pg = abs_pg
                a_new = min(max(a - g / q_diag[i], 0.0), c)
                if a_new != a:
                    w += (a_new - a) * y[i] * xi
                    alpha[i] = a_new
        if max_pg < tol:
            break
    return w


def train_svm(
    features: FeatureSet,
    manifest: Manifest,
    c: float,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
) -> SvmModel:
    """Fit four one-vs-rest machines on the (already standardized) train split."""
    train_ids = split_ids(manifest, "train")
    if not train_ids:
        raise TrainingError("train split is empty")
    labels = manifest.labels(train_ids)
    if len(np.unique(labels)) < 2:
        raise TrainingError("train split needs examples of at least two classes")
    matrix = features.matrix(train_ids)
    x_aug = np.hstack([matrix, np.ones((matrix.shape[0], 1))])

    weights = np.zeros((N_CLASSES, x_aug.shape[1]))
    name_hash = fnv1a_64(features.name) & 0xFFFFFFFF
    for k in range(N_CLASSES):
        y = np.where(labels == k, 1.0, -1.0)
        rng = np.random.default_rng([seed, name_hash, k])
        weights[k] = _dual_cd(x_aug, y, c, rng, tol, max_epochs)
    return SvmModel(weights=weights, C=c, feature_set_name=features.name)


@dataclass
class PredictionTable:
    """Predicted label and the four decision scores per utterance."""

    entries: dict[str, tuple[EmotionLabel, np.ndarray]]

    def label_of(self, utt_id: str) -> EmotionLabel:
        return self.entries[utt_id][0]

    def labels(self, ids: list[str]) -> np.ndarray:
        return np.array([int(self.entries[i][0]) for i in ids], dtype=np.int64)

    def scores(self, ids: list[str]) -> np.ndarray:
        return np.stack([self.entries[i][1] for i in ids])

    def covers(self, ids: list[str]) -> bool:
        return all(i in self.entries for i in ids)


def predict(
    model: SvmModel,
    standardizer: Standardizer | None,
    features: FeatureSet,
    ids: list[str],
) -> PredictionTable:
    """Scores on standardized inputs; argmax label, ties to the lowest index."""
    matrix = features.matrix(ids)
    if standardizer is not None:
        matrix = standardizer.transform(matrix)
    scores = model.decision_scores(matrix)
    entries = {}
    for row, utt_id in enumerate(ids):
        s = scores[row]
        entries[utt_id] = (EmotionLabel(int(np.argmax(s))), s.copy())
    return PredictionTable(entries=entries)


@dataclass(frozen=True)
class ConfusionMatrix:
    """4x4 counts; rows are true labels, columns predicted."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.shape != (N_CLASSES, N_CLASSES):
            raise ValueError(f"confusion matrix must be {N_CLASSES}x{N_CLASSES}")
        if np.any(counts < 0):
            raise ValueError("confusion counts must be non-negative")


def confusion(true_labels: np.ndarray, predicted_labels: np.ndarray) -> ConfusionMatrix:
    if len(true_labels) != len(predicted_labels):
        raise ValueError("label arrays must have equal length")
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(counts, (true_labels, predicted_labels), 1)
    return ConfusionMatrix(counts=counts)


def uar(conf: ConfusionMatrix) -> float:
    """Unweighted average recall: mean of the per-class diagonal shares."""
    counts = conf.counts
    support = counts.sum(axis=1)
    for k in range(N_CLASSES):
        if support[k] == 0:
            raise ValueError(f"UAR undefined: class {LABELS[k].tag!r} has zero support")
    return float((np.diag(counts) / support).mean())


def uar_of(table: PredictionTable, manifest: Manifest, ids: list[str]) -> float:
    return uar(confusion(manifest.labels(ids), table.labels(ids)))


def select_C(
    features: FeatureSet,
    manifest: Manifest,
    grid=DEFAULT_C_GRID,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
) -> tuple[SvmModel, float]:
    """Dev-UAR argmax over the C grid; exact ties keep the smaller C."""
    values = sorted(set(float(c) for c in grid))
    if not values:
        raise TrainingError("empty C grid")
    dev_ids = split_ids(manifest, "dev")
    best: tuple[SvmModel, float] | None = None
    for c in values:
        model = train_svm(features, manifest, c, seed=seed, tol=tol, max_epochs=max_epochs)
        dev_uar = uar_of(predict(model, None, features, dev_ids), manifest, dev_ids)
        if best is None or dev_uar > best[1]:
            best = (model, dev_uar)
    return best
