"""Corpus data model: utterances, emotion labels, splits, and feature-set I/O.

Manifest and feature files are plain tab-separated text with a header line,
so they stay inspectable and diffable. Utterance order in the file is the
canonical iteration order for every downstream computation.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FeatureSetError, ManifestError

MODALITIES = ("audio", "gs-text", "asr-text")

_MANIFEST_COLUMNS = ("id", "session", "speaker", "label", "gold_transcript")


class EmotionLabel(enum.IntEnum):
    """The four emotion categories, in the fixed tie-breaking order."""

    HAPPY = 0
    SAD = 1
    ANGRY = 2
    NEUTRAL = 3

    @classmethod
    def parse(cls, text: str) -> "EmotionLabel":
        # "excited" folds into happy; anything else is a labelling error.
        try:
            return _LABEL_ALIASES[text.strip().lower()]
        except KeyError:
            raise ManifestError(f"unknown emotion label {text!r}") from None

    @property
    def tag(self) -> str:
        return self.name.lower()


_LABEL_ALIASES = {
    "happy": EmotionLabel.HAPPY,
    "excited": EmotionLabel.HAPPY,
    "sad": EmotionLabel.SAD,
    "angry": EmotionLabel.ANGRY,
    "neutral": EmotionLabel.NEUTRAL,
}

LABELS = tuple(EmotionLabel)


@dataclass(frozen=True)
class SplitRule:
    """Session-based train/dev/test assignment.

    The three session sets must be pairwise disjoint and non-empty. The
    default mirrors the speaker-independent convention: sessions 1-3 train,
    4 dev, 5 test.
    """

    train_sessions: frozenset[int] = frozenset({1, 2, 3})
    dev_sessions: frozenset[int] = frozenset({4})
    test_sessions: frozenset[int] = frozenset({5})

    def __post_init__(self):
        sets = {
            "train": frozenset(self.train_sessions),
            "dev": frozenset(self.dev_sessions),
            "test": frozenset(self.test_sessions),
        }
        for name, sessions in sets.items():
            if not sessions:
                raise ManifestError(f"split rule has empty {name} session set")
            object.__setattr__(self, f"{name}_sessions", sessions)
        if (
            sets["train"] & sets["dev"]
            or sets["train"] & sets["test"]
            or sets["dev"] & sets["test"]
        ):
            raise ManifestError("split rule session sets overlap")

    def split_of(self, session: int) -> str:
        if session in self.train_sessions:
            return "train"
        if session in self.dev_sessions:
            return "dev"
        if session in self.test_sessions:
            return "test"
        raise ManifestError(f"session {session} is not covered by the split rule")


@dataclass(frozen=True)
class Utterance:
    id: str
    speaker_id: str
    session: int
    label: EmotionLabel
    gold_transcript: str
    asr_transcripts: dict[str, str] = field(default_factory=dict)
    audio_path: Path | None = None

    def __post_init__(self):
        if self.session not in {1, 2, 3, 4, 5}:
            raise ManifestError(
                f"utterance {self.id!r}: session must be 1..5, got {self.session}"
            )


class Manifest:
    """Ordered utterance collection with an eager split assignment."""

    def __init__(self, utterances: list[Utterance], split_rule: SplitRule | None = None):
        self.split_rule = split_rule or SplitRule()
        self.utterances = list(utterances)
        seen: set[str] = set()
        self._splits: dict[str, list[str]] = {"train": [], "dev": [], "test": []}
        for utt in self.utterances:
            if utt.id in seen:
                raise ManifestError(f"duplicate utterance id {utt.id!r}")
            seen.add(utt.id)
            self._splits[self.split_rule.split_of(utt.session)].append(utt.id)
        self._by_id = {utt.id: utt for utt in self.utterances}

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def __getitem__(self, utt_id: str) -> Utterance:
        try:
            return self._by_id[utt_id]
        except KeyError:
            raise ManifestError(f"unknown utterance id {utt_id!r}") from None

    @property
    def ids(self) -> list[str]:
        return [utt.id for utt in self.utterances]

    def asr_systems(self) -> list[str]:
        systems: dict[str, None] = {}
        for utt in self.utterances:
            for name in utt.asr_transcripts:
                systems.setdefault(name)
        return list(systems)

    def labels(self, ids: list[str]) -> np.ndarray:
        return np.array([int(self._by_id[i].label) for i in ids], dtype=np.int64)


def split_ids(manifest: Manifest, split: str) -> list[str]:
    """Utterance ids of one split, in manifest order.

    The three results partition the manifest's ids.
    """
    try:
        return list(manifest._splits[split])
    except KeyError:
        raise ValueError(f"split must be train|dev|test, got {split!r}") from None


def load_manifest(path: Path | str, split_rule: SplitRule | None = None) -> Manifest:
    """Parse a tab-separated manifest file.

    The header names the columns; ``asr:<system>`` columns and ``audio_path``
    are optional. Errors carry the offending line number.
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ManifestError(f"{path}: empty manifest file")
    header = lines[0].split("\t")
    missing = [col for col in _MANIFEST_COLUMNS if col not in header]
    if missing:
        raise ManifestError(f"{path}:1: header missing columns {missing}")
    col = {name: idx for idx, name in enumerate(header)}
    asr_cols = [name for name in header if name.startswith("asr:")]

    utterances = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != len(header):
            raise ManifestError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}"
            )
        try:
            session = int(fields[col["session"]])
        except ValueError:
            raise ManifestError(
                f"{path}:{lineno}: session {fields[col['session']]!r} is not an integer"
            ) from None
        try:
            label = EmotionLabel.parse(fields[col["label"]])
        except ManifestError as exc:
            raise ManifestError(f"{path}:{lineno}: {exc}") from None
        asr = {
            name[len("asr:") :]: fields[col[name]]
            for name in asr_cols
            if fields[col[name]] != ""
        }
        audio = None
        if "audio_path" in col and fields[col["audio_path"]]:
            audio = Path(fields[col["audio_path"]])
        try:
            utterances.append(
                Utterance(
                    id=fields[col["id"]],
                    speaker_id=fields[col["speaker"]],
                    session=session,
                    label=label,
                    gold_transcript=fields[col["gold_transcript"]],
                    asr_transcripts=asr,
                    audio_path=audio,
                )
            )
        except ManifestError as exc:
            raise ManifestError(f"{path}:{lineno}: {exc}") from None
    try:
        return Manifest(utterances, split_rule)
    except ManifestError as exc:
        raise ManifestError(f"{path}: {exc}") from None


def write_manifest(path: Path | str, manifest: Manifest) -> None:
    systems = manifest.asr_systems()
    has_audio = any(utt.audio_path is not None for utt in manifest)
    header = list(_MANIFEST_COLUMNS) + [f"asr:{s}" for s in systems]
    if has_audio:
        header.append("audio_path")
    rows = ["\t".join(header)]
    for utt in manifest:
        fields = [
            utt.id,
            str(utt.session),
            utt.speaker_id,
            utt.label.tag,
            utt.gold_transcript,
        ]
        fields += [utt.asr_transcripts.get(s, "") for s in systems]
        if has_audio:
            fields.append("" if utt.audio_path is None else str(utt.audio_path))
        rows.append("\t".join(fields))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


@dataclass
class FeatureSet:
    """A named matrix of per-utterance feature vectors.

    ``vectors`` maps utterance id to a 1-D float array of length ``dim``;
    every id of the owning manifest must be present and all values finite.
    """

    name: str
    modality: str
    dim: int
    vectors: dict[str, np.ndarray]

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise FeatureSetError(
                f"feature set {self.name!r}: modality must be one of {MODALITIES}, "
                f"got {self.modality!r}"
            )
        if self.dim < 1:
            raise FeatureSetError(f"feature set {self.name!r}: dim must be positive")

    def matrix(self, ids: list[str]) -> np.ndarray:
        """Rows for the given ids, stacked in order."""
        try:
            return np.stack([self.vectors[i] for i in ids])
        except KeyError as exc:
            raise FeatureSetError(
                f"feature set {self.name!r} has no vector for id {exc.args[0]!r}"
            ) from None

    def validate_against(self, manifest: Manifest) -> None:
        missing = [i for i in manifest.ids if i not in self.vectors]
        if missing:
            raise FeatureSetError(
                f"feature set {self.name!r} missing utterances: {', '.join(missing[:8])}"
                + (" ..." if len(missing) > 8 else "")
            )


def load_feature_set(path: Path | str, manifest: Manifest) -> FeatureSet:
    """Read a feature file and check it covers the manifest with finite values."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#featureset"):
        raise FeatureSetError(f"{path}:1: missing '#featureset' header")
    meta = _parse_header(path, lines[0], "#featureset", ("name", "modality", "dim"))
    try:
        dim = int(meta["dim"])
    except ValueError:
        raise FeatureSetError(f"{path}:1: dim {meta['dim']!r} is not an integer") from None

    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        utt_id = fields[0]
        if utt_id in vectors:
            raise FeatureSetError(f"{path}:{lineno}: duplicate row for id {utt_id!r}")
        if len(fields) - 1 != dim:
            raise FeatureSetError(
                f"{path}:{lineno}: id {utt_id!r} has {len(fields) - 1} values, expected {dim}"
            )
        try:
            vec = np.array([float(v) for v in fields[1:]], dtype=np.float64)
        except ValueError:
            raise FeatureSetError(f"{path}:{lineno}: non-numeric feature value") from None
        if not np.all(np.isfinite(vec)):
            raise FeatureSetError(f"{path}:{lineno}: non-finite feature value for {utt_id!r}")
        vectors[utt_id] = vec

    fs = FeatureSet(name=meta["name"], modality=meta["modality"], dim=dim, vectors=vectors)
    fs.validate_against(manifest)
    return fs


def write_feature_set(path: Path | str, features: FeatureSet, ids: list[str] | None = None) -> None:
    """Serialize a feature set; floats use repr so a reload is bit-identical."""
    order = ids if ids is not None else list(features.vectors)
    lines = [
        f"#featureset name={features.name} modality={features.modality} dim={features.dim}"
    ]
    for utt_id in order:
        vec = features.vectors[utt_id]
        lines.append(utt_id + "\t" + "\t".join(repr(float(v)) for v in vec))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_header(path: Path, line: str, tag: str, required: tuple[str, ...]) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != tag:
        raise FeatureSetError(f"{path}:1: expected {tag} header")
    meta: dict[str, str] = {}
    for part in parts[1:]:
        if "=" not in part:
            raise FeatureSetError(f"{path}:1: malformed header field {part!r}")
        key, value = part.split("=", 1)
        meta[key] = value
    missing = [key for key in required if key not in meta]
    if missing:
        raise FeatureSetError(f"{path}:1: header missing {missing}")
    return meta


def check_nonfinite(name: str, matrix: np.ndarray) -> None:
    if not np.all(np.isfinite(matrix)):
        raise FeatureSetError(f"feature set {name!r} contains non-finite values")


def speaker_sets(manifest: Manifest) -> dict[str, set[str]]:
    """Speaker ids per split; disjoint under a session-based rule."""
    out: dict[str, set[str]] = {}
    for split in ("train", "dev", "test"):
        out[split] = {manifest[i].speaker_id for i in split_ids(manifest, split)}
    return out


def class_support(manifest: Manifest, ids: list[str]) -> dict[EmotionLabel, int]:
    support = {label: 0 for label in LABELS}
    for utt_id in ids:
        support[manifest[utt_id].label] += 1
    return support


def require_all_classes(manifest: Manifest, ids: list[str], context: str) -> None:
    support = class_support(manifest, ids)
    empty = [label.tag for label, count in support.items() if count == 0]
    if empty:
        raise ManifestError(f"{context}: no utterances for class(es) {', '.join(empty)}")
