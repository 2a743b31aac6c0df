"""Synthetic emotion corpora for exercising the full pipeline at desk scale.

Real four-class emotion audio is licensed, so tests and the demo run on
generated stand-ins: transcripts whose vocabulary leaks the label, Gaussian
blob feature views, and per-class tone mixtures that the acoustic pipeline
can separate.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import LABELS, EmotionLabel, FeatureSet, Manifest, Utterance
from .dsp import Waveform, write_waveform_text
from .transcripts import CorruptionPlan, corrupt_corpus
from .util import fnv1a_64

CLASS_WORDS = {
    EmotionLabel.HAPPY: ("great", "wonderful", "laugh", "glad", "party", "sunny"),
    EmotionLabel.SAD: ("tears", "alone", "grey", "lost", "miss", "quiet"),
    EmotionLabel.ANGRY: ("furious", "shout", "blame", "rage", "slam", "enough"),
    EmotionLabel.NEUTRAL: ("table", "seven", "report", "window", "tuesday", "plain"),
}
FILLER_WORDS = ("i", "you", "the", "a", "was", "it", "so", "and", "to", "we")

# Per-class carrier frequencies, well under the 8 kHz Nyquist at 16 kHz.
CLASS_TONES_HZ = {
    EmotionLabel.HAPPY: 500.0,
    EmotionLabel.SAD: 1000.0,
    EmotionLabel.ANGRY: 2000.0,
    EmotionLabel.NEUTRAL: 4000.0,
}


def full_vocabulary() -> tuple[str, ...]:
    words: list[str] = []
    for label in LABELS:
        words.extend(CLASS_WORDS[label])
    words.extend(FILLER_WORDS)
    return tuple(words)


def synth_manifest(
    n_per_class: int = 40,
    seed: int = 0,
    word_rate: float = 0.6,
    length_range: tuple[int, int] = (6, 12),
) -> Manifest:
    """Balanced corpus over sessions 1..5 x speakers F/M with leaky transcripts.

    Each token is a class-characteristic word with probability ``word_rate``
    and a shared filler otherwise, so text features are informative but not
    trivially so.
    """
    rng = np.random.default_rng(seed)
    lo, hi = length_range
    slots = [(session, spk) for session in (1, 2, 3, 4, 5) for spk in ("F", "M")]
    utterances = []
    for label in LABELS:
        words = CLASS_WORDS[label]
        for i in range(n_per_class):
            session, spk = slots[i % len(slots)]
            length = int(rng.integers(lo, hi + 1))
            tokens = []
            for _ in range(length):
                if rng.random() < word_rate:
                    tokens.append(words[int(rng.integers(len(words)))])
                else:
                    tokens.append(FILLER_WORDS[int(rng.integers(len(FILLER_WORDS)))])
            utterances.append(
                Utterance(
                    id=f"{label.tag[:3]}-{session}{spk.lower()}-{i:04d}",
                    speaker_id=f"S{session}{spk}",
                    session=session,
                    label=label,
                    gold_transcript=" ".join(tokens),
                )
            )
    return Manifest(utterances)


def blob_features(
    manifest: Manifest,
    dim: int = 8,
    separation: float = 3.0,
    noise: float = 1.0,
    seed: int = 0,
    name: str = "blobs",
    modality: str = "audio",
) -> FeatureSet:
    """Class-mean Gaussian blobs; one draw per utterance."""
    rng = np.random.default_rng(seed)
    means = rng.normal(size=(len(LABELS), dim))
    means *= separation / np.linalg.norm(means, axis=1, keepdims=True)
    vectors = {}
    for utt in manifest:
        center = means[int(utt.label)]
        vectors[utt.id] = center + rng.normal(scale=noise, size=dim)
    return FeatureSet(name=name, modality=modality, dim=dim, vectors=vectors)


def tone_waveform(
    label: EmotionLabel,
    rng: np.random.Generator,
    duration_s: float = 0.5,
    sample_rate: int = 16000,
    noise: float = 0.02,
) -> Waveform:
    """Carrier plus second harmonic at the class frequency, lightly jittered."""
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    f = CLASS_TONES_HZ[label] * (1.0 + 0.02 * (rng.random() - 0.5))
    phase = 2.0 * np.pi * rng.random()
    x = 0.55 * np.sin(2.0 * np.pi * f * t + phase)
    x += 0.25 * np.sin(2.0 * np.pi * 2.0 * f * t + phase / 2.0)
    x += noise * rng.standard_normal(n)
    return Waveform(samples=np.clip(x, -1.0, 1.0), sample_rate=sample_rate)


def write_audio(
    manifest: Manifest,
    directory: Path,
    seed: int = 0,
    duration_s: float = 0.5,
    sample_rate: int = 16000,
) -> Manifest:
    """Write one text-PCM file per utterance; returns a manifest with paths.

    Per-utterance seeding keeps file contents independent of write order.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    updated = []
    for utt in manifest:
        rng = np.random.default_rng([seed, fnv1a_64(utt.id) & 0xFFFFFFFF])
        wave = tone_waveform(utt.label, rng, duration_s=duration_s, sample_rate=sample_rate)
        path = directory / f"{utt.id}.txt"
        write_waveform_text(path, wave)
        updated.append(
            Utterance(
                id=utt.id,
                speaker_id=utt.speaker_id,
                session=utt.session,
                label=utt.label,
                gold_transcript=utt.gold_transcript,
                asr_transcripts=dict(utt.asr_transcripts),
                audio_path=path,
            )
        )
    return Manifest(updated, split_rule=manifest.split_rule)


def add_asr_source(
    manifest: Manifest,
    system: str,
    rate: float,
    seed: int = 0,
    mix: tuple[float, float, float] = (0.6, 0.2, 0.2),
) -> Manifest:
    """Attach a corrupted copy of the gold transcripts as asr:<system>."""
    plan = CorruptionPlan(target_rate=rate, mix=mix, seed=seed, vocabulary=full_vocabulary())
    hypotheses = corrupt_corpus(manifest, plan)
    updated = []
    for utt in manifest:
        asr = dict(utt.asr_transcripts)
        asr[system] = hypotheses[utt.id]
        updated.append(
            Utterance(
                id=utt.id,
                speaker_id=utt.speaker_id,
                session=utt.session,
                label=utt.label,
                gold_transcript=utt.gold_transcript,
                asr_transcripts=asr,
                audio_path=utt.audio_path,
            )
        )
    return Manifest(updated, split_rule=manifest.split_rule)
