"""Transcript normalization, edit-distance scoring, and corruption simulation.

WER/CER are pooled over the corpus (total errors over total reference
length), not averaged per utterance. The corruption simulator manufactures
hypothesis transcripts at a target error rate so the error-rate/recognition
trade-off can be studied without running any recognizer.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .corpus import Manifest
from .errors import TranscriptError
from .util import fnv1a_64

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)*")


def normalize(text: str) -> list[str]:
    """Lowercase, strip punctuation (apostrophes survive inside tokens), split.

    The same tokenization feeds the hashed text features so that scoring and
    feature extraction see identical token streams.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class AlignmentResult:
    """Minimum-edit-distance alignment counts for one reference/hypothesis pair."""

    substitutions: int
    insertions: int
    deletions: int
    ref_len: int
    unit: str = "word"

    @property
    def distance(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def rate_defined(self) -> bool:
        return self.ref_len > 0

    @property
    def error_rate(self) -> float:
        # May exceed 1 when the hypothesis is much longer than the reference.
        if not self.rate_defined:
            raise ValueError("error rate undefined for empty reference")
        return self.distance / self.ref_len


def align(ref: list[str], hyp: list[str], unit: str = "word") -> AlignmentResult:
    """Levenshtein alignment with unit costs and a deterministic backtrace."""
    n, m = len(ref), len(hyp)
    if n == 0:
        return AlignmentResult(0, m, 0, 0, unit)
    if m == 0:
        return AlignmentResult(0, 0, n, n, unit)

    # dist[i][j]: distance between ref[:i] and hyp[:j].
    prev = list(range(m + 1))
    rows = [prev]
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        ref_tok = ref[i - 1]
        for j in range(1, m + 1):
            sub = prev[j - 1] + (ref_tok != hyp[j - 1])
            dele = prev[j] + 1
            ins = cur[j - 1] + 1
            d = sub
            if dele < d:
                d = dele
            if ins < d:
                d = ins
            cur[j] = d
        rows.append(cur)
        prev = cur

    subs = dels = inss = 0
    i, j = n, m
    while i > 0 or j > 0:
        here = rows[i][j]
        if i > 0 and j > 0 and rows[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]) == here:
            if ref[i - 1] != hyp[j - 1]:
                subs += 1
            i -= 1
            j -= 1
        elif i > 0 and rows[i - 1][j] + 1 == here:
            dels += 1
            i -= 1
        else:
            inss += 1
            j -= 1
    return AlignmentResult(subs, inss, dels, n, unit)


def _chars(tokens: list[str]) -> list[str]:
    # Inter-word spaces count as characters.
    return list(" ".join(tokens))


def corpus_error_rates(manifest: Manifest, source) -> tuple[float, float]:
    """Pooled (WER, CER) of a hypothesis source against the gold transcripts.

    ``source`` is either ``"gold"``, ``"asr:<system>"`` or a mapping from
    utterance id to hypothesis text. Both sides are normalized before
    alignment.
    """
    word_err = word_len = char_err = char_len = 0
    for utt in manifest:
        hyp_text = _hypothesis_text(utt, source)
        ref = normalize(utt.gold_transcript)
        hyp = normalize(hyp_text)
        w = align(ref, hyp, "word")
        c = align(_chars(ref), _chars(hyp), "character")
        word_err += w.distance
        word_len += w.ref_len if w.rate_defined else 0
        char_err += c.distance
        char_len += c.ref_len if c.rate_defined else 0
    if word_len == 0:
        raise TranscriptError("corpus has no non-empty gold transcripts to score against")
    return word_err / word_len, char_err / char_len


def _hypothesis_text(utt, source) -> str:
    if isinstance(source, str):
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
        raise TranscriptError(f"unknown hypothesis source {source!r}")
    try:
        return source[utt.id]
    except KeyError:
        raise TranscriptError(f"no hypothesis supplied for utterance {utt.id!r}") from None


@dataclass(frozen=True)
class CorruptionPlan:
    """Seeded recipe for manufacturing errors at a target rate.

    ``mix`` splits the rate into substitution/deletion/insertion shares;
    substitutions dominate by default because they dominate real recognizer
    output.
    """

    target_rate: float
    mix: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0
    vocabulary: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not 0.0 <= self.target_rate < 1.0:
            raise ValueError(f"target_rate must be in [0, 1), got {self.target_rate}")
        p_sub, p_del, p_ins = self.mix
        if min(self.mix) < 0 or max(self.mix) > 1:
            raise ValueError("mix probabilities must lie in [0, 1]")
        if abs(p_sub + p_del + p_ins - 1.0) > 1e-9:
            raise ValueError(f"mix must sum to 1, got {sum(self.mix)}")
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))
        if (p_sub > 0 or p_ins > 0) and not self.vocabulary:
            raise ValueError("vocabulary must be non-empty when p_sub or p_ins > 0")

    def utterance_seed(self, utt_id: str) -> int:
        return (self.seed ^ fnv1a_64(utt_id)) & ((1 << 64) - 1)


def corrupt(tokens: list[str], plan: CorruptionPlan, seed: int | None = None) -> list[str]:
    """Independently substitute/delete each token and inject insertions.

    Per token the expected number of introduced errors is ``target_rate``,
    so the measured corpus rate converges to the plan's rate.
    """
    rng = np.random.default_rng(plan.seed if seed is None else seed)
    rate = plan.target_rate
    p_sub, p_del, p_ins = plan.mix
    vocab = plan.vocabulary
    out: list[str] = []
    for token in tokens:
        u = rng.random()
        if u < rate * p_sub:
            out.append(_pick_other(rng, vocab, token))
        elif u < rate * (p_sub + p_del):
            pass
        else:
            out.append(token)
        if rng.random() < rate * p_ins:
            out.append(vocab[int(rng.integers(len(vocab)))])
    return out


def _pick_other(rng, vocab: tuple[str, ...], token: str) -> str:
    candidates = [v for v in vocab if v != token]
    if not candidates:
        return vocab[0]
    return candidates[int(rng.integers(len(candidates)))]


def corrupt_corpus(manifest: Manifest, plan: CorruptionPlan) -> dict[str, str]:
    """Corrupted hypothesis text per utterance, seeded per id.

    Seeding each utterance independently keeps the result stable under any
    processing order.
    """
    out = {}
    for utt in manifest:
        tokens = corrupt(normalize(utt.gold_transcript), plan, seed=plan.utterance_seed(utt.id))
        out[utt.id] = " ".join(tokens)
    return out


def corpus_vocabulary(manifest: Manifest) -> tuple[str, ...]:
    """Sorted unique normalized tokens over all gold transcripts."""
    words: set[str] = set()
    for utt in manifest:
        words.update(normalize(utt.gold_transcript))
    return tuple(sorted(words))
