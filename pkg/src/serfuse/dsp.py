"""Mel-spectrogram front-end and frame-level low-level descriptors (LLDs).

Spectrograms use a Hann window (32 ms width, 16 ms hop by default), 128 Mel
bands, dB conversion relative to the spectrogram's own maximum, clipping at
a configurable negative threshold, and a linear map to [-1, 1]. The LLD
extractor shares the framing and produces a reduced 16-descriptor set
(log-energy, zero-crossing rate, spectral centroid, spectral flux, and the
first 12 Mel-band log powers) plus first-order deltas.
"""
from __future__ import annotations

import wave as wave_module
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_EPS = 1e-10

# Four clip thresholds configured by default; -60 dB is the selected one,
# the other three are defaults chosen here, not sourced values.
DEFAULT_CLIP_THRESHOLDS_DB = (-30.0, -45.0, -60.0, -75.0)


@dataclass(frozen=True)
class Waveform:
    """Single-channel audio in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or len(samples) == 0:
            raise ValueError("waveform must be a non-empty 1-D sample sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")


@dataclass(frozen=True)
class SpectrogramConfig:
    window_ms: float = 32.0
    hop_ms: float = 16.0
    mel_bands: int = 128
    clip_db_threshold: float = -60.0
    lld_mel_bands: int = 12

    def __post_init__(self):
        if not self.window_ms > self.hop_ms > 0:
            raise ValueError("window_ms must exceed hop_ms and both must be positive")
        if self.mel_bands < 1:
            raise ValueError("mel_bands must be at least 1")
        if self.clip_db_threshold >= 0:
            raise ValueError("clip_db_threshold must be negative")
        if not 0 <= self.lld_mel_bands <= self.mel_bands:
            raise ValueError("lld_mel_bands must be between 0 and mel_bands")

    def window_samples(self, sample_rate: int) -> int:
        return int(round(self.window_ms * sample_rate / 1000.0))

    def hop_samples(self, sample_rate: int) -> int:
        return int(round(self.hop_ms * sample_rate / 1000.0))


@dataclass(frozen=True)
class MelSpectrogram:
    """Clipped, [-1, 1]-normalized log-power frames, time x mel_bands."""

    frames: np.ndarray
    config: SpectrogramConfig


@dataclass(frozen=True)
class LLDFrameSequence:
    """Descriptor frames plus first-order deltas of identical shape."""

    frames: np.ndarray
    descriptor_names: tuple[str, ...]
    deltas: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.deltas is None:
            object.__setattr__(self, "deltas", delta(self.frames))
        if self.deltas.shape != self.frames.shape:
            raise ValueError("deltas must match the frame matrix shape")
        if len(self.descriptor_names) != self.frames.shape[1]:
            raise ValueError("descriptor name count must match frame width")


def frame_count(n_samples: int, win: int, hop: int) -> int:
    if n_samples < win:
        raise ValueError(f"input of {n_samples} samples is shorter than one {win}-sample window")
    return (n_samples - win) // hop + 1


def _frame_matrix(samples: np.ndarray, win: int, hop: int) -> np.ndarray:
    n = frame_count(len(samples), win, hop)
    idx = np.arange(win)[None, :] + hop * np.arange(n)[:, None]
    return samples[idx]


def _next_pow2(n: int) -> int:
    size = 1
    while size < n:
        size *= 2
    return size


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular filters equally spaced in Mel between 0 Hz and Nyquist.

    Slaney-style area normalization: each filter scaled by 2 / bandwidth.
    """
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2))
    bank = np.zeros((n_mels, len(freqs)))
    for b in range(n_mels):
        lo, mid, hi = edges[b], edges[b + 1], edges[b + 2]
        rising = (freqs - lo) / max(mid - lo, _EPS)
        falling = (hi - freqs) / max(hi - mid, _EPS)
        bank[b] = np.maximum(0.0, np.minimum(rising, falling)) * (2.0 / max(hi - lo, _EPS))
    return bank


def _power_frames(wave: Waveform, config: SpectrogramConfig) -> tuple[np.ndarray, int]:
    win = config.window_samples(wave.sample_rate)
    hop = config.hop_samples(wave.sample_rate)
    frames = _frame_matrix(wave.samples, win, hop)
    n_fft = _next_pow2(win)
    window = np.hanning(win)
    spectra = np.fft.rfft(frames * window, n=n_fft, axis=1)
    return np.abs(spectra) ** 2, n_fft


def mel_spectrogram(wave: Waveform, config: SpectrogramConfig | None = None) -> MelSpectrogram:
    """Hann-windowed Mel power spectrogram in clipped, normalized dB.

    dB values are relative to the global maximum (max = 0 dB), floored at
    ``clip_db_threshold``, then mapped linearly onto [-1, 1]. All-silent
    input yields an all-floor (all -1) spectrogram rather than an error.
    """
    config = config or SpectrogramConfig()
    power, n_fft = _power_frames(wave, config)
    bank = mel_filterbank(config.mel_bands, n_fft, wave.sample_rate)
    mel_power = power @ bank.T
    ref = mel_power.max()
    clip = config.clip_db_threshold
    if ref <= 0.0:
        db = np.full(mel_power.shape, clip)
    else:
        floor = ref * 10.0 ** (clip / 10.0)
        db = 10.0 * np.log10(np.maximum(mel_power, floor) / ref)
    frames = 2.0 * (db - clip) / (0.0 - clip) - 1.0
    return MelSpectrogram(frames=frames, config=config)


LLD_BASE_NAMES = ("log_energy", "zcr", "spectral_centroid", "spectral_flux")


def extract_llds(wave: Waveform, config: SpectrogramConfig | None = None) -> LLDFrameSequence:
    """Reduced per-frame descriptor set sharing the spectrogram framing."""
    config = config or SpectrogramConfig()
    win = config.window_samples(wave.sample_rate)
    hop = config.hop_samples(wave.sample_rate)
    raw = _frame_matrix(wave.samples, win, hop)
    power, n_fft = _power_frames(wave, config)

    log_energy = np.log((raw**2).sum(axis=1) + _EPS)

    # Zeros count as positive so silence produces no crossings.
    signs = np.where(raw >= 0, 1, -1)
    zcr = (signs[:, 1:] != signs[:, :-1]).sum(axis=1) / (win - 1)

    freqs = np.fft.rfftfreq(n_fft, d=1.0 / wave.sample_rate)
    total = power.sum(axis=1)
    centroid = np.where(total > 0, (power * freqs).sum(axis=1) / np.maximum(total, _EPS), 0.0)

    mag = np.sqrt(power)
    flux = np.zeros(len(raw))
    if len(raw) > 1:
        flux[1:] = np.sqrt(((mag[1:] - mag[:-1]) ** 2).sum(axis=1))

    columns = [log_energy, zcr, centroid, flux]
    names = list(LLD_BASE_NAMES)
    if config.lld_mel_bands:
        bank = mel_filterbank(config.mel_bands, n_fft, wave.sample_rate)
        mel_log = np.log(power @ bank.T + _EPS)
        columns.append(mel_log[:, : config.lld_mel_bands])
        names += [f"mel_log_{i}" for i in range(config.lld_mel_bands)]

    frames = np.column_stack(columns)
    return LLDFrameSequence(frames=frames, descriptor_names=tuple(names))


def delta(frames: np.ndarray) -> np.ndarray:
    """First-order difference with a zero first row; shape preserved."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise ValueError("delta requires a non-empty 2-D frame matrix")
    out = np.zeros_like(frames)
    out[1:] = frames[1:] - frames[:-1]
    return out


def read_waveform(path: Path | str, sample_rate: int | None = None) -> Waveform:
    """Load PCM WAV or the headerless one-sample-per-line text format.

    Text files carry no rate, so ``sample_rate`` is required for them.
    """
    path = Path(path)
    if path.suffix.lower() == ".wav":
        return _read_wav(path)
    if sample_rate is None:
        raise ValueError(f"{path}: text waveforms need an explicit sample rate")
    values = np.loadtxt(path, dtype=np.float64, ndmin=1)
    return Waveform(samples=values, sample_rate=sample_rate)


def _read_wav(path: Path) -> Waveform:
    with wave_module.open(str(path), "rb") as wav:
        n_channels = wav.getnchannels()
        width = wav.getsampwidth()
        rate = wav.getframerate()
        raw = wav.readframes(wav.getnframes())
    if width == 2:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif width == 4:
        data = np.frombuffer(raw, dtype="<i4").astype(np.float64) / 2147483648.0
    elif width == 1:
        data = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    else:
        raise ValueError(f"{path}: unsupported PCM sample width {width}")
    if n_channels > 1:
        data = data.reshape(-1, n_channels).mean(axis=1)
    return Waveform(samples=data, sample_rate=rate)


def write_waveform_text(path: Path | str, wave: Waveform) -> None:
    np.savetxt(path, wave.samples, fmt="%.8f")


def write_lld_frames(path: Path | str, sequences: dict[str, LLDFrameSequence]) -> None:
    """Serialize per-frame LLD rows keyed ``<utterance-id>#<frame-index>``."""
    first = next(iter(sequences.values()))
    dim = first.frames.shape[1]
    lines = [f"#featureset name=llds modality=audio dim={dim}"]
    for utt_id, seq in sequences.items():
        for t, row in enumerate(seq.frames):
            lines.append(f"{utt_id}#{t}\t" + "\t".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
