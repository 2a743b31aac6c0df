import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from serfuse.dsp import (
    DEFAULT_CLIP_THRESHOLDS_DB,
    LLDFrameSequence,
    SpectrogramConfig,
    Waveform,
    delta,
    extract_llds,
    frame_count,
    hz_to_mel,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    read_waveform,
    write_waveform_text,
)


def _tone(freq=440.0, seconds=1.0, rate=16000, amp=0.5):
    t = np.arange(int(seconds * rate)) / rate
    return Waveform(samples=amp * np.sin(2 * np.pi * freq * t), sample_rate=rate)


def test_waveform_validation():
    with pytest.raises(ValueError):
        Waveform(samples=np.array([[0.0, 0.1]]), sample_rate=16000)
    with pytest.raises(ValueError):
        Waveform(samples=np.array([0.0, np.inf]), sample_rate=16000)
    with pytest.raises(ValueError):
        Waveform(samples=np.array([0.0]), sample_rate=0)


def test_config_defaults_and_validation():
    config = SpectrogramConfig()
    assert config.window_ms == 32.0 and config.hop_ms == 16.0
    assert config.mel_bands == 128
    assert config.clip_db_threshold == -60.0
    assert DEFAULT_CLIP_THRESHOLDS_DB == (-30.0, -45.0, -60.0, -75.0)
    with pytest.raises(ValueError):
        SpectrogramConfig(window_ms=16.0, hop_ms=16.0)
    with pytest.raises(ValueError):
        SpectrogramConfig(clip_db_threshold=0.0)


def test_one_second_at_16k_gives_61_frames():
    # floor((16000 - 512) / 256) + 1 with 32 ms / 16 ms windows at 16 kHz.
    wave = _tone(seconds=1.0, rate=16000)
    spec = mel_spectrogram(wave)
    assert spec.frames.shape == (61, 128)
    llds = extract_llds(wave)
    assert llds.frames.shape[0] == 61


def test_frame_count_formula_and_short_input():
    assert frame_count(512, 512, 256) == 1
    assert frame_count(513, 512, 256) == 1
    assert frame_count(768, 512, 256) == 2
    with pytest.raises(ValueError):
        frame_count(511, 512, 256)


@given(
    st.integers(min_value=2, max_value=400),
    st.integers(min_value=1, max_value=399),
    st.integers(min_value=0, max_value=4000),
)
def test_frame_count_matches_naive_loop(win, hop, extra):
    hop = min(hop, win)
    n = win + extra
    count = 0
    start = 0
    while start + win <= n:
        count += 1
        start += hop
    assert frame_count(n, win, hop) == count


def test_mel_scale_roundtrip():
    freqs = np.array([0.0, 100.0, 700.0, 4000.0, 8000.0])
    assert np.allclose(mel_to_hz(hz_to_mel(freqs)), freqs)
    # Known anchor of this scale variant: 1000 Hz -> ~999.99 mel
    assert hz_to_mel(1000.0) == pytest.approx(2595.0 * np.log10(1 + 1000 / 700))


def test_filterbank_shape_and_coverage():
    bank = mel_filterbank(24, 512, 16000)
    assert bank.shape == (24, 257)
    assert np.all(bank >= 0)
    # Every filter has some mass; area-normalized peaks shrink with bandwidth.
    assert np.all(bank.sum(axis=1) > 0)
    peak_narrow = bank[0].max()
    peak_wide = bank[-1].max()
    assert peak_narrow > peak_wide


def test_spectrogram_range_and_tone_peak():
    wave = _tone(freq=1000.0)
    spec = mel_spectrogram(wave)
    assert np.all(spec.frames >= -1.0 - 1e-12)
    assert np.all(spec.frames <= 1.0 + 1e-12)
    assert spec.frames.max() == pytest.approx(1.0)  # dB reference is the global max
    # The band containing 1 kHz should dominate the band near 6 kHz.
    bank_freqs = mel_to_hz(np.linspace(0, hz_to_mel(8000.0), 130)[1:-1])
    band_1k = int(np.argmin(np.abs(bank_freqs - 1000.0)))
    band_6k = int(np.argmin(np.abs(bank_freqs - 6000.0)))
    assert spec.frames[:, band_1k].mean() > spec.frames[:, band_6k].mean()


def test_silence_yields_all_floor():
    wave = Waveform(samples=np.zeros(16000), sample_rate=16000)
    spec = mel_spectrogram(wave)
    assert np.all(spec.frames == -1.0)


def test_clipping_monotonicity_across_thresholds():
    """A lower threshold keeps more signal above its floor.

    In plain dB the floor max(db, t) trivially rises with t; the meaningful
    orderings are height above floor (db - t after clipping) and the
    normalized values at fixed dB.
    """
    wave = _tone(freq=700.0, amp=0.3)
    heights = []
    normalized = []
    for t in sorted(DEFAULT_CLIP_THRESHOLDS_DB):  # -75, -60, -45, -30
        spec = mel_spectrogram(wave, SpectrogramConfig(clip_db_threshold=t))
        db = (spec.frames + 1.0) / 2.0 * (0.0 - t) + t  # undo normalization
        heights.append(db - t)
        normalized.append(spec.frames)
    for lower, higher in zip(heights, heights[1:]):
        assert np.all(lower >= higher - 1e-9)
    # At any fixed true dB value d in [t, 0], f_t(d) = 1 - 2 d / t decreases
    # as the threshold rises, so the t1-normalized frames dominate too.
    for lower, higher in zip(normalized, normalized[1:]):
        assert np.all(lower >= higher - 1e-9)


def test_llds_shape_and_names():
    llds = extract_llds(_tone(seconds=0.2))
    assert llds.frames.shape[1] == 16
    assert llds.descriptor_names[:4] == (
        "log_energy",
        "zcr",
        "spectral_centroid",
        "spectral_flux",
    )
    assert len(llds.descriptor_names) == 16
    assert llds.deltas.shape == llds.frames.shape


def test_lld_values_on_known_signals():
    rate = 16000
    # Silence: zero crossings none (zeros count as positive), centroid 0.
    silent = Waveform(samples=np.zeros(rate // 2), sample_rate=rate)
    llds = extract_llds(silent)
    assert np.all(llds.frames[:, 1] == 0.0)  # zcr
    assert np.all(llds.frames[:, 2] == 0.0)  # centroid
    assert np.all(llds.frames[:, 0] == pytest.approx(np.log(1e-10)))  # log-energy floor
    assert np.all(llds.frames[:, 3] == 0.0)  # flux of constant silence

    # A full-scale square-ish alternation crosses at every sample.
    alt = Waveform(samples=0.9 * (-1.0) ** np.arange(rate // 2), sample_rate=rate)
    alt_llds = extract_llds(alt)
    assert np.all(alt_llds.frames[:, 1] == 1.0)

    # Higher-frequency tones move the centroid up.
    low = extract_llds(_tone(freq=300.0, seconds=0.2)).frames[:, 2].mean()
    high = extract_llds(_tone(freq=3000.0, seconds=0.2)).frames[:, 2].mean()
    assert high > low > 0


def test_flux_zero_first_frame_and_positive_on_change():
    rate = 16000
    half = np.concatenate([np.zeros(rate // 4), 0.5 * np.ones(rate // 4)])
    llds = extract_llds(Waveform(samples=half, sample_rate=rate))
    assert llds.frames[0, 3] == 0.0
    assert llds.frames[:, 3].max() > 0.0


def test_delta_zero_first_row_and_differences():
    frames = np.array([[1.0, 2.0], [4.0, 6.0], [5.0, 5.0]])
    d = delta(frames)
    assert np.array_equal(d[0], [0.0, 0.0])
    assert np.array_equal(d[1], [3.0, 4.0])
    assert np.array_equal(d[2], [1.0, -1.0])
    with pytest.raises(ValueError):
        delta(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        delta(np.zeros(5))


def test_tone_at_band_center_peaks_in_that_band():
    # A pure sine placed exactly on a filter center should win that band's
    # argmax in every frame.
    centers = mel_to_hz(np.linspace(0.0, hz_to_mel(8000.0), 130))[1:-1]
    band = 100
    spec = mel_spectrogram(_tone(freq=centers[band]))
    assert np.array_equal(
        spec.frames.argmax(axis=1), np.full(spec.frames.shape[0], band)
    )


def test_delta_cumsum_recovers_frames():
    rng = np.random.default_rng(3)
    frames = rng.normal(size=(50, 5))
    d = delta(frames)
    assert np.allclose(frames, frames[0] + np.cumsum(d, axis=0))


def test_delta_of_single_frame_is_zero():
    assert np.array_equal(delta(np.array([[2.0, -1.0, 0.5]])), np.zeros((1, 3)))


def test_llds_share_spectrogram_framing():
    wave = _tone(seconds=0.7)
    config = SpectrogramConfig(window_ms=20.0, hop_ms=10.0)
    n_spec = mel_spectrogram(wave, config).frames.shape[0]
    llds = extract_llds(wave, config)
    assert llds.frames.shape[0] == n_spec
    assert llds.deltas.shape == llds.frames.shape


def test_lld_sequence_validates_shapes():
    with pytest.raises(ValueError):
        LLDFrameSequence(frames=np.zeros((3, 2)), descriptor_names=("a",))
    with pytest.raises(ValueError):
        LLDFrameSequence(
            frames=np.zeros((3, 2)),
            descriptor_names=("a", "b"),
            deltas=np.zeros((2, 2)),
        )


def test_text_waveform_roundtrip(tmp_path):
    wave = _tone(seconds=0.05)
    path = tmp_path / "w.txt"
    write_waveform_text(path, wave)
    loaded = read_waveform(path, sample_rate=16000)
    assert loaded.sample_rate == 16000
    assert np.allclose(loaded.samples, wave.samples, atol=1e-8)
    with pytest.raises(ValueError):
        read_waveform(path)  # text files need an explicit rate


def test_wav_roundtrip(tmp_path):
    import wave as wave_module

    rate = 8000
    samples = (0.25 * np.sin(2 * np.pi * 440 * np.arange(800) / rate) * 32767).astype("<i2")
    path = tmp_path / "t.wav"
    with wave_module.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(rate)
        fh.writeframes(samples.tobytes())
    loaded = read_waveform(path)
    assert loaded.sample_rate == rate
    assert len(loaded.samples) == 800
    assert np.allclose(loaded.samples, samples / 32768.0)


def test_stereo_wav_downmixes(tmp_path):
    import wave as wave_module

    rate = 8000
    left = np.full(100, 8000, dtype="<i2")
    right = np.full(100, -8000, dtype="<i2")
    inter = np.empty(200, dtype="<i2")
    inter[0::2] = left
    inter[1::2] = right
    path = tmp_path / "s.wav"
    with wave_module.open(str(path), "wb") as fh:
        fh.setnchannels(2)
        fh.setsampwidth(2)
        fh.setframerate(rate)
        fh.writeframes(inter.tobytes())
    loaded = read_waveform(path)
    assert len(loaded.samples) == 100
    assert np.allclose(loaded.samples, 0.0)
