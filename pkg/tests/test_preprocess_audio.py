import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from codeswitch_eval.preprocess.audio import (
    RESAMPLE_TAPS,
    AudioClip,
    ClipOrigin,
    LogMelSpectrogram,
    MelConfig,
    Resampler,
    mel_filterbank,
    mel_spectrogram,
    read_wav,
    resample_audio,
    segment_audio,
    wav_bytes,
    write_wav,
)


def clip(samples, rate, sid="seg"):
    return AudioClip(np.asarray(samples, dtype=np.float64), rate, ClipOrigin(sid, 0, 0.0))


def sine(hz, rate, seconds, amp=0.5):
    t = np.arange(int(round(rate * seconds))) / rate
    return amp * np.sin(2 * np.pi * hz * t)


# Zero padding outside the clip makes the first and last half filter length
# of output undefined relative to an infinite sine; compare away from edges.
def interior(n_out, src, dst):
    margin = int(math.ceil(RESAMPLE_TAPS / 2 * dst / src)) + 1
    return slice(margin, n_out - margin)


class TestResample:
    def test_length_48k_to_16k(self):
        out = resample_audio(clip(np.zeros(48000 * 3), 48000))
        assert out.sample_rate == 16000
        assert len(out.samples) == 48000

    def test_identity(self):
        x = np.random.default_rng(0).uniform(-1, 1, 1000)
        out = resample_audio(clip(x, 16000), 16000)
        np.testing.assert_array_equal(out.samples, x)
        assert out.samples is not x

    def test_sine_44k1_against_analytic(self):
        out = resample_audio(clip(sine(440, 44100, 1.0), 44100), 16000)
        t = np.arange(len(out.samples)) / 16000
        err = np.abs(out.samples - 0.5 * np.sin(2 * np.pi * 440 * t))
        assert err[interior(len(err), 44100, 16000)].max() < 1e-3

    def test_upsample_8k(self):
        out = resample_audio(clip(sine(300, 8000, 1.0), 8000), 16000)
        t = np.arange(len(out.samples)) / 16000
        err = np.abs(out.samples - 0.5 * np.sin(2 * np.pi * 300 * t))
        assert err[interior(len(err), 8000, 16000)].max() < 1e-3

    def test_anti_alias_on_downsample(self):
        # 7.9 kHz aliases badly without filtering at 8 kHz target (Nyquist 4 kHz)
        out = resample_audio(clip(sine(7900, 48000, 1.0), 48000), 8000)
        assert np.abs(out.samples[interior(len(out.samples), 48000, 8000)]).max() < 0.01

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 5000), st.sampled_from([8000, 11025, 16000, 22050, 44100, 48000]),
           st.sampled_from([8000, 16000, 24000]))
    def test_duration_within_one_sample(self, n, src, dst):
        out = resample_audio(clip(np.zeros(n), src), dst)
        assert abs(len(out.samples) / dst - n / src) <= 1 / dst

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            resample_audio(clip([], 8000))

    def test_estimator(self):
        est = Resampler(target_rate=8000).fit(None)
        (out,) = est.transform([clip(np.zeros(16000), 16000)])
        assert out.sample_rate == 8000 and len(out.samples) == 8000


class TestSegment:
    def test_75s(self):
        clips = segment_audio(clip(np.ones(16000 * 75), 16000))
        assert len(clips) == 3
        assert all(len(c.samples) == 480000 and c.sample_rate == 16000 for c in clips)
        assert [c.n_valid for c in clips] == [480000, 480000, 240000]
        assert np.all(clips[2].samples[240000:] == 0) and np.all(clips[2].samples[:240000] == 1)
        assert [c.origin.clip_index for c in clips] == [0, 1, 2]
        assert [c.origin.start_s for c in clips] == [0.0, 30.0, 60.0]

    def test_30s_no_padding(self):
        (c,) = segment_audio(clip(np.ones(480000), 16000))
        assert c.n_valid == 480000

    def test_1s(self):
        (c,) = segment_audio(clip(np.ones(16000), 16000))
        assert c.duration_s == 30.0
        assert c.n_valid == 16000 and np.all(c.samples[16000:] == 0)

    def test_needs_16k(self):
        with pytest.raises(ValueError):
            segment_audio(clip(np.zeros(10), 8000))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 3 * 16000), st.floats(0.01, 1.0))
    def test_concatenation_reproduces_input(self, n, seconds):
        x = np.random.default_rng(n).uniform(-1, 1, n)
        clips = segment_audio(clip(x, 16000), clip_seconds=seconds)
        np.testing.assert_array_equal(np.concatenate([c.valid_samples for c in clips]), x)


class TestMel:
    def test_shape_30s(self):
        m = mel_spectrogram(clip(sine(440, 16000, 30.0), 16000))
        assert m.shape == (3000, 80)

    def test_silence_constant_at_floor(self):
        m = mel_spectrogram(clip(np.zeros(480000), 16000))
        assert np.all(m.data == m.data[0, 0])
        assert m.data[0, 0] == pytest.approx(math.log10(1e-10))

    def test_1khz_argmax_matches_analytic_filter(self):
        # Slaney mel: linear 200/3 Hz per mel below 1 kHz, log step ln(6.4)/27 above.
        mel_1k = 1000 / (200 / 3)
        mel_top = mel_1k + math.log(8000 / 1000) / (math.log(6.4) / 27)
        centers = [k * mel_top / 81 for k in range(1, 81)]
        expected = min(range(80), key=lambda i: abs(centers[i] - mel_1k))
        m = mel_spectrogram(clip(sine(1000, 16000, 30.0), 16000))
        bands = np.argmax(m.data[10:-10], axis=1)
        assert np.all(bands == expected)
        _, center_hz = mel_filterbank(MelConfig())
        assert abs(center_hz[expected] - 1000) == min(abs(center_hz - 1000))

    def test_dynamic_range(self):
        x = np.zeros(48000)
        x[:16000] = sine(440, 16000, 1.0)
        m = mel_spectrogram(clip(x, 16000))
        assert 10 * (m.data.max() - m.data.min()) <= 80.0 + 1e-9

    def test_hop_gt_window_errors(self):
        with pytest.raises(ValueError):
            MelConfig(window_samples=160, hop_samples=400)

    def test_filterbank_unit_peak(self):
        w, _ = mel_filterbank(MelConfig())
        assert w.shape == (80, 201)
        assert np.all(w >= 0) and np.all(w.max(axis=1) <= 1.0)

    @settings(max_examples=25, deadline=None)
    @given(hnp.arrays(np.float64, st.integers(400, 4000), elements=st.floats(-1, 1)))
    def test_always_finite(self, x):
        m = mel_spectrogram(clip(x, 16000))
        assert np.all(np.isfinite(m.data))
        assert 10 * (m.data.max() - m.data.min()) <= 80.0 + 1e-9

    def test_estimator_stacks(self):
        clips = segment_audio(clip(np.zeros(16000 * 35), 16000))
        out = LogMelSpectrogram().fit(clips).transform(clips)
        assert out.shape == (2, 3000, 80)


class TestWav:
    @pytest.mark.parametrize("dtype", [np.int16, np.int32, np.float32, np.uint8])
    def test_read_formats(self, tmp_path, dtype):
        from scipy.io import wavfile
        x = sine(200, 8000, 0.1)
        if dtype == np.uint8:
            data = np.round(x * 127 + 128).astype(np.uint8)
        elif np.issubdtype(dtype, np.integer):
            data = np.round(x * np.iinfo(dtype).max).astype(dtype)
        else:
            data = x.astype(dtype)
        wavfile.write(tmp_path / "a.wav", 8000, data)
        c = read_wav(tmp_path / "a.wav")
        assert c.sample_rate == 8000
        np.testing.assert_allclose(c.samples, x, atol=1e-2)

    def test_stereo_averaged(self, tmp_path):
        from scipy.io import wavfile
        data = np.stack([np.full(100, 0.5), np.full(100, -0.1)], axis=1).astype(np.float32)
        wavfile.write(tmp_path / "s.wav", 8000, data)
        np.testing.assert_allclose(read_wav(tmp_path / "s.wav").samples, 0.2, atol=1e-7)

    def test_write_read_round_trip(self, tmp_path):
        c = clip(sine(100, 16000, 0.2), 16000)
        write_wav(tmp_path / "x.wav", c)
        np.testing.assert_allclose(read_wav(tmp_path / "x.wav").samples, c.samples, atol=1 / 32767)
        assert wav_bytes(c)[:4] == b"RIFF"

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            clip([0.0, float("nan")], 16000)
