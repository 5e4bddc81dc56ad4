"""Audio front end: WAV I/O, band-limited resampling, 30 s segmentation, log-mel features."""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special
from scipy.io import wavfile
from scipy.signal import get_window
from sklearn.base import BaseEstimator, TransformerMixin

from .._validation import check_positive, check_samples

TARGET_RATE = 16000
CLIP_SECONDS = 30.0

# 64-tap Kaiser-windowed sinc
RESAMPLE_TAPS = 64
KAISER_BETA = 8.0
ROLLOFF = 0.9
_BLOCK = 1 << 15
_MAX_PHASES = 4096


@dataclass(frozen=True)
class ClipOrigin:
    segment_id: str
    clip_index: int
    start_s: float


@dataclass
class AudioClip:
    """Mono samples with their rate.

    ``n_valid`` is the number of leading samples that carry signal; the rest is
    zero padding added by :func:`segment_audio`.
    """

    samples: np.ndarray
    sample_rate: int
    origin: ClipOrigin = field(default_factory=lambda: ClipOrigin("", 0, 0.0))
    n_valid: int | None = None

    def __post_init__(self):
        self.samples = check_samples(self.samples)
        check_positive(self.sample_rate, "sample_rate")
        if self.n_valid is None:
            self.n_valid = len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def valid_samples(self) -> np.ndarray:
        return self.samples[: self.n_valid]


def read_wav(path, segment_id: str = "") -> AudioClip:
    """Read a PCM WAV (8/16/32-bit integer or float) as mono float samples in [-1, 1]."""
    rate, data = wavfile.read(path)
    return AudioClip(_to_float(data), int(rate), ClipOrigin(segment_id, 0, 0.0))


def _to_float(data: np.ndarray) -> np.ndarray:
    if data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.integer):
        x = data.astype(np.float64) / float(-np.iinfo(data.dtype).min)
    else:
        x = data.astype(np.float64)
    if x.ndim == 2:
        x = x.mean(axis=1)
    return x


def wav_bytes(clip: AudioClip) -> bytes:
    """Encode a clip as 16-bit PCM WAV, the shape transcription servers accept."""
    pcm = np.clip(np.round(clip.samples * 32767.0), -32768, 32767).astype(np.int16)
    buf = io.BytesIO()
    wavfile.write(buf, clip.sample_rate, pcm)
    return buf.getvalue()


def write_wav(path, clip: AudioClip) -> None:
    with open(path, "wb") as f:
        f.write(wav_bytes(clip))


# --------------------------------------------------------------------------- resampling


def _kaiser(x: np.ndarray, beta: float) -> np.ndarray:
    inside = np.abs(x) <= 1.0
    arg = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    return np.where(inside, special.i0(beta * arg) / special.i0(beta), 0.0)


def resample_audio(clip: AudioClip, target_rate: int = TARGET_RATE) -> AudioClip:
    """Resample with a 64-tap Kaiser-windowed sinc interpolator.

    The cutoff sits at ``ROLLOFF`` times the lower of the two Nyquist
    frequencies, which anti-aliases on downsampling. Samples beyond the ends
    of the signal are treated as zero. Output length is
    ``round(n * target_rate / sample_rate)``.
    """
    check_positive(target_rate, "target_rate")
    x = clip.samples
    if len(x) == 0:
        raise ValueError("cannot resample an empty clip")
    src = clip.sample_rate
    if src == target_rate:
        return AudioClip(x.copy(), src, clip.origin)

    n_out = int(round(len(x) * target_rate / src))
    step = src / target_rate  # input samples per output sample
    cutoff = ROLLOFF * min(1.0, target_rate / src)  # fraction of input Nyquist
    half = RESAMPLE_TAPS // 2
    offsets = np.arange(-half + 1, half + 1)
    padded = np.concatenate([np.zeros(half), x, np.zeros(half + 1)])

    def weights_at(pos):
        base = np.floor(pos).astype(np.int64)
        dist = pos[:, None] - (base[:, None] + offsets[None, :])
        w = cutoff * np.sinc(cutoff * dist) * _kaiser(dist / half, KAISER_BETA)
        return base, w / w.sum(axis=1, keepdims=True)

    # With rates up/down in lowest terms the filter phase repeats every `up`
    # output samples, so one table of weights serves the whole signal.
    g = math.gcd(int(src), int(target_rate))
    up, down = int(target_rate) // g, int(src) // g
    table = weights_at(np.arange(up) * down / up)[1] if up <= _MAX_PHASES else None

    out = np.empty(n_out)
    for start in range(0, n_out, _BLOCK):
        k = np.arange(start, min(start + _BLOCK, n_out))
        if table is not None:
            base = (k // up) * down + (k % up) * down // up
            weights = table[k % up]
        else:
            base, weights = weights_at(k * step)
        taps = base[:, None] + offsets[None, :]
        out[start : start + len(k)] = np.einsum("ij,ij->i", weights, padded[taps + half])
    return AudioClip(out, target_rate, clip.origin)


# --------------------------------------------------------------------------- segmentation


def segment_audio(clip: AudioClip, clip_seconds: float = CLIP_SECONDS) -> list[AudioClip]:
    """Cut into consecutive non-overlapping windows, zero-padding the last one."""
    if clip.sample_rate != TARGET_RATE:
        raise ValueError(f"segment_audio expects {TARGET_RATE} Hz input, got {clip.sample_rate}")
    width = int(round(clip_seconds * clip.sample_rate))
    x = clip.valid_samples
    clips = []
    for idx, start in enumerate(range(0, len(x), width)):
        chunk = x[start : start + width]
        n_valid = len(chunk)
        if n_valid < width:
            chunk = np.concatenate([chunk, np.zeros(width - n_valid)])
        origin = ClipOrigin(clip.origin.segment_id, idx, start / clip.sample_rate)
        clips.append(AudioClip(chunk, clip.sample_rate, origin, n_valid))
    return clips


# --------------------------------------------------------------------------- log-mel


@dataclass(frozen=True)
class MelConfig:
    window_samples: int = 400
    hop_samples: int = 160
    mel_bins: int = 80
    sample_rate: int = TARGET_RATE
    dynamic_range_db: float = 80.0
    power_floor: float = 1e-10

    def __post_init__(self):
        for name in ("window_samples", "hop_samples", "mel_bins", "sample_rate"):
            check_positive(getattr(self, name), name, integer=True)
        check_positive(self.dynamic_range_db, "dynamic_range_db")
        if self.hop_samples > self.window_samples:
            raise ValueError(
                f"hop_samples ({self.hop_samples}) must not exceed window_samples ({self.window_samples})"
            )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MelSpectrogram:
    """``data`` is frames x mel_bins of log10 power.

    The clamp keeps every value within ``dynamic_range_db / 10`` of the
    maximum, i.e. ``dynamic_range_db`` decibels.
    """

    data: np.ndarray
    config: MelConfig

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


def hz_to_mel(f):
    """Slaney mel scale: linear below 1 kHz, logarithmic above."""
    f = np.asarray(f, dtype=np.float64)
    f_sp = 200.0 / 3
    min_log_hz = 1000.0
    min_log_mel = min_log_hz / f_sp
    logstep = math.log(6.4) / 27.0
    return np.where(f >= min_log_hz, min_log_mel + np.log(np.maximum(f, 1e-12) / min_log_hz) / logstep, f / f_sp)


def mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    f_sp = 200.0 / 3
    min_log_hz = 1000.0
    min_log_mel = min_log_hz / f_sp
    logstep = math.log(6.4) / 27.0
    return np.where(m >= min_log_mel, min_log_hz * np.exp(logstep * (m - min_log_mel)), f_sp * m)


def mel_filterbank(config: MelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Triangular filters with unit peak. Returns ``(weights, center_hz)``.

    ``weights`` has shape ``(mel_bins, n_fft // 2 + 1)``.
    """
    n_fft = config.window_samples
    fft_hz = np.linspace(0.0, config.sample_rate / 2, n_fft // 2 + 1)
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(config.sample_rate / 2), config.mel_bins + 2))
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (fft_hz[None, :] - lo) / (mid - lo)
    falling = (hi - fft_hz[None, :]) / (hi - mid)
    return np.maximum(0.0, np.minimum(rising, falling)), edges[1:-1]


def mel_spectrogram(clip: AudioClip, config: MelConfig | None = None) -> MelSpectrogram:
    """Log-mel features of a clip: Hann-windowed STFT power, mel filterbank, log10, clamp.

    Frames are centred (reflect padding), giving ``len(samples) // hop`` frames.
    """
    config = config or MelConfig()
    if clip.sample_rate != config.sample_rate:
        raise ValueError(f"clip rate {clip.sample_rate} != config rate {config.sample_rate}")
    n_fft, hop = config.window_samples, config.hop_samples
    x = clip.samples
    n_frames = len(x) // hop
    if n_frames == 0:
        return MelSpectrogram(np.empty((0, config.mel_bins)), config)

    pad = n_fft // 2
    mode = "reflect" if len(x) > pad else "constant"
    padded = np.pad(x, pad, mode=mode)
    frames = np.lib.stride_tricks.sliding_window_view(padded, n_fft)[::hop][:n_frames]
    window = get_window("hann", n_fft, fftbins=True)
    power = np.abs(np.fft.rfft(frames * window, axis=1)) ** 2

    weights, _ = mel_filterbank(config)
    mel = power @ weights.T
    logmel = np.log10(np.maximum(mel, config.power_floor))
    logmel = np.maximum(logmel, logmel.max() - config.dynamic_range_db / 10.0)
    return MelSpectrogram(logmel, config)


# --------------------------------------------------------------------------- estimators


class Resampler(TransformerMixin, BaseEstimator):
    """Resample a list of :class:`AudioClip` to ``target_rate``."""

    def __init__(self, target_rate=TARGET_RATE):
        self.target_rate = target_rate

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [resample_audio(c, self.target_rate) for c in X]

    def __sklearn_is_fitted__(self):
        return True


class LogMelSpectrogram(TransformerMixin, BaseEstimator):
    """Map a list of equal-length clips to an array ``(n_clips, frames, mel_bins)``."""

    def __init__(self, window_samples=400, hop_samples=160, mel_bins=80, sample_rate=TARGET_RATE,
                 dynamic_range_db=80.0):
        self.window_samples = window_samples
        self.hop_samples = hop_samples
        self.mel_bins = mel_bins
        self.sample_rate = sample_rate
        self.dynamic_range_db = dynamic_range_db

    def fit(self, X, y=None):
        self.config_ = MelConfig(self.window_samples, self.hop_samples, self.mel_bins,
                                 self.sample_rate, self.dynamic_range_db)
        return self

    def transform(self, X):
        config = getattr(self, "config_", None) or self.fit(X).config_
        mats = [mel_spectrogram(c, config).data for c in X]
        if mats and len({m.shape for m in mats}) > 1:
            raise ValueError("clips differ in length; segment them first")
        return np.stack(mats) if mats else np.empty((0, 0, self.mel_bins))
