from .audio import (
    AudioClip,
    ClipOrigin,
    LogMelSpectrogram,
    MelConfig,
    MelSpectrogram,
    Resampler,
    mel_filterbank,
    mel_spectrogram,
    read_wav,
    resample_audio,
    segment_audio,
    wav_bytes,
    write_wav,
)
from .text import NormalizationConfig, TextNormalizer, normalize_text

__all__ = [
    "AudioClip",
    "ClipOrigin",
    "LogMelSpectrogram",
    "MelConfig",
    "MelSpectrogram",
    "NormalizationConfig",
    "Resampler",
    "TextNormalizer",
    "mel_filterbank",
    "mel_spectrogram",
    "normalize_text",
    "read_wav",
    "resample_audio",
    "segment_audio",
    "wav_bytes",
    "write_wav",
]
