"""Text normalization for code-switched Egyptian Arabic-English.

The pipeline is: NFC, drop bracketed annotations, drop URLs, drop emoji and
ASCII emoticons, lowercase Latin letters, collapse whitespace. Removed spans
are replaced by a single space so that neighbouring words are not glued
together; whitespace collapsing then cleans up.
"""

from __future__ import annotations

import unicodedata
from dataclasses import asdict, dataclass
from functools import lru_cache

import regex
from sklearn.base import BaseEstimator, TransformerMixin

from .._validation import check_texts

DEFAULT_ANNOTATION_PATTERNS = (r"\[[^\[\]]*\]", r"<[^<>]*>")

# Bounded by whitespace or string edges so "d:D" inside a token survives.
ASCII_EMOTICONS = (
    ":)", ":-)", ":(", ":-(", ":D", ":-D", ";)", ";-)", ":P", ":-P", ":p", ":-p",
    ":'(", ":o", ":O", ":-o", ":-O", ":|", ":-|", ":*", ":-*", "xD", "XD", "<3", "^_^", "-_-",
)

_URL = regex.compile(r"(?:(?:https?|ftp)://|www\.)\S+", regex.IGNORECASE)
_EMOJI = regex.compile(
    r"[\u200d\ufe0e\ufe0f\u20e3]*"
    r"(?:\p{Extended_Pictographic}|\p{Emoji_Modifier}|\p{Regional_Indicator})"
    r"(?:\p{Extended_Pictographic}|\p{Emoji_Modifier}|\p{Regional_Indicator}|[\u200d\ufe0e\ufe0f\u20e3])*"
)
_EMOTICON = regex.compile(
    r"(?<!\S)(?:" + "|".join(regex.escape(e) for e in sorted(ASCII_EMOTICONS, key=len, reverse=True)) + r")(?!\S)"
)
_WS = regex.compile(r"\s+")

_MAX_PASSES = 16


@dataclass(frozen=True)
class NormalizationConfig:
    annotation_patterns: tuple[str, ...] = DEFAULT_ANNOTATION_PATTERNS
    strip_urls: bool = True
    strip_emoticons: bool = True
    lowercase_latin: bool = True
    collapse_whitespace: bool = True
    unicode_form: str = "NFC"

    def __post_init__(self):
        object.__setattr__(self, "annotation_patterns", tuple(self.annotation_patterns))
        if self.unicode_form != "NFC":
            raise ValueError(f"only NFC is supported, got {self.unicode_form!r}")
        for pat in self.annotation_patterns:
            _compile(pat)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["annotation_patterns"] = list(self.annotation_patterns)
        return d


@lru_cache(maxsize=64)
def _compile(pattern: str):
    try:
        return regex.compile(pattern)
    except regex.error as exc:
        raise ValueError(f"invalid annotation pattern {pattern!r}: {exc}") from None


def _remove_until_stable(text: str, pattern) -> str:
    # Removing "[b]" from "[a[b]c]" exposes a new span; loop until none remain.
    while True:
        new = pattern.sub(" ", text)
        if new == text:
            return text
        text = new


def _lower_latin(text: str) -> str:
    out = []
    for ch in text:
        if ch.isupper():
            low = ch.lower()
            if len(low) == 1 and unicodedata.name(ch, "").startswith(("LATIN", "FULLWIDTH LATIN")):
                ch = low
        out.append(ch)
    return "".join(out)


def _normalize_once(text: str, config: NormalizationConfig) -> str:
    text = unicodedata.normalize("NFC", text)
    for pat in config.annotation_patterns:
        text = _remove_until_stable(text, _compile(pat))
    if config.strip_urls:
        text = _remove_until_stable(text, _URL)
    if config.strip_emoticons:
        text = _remove_until_stable(text, _EMOJI)
        text = _remove_until_stable(text, _EMOTICON)
    if config.lowercase_latin:
        text = unicodedata.normalize("NFC", _lower_latin(text))
    if config.collapse_whitespace:
        text = _WS.sub(" ", text).strip()
    return text


def normalize_text(text: str, config: NormalizationConfig | None = None) -> str:
    """Normalize one string. Idempotent: ``normalize_text(normalize_text(x)) == normalize_text(x)``.

    >>> normalize_text("Check THIS http://x.co \N{GRINNING FACE}  now")
    'check this now'
    """
    if not isinstance(text, str):
        raise TypeError(f"expected str, got {type(text).__name__}")
    config = config or NormalizationConfig()
    # A single pass is almost always a fixed point; lowercasing can expose a
    # new emoticon match, so iterate to stability.
    for _ in range(_MAX_PASSES):
        new = _normalize_once(text, config)
        if new == text:
            break
        text = new
    return text


class TextNormalizer(TransformerMixin, BaseEstimator):
    """Stateless transformer wrapping :func:`normalize_text` for use in pipelines."""

    def __init__(
        self,
        annotation_patterns=DEFAULT_ANNOTATION_PATTERNS,
        strip_urls=True,
        strip_emoticons=True,
        lowercase_latin=True,
        collapse_whitespace=True,
    ):
        self.annotation_patterns = annotation_patterns
        self.strip_urls = strip_urls
        self.strip_emoticons = strip_emoticons
        self.lowercase_latin = lowercase_latin
        self.collapse_whitespace = collapse_whitespace

    @property
    def config_(self) -> NormalizationConfig:
        return NormalizationConfig(
            annotation_patterns=tuple(self.annotation_patterns),
            strip_urls=self.strip_urls,
            strip_emoticons=self.strip_emoticons,
            lowercase_latin=self.lowercase_latin,
            collapse_whitespace=self.collapse_whitespace,
        )

    def fit(self, X, y=None):
        check_texts(X)
        return self

    def transform(self, X):
        config = self.config_
        return [normalize_text(t, config) for t in check_texts(X)]

    def __sklearn_is_fitted__(self):
        return True
