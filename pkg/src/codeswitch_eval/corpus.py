"""Three-way parallel corpora: loading, validation and code-switching statistics.

A corpus record carries the code-switched source sentence, its English and
Egyptian Arabic references and, optionally, a pointer to the source audio.
Two on-disk formats are understood, JSONL and TSV, both using the key order
in :data:`FIELDS`.
"""

from __future__ import annotations

import csv
import io
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .preprocess.text import NormalizationConfig, normalize_text

FIELDS = ("id", "split", "source_cs", "ref_en", "ref_ar", "audio_path", "duration_s")
SPLITS = ("train", "test", "other")
TARGET_LANGS = ("en", "ar", "cs")


class CorpusFormatError(ValueError):
    """A record could not be parsed. Carries the 1-based line number and field."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.field = field


class DuplicateSegmentError(ValueError):
    def __init__(self, segment_id: str, line: int | None = None):
        suffix = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate segment id {segment_id!r}{suffix}")
        self.segment_id = segment_id


@dataclass(frozen=True)
class AudioRef:
    path: str
    duration_s: float

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ValueError(f"audio duration must be > 0, got {self.duration_s!r}")


@dataclass(frozen=True)
class Segment:
    id: str
    split: str
    source_cs: str
    ref_en: str | None = None
    ref_ar: str | None = None
    audio: AudioRef | None = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        if not self.source_cs.strip():
            raise ValueError(f"segment {self.id!r}: source_cs is empty")

    def reference(self, target_lang: str) -> str | None:
        """Reference text for ``target_lang``; ``cs`` is the transcript itself."""
        if target_lang == "en":
            return self.ref_en
        if target_lang == "ar":
            return self.ref_ar
        if target_lang == "cs":
            return self.source_cs
        raise ValueError(f"unknown target language {target_lang!r}")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "split": self.split,
            "source_cs": self.source_cs,
            "ref_en": self.ref_en,
            "ref_ar": self.ref_ar,
            "audio_path": self.audio.path if self.audio else None,
            "duration_s": self.audio.duration_s if self.audio else None,
        }


@dataclass(frozen=True)
class Corpus:
    segments: tuple[Segment, ...]
    name: str = ""
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        seen = set()
        for seg in self.segments:
            if seg.id in seen:
                raise DuplicateSegmentError(seg.id)
            seen.add(seg.id)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __getitem__(self, segment_id: str) -> Segment:
        return self._index[segment_id]

    def __contains__(self, segment_id) -> bool:
        return segment_id in self._index

    @property
    def _index(self) -> dict[str, Segment]:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {s.id: s for s in self.segments}
            object.__setattr__(self, "_idx", idx)
        return idx

    @property
    def base_dir(self) -> Path:
        """Directory relative audio paths are resolved against."""
        src = self.provenance.rsplit(":", 1)[0] if self.provenance else ""
        return Path(src).parent if src else Path(".")

    def split_counts(self) -> dict[str, int]:
        counts = Counter(s.split for s in self.segments)
        return {split: counts.get(split, 0) for split in SPLITS}

    def audio_path(self, segment: Segment) -> Path:
        if segment.audio is None:
            raise ValueError(f"segment {segment.id!r} has no audio")
        p = Path(segment.audio.path)
        return p if p.is_absolute() else self.base_dir / p

    def filter(self, split: str) -> Corpus:
        return Corpus(tuple(s for s in self.segments if s.split == split), self.name, self.provenance)


@dataclass
class HypothesisSet:
    system_id: str
    target_lang: str
    entries: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.target_lang not in TARGET_LANGS:
            raise ValueError(f"target_lang must be one of {TARGET_LANGS}, got {self.target_lang!r}")

    def __len__(self):
        return len(self.entries)

    def check_against(self, corpus: Corpus) -> None:
        unknown = [sid for sid in self.entries if sid not in corpus]
        if unknown:
            raise KeyError(f"hypotheses reference {len(unknown)} unknown segment id(s), first: {unknown[0]!r}")


# --------------------------------------------------------------------------- loading


def _optional_str(value, line, name):
    if value is None or value == "":
        return None
    if not isinstance(value, str):
        raise CorpusFormatError(f"expected string, got {type(value).__name__}", line=line, field=name)
    return value


def _record_to_segment(rec: dict, line: int) -> Segment:
    unknown = set(rec) - set(FIELDS)
    if unknown:
        raise CorpusFormatError(f"unknown key(s) {sorted(unknown)}", line=line, field=sorted(unknown)[0])
    for name in ("id", "split", "source_cs"):
        value = rec.get(name)
        if not isinstance(value, str) or not value.strip():
            raise CorpusFormatError("missing or empty required value", line=line, field=name)
    if rec["split"] not in SPLITS:
        raise CorpusFormatError(f"split must be one of {SPLITS}, got {rec['split']!r}", line=line, field="split")

    audio = None
    audio_path = _optional_str(rec.get("audio_path"), line, "audio_path")
    duration = rec.get("duration_s")
    if duration == "":
        duration = None
    if audio_path is not None:
        if duration is None:
            raise CorpusFormatError("required when audio_path is set", line=line, field="duration_s")
        try:
            duration = float(duration)
        except (TypeError, ValueError):
            raise CorpusFormatError(f"not a number: {duration!r}", line=line, field="duration_s") from None
        if not duration > 0:
            raise CorpusFormatError(f"must be > 0, got {duration}", line=line, field="duration_s")
        audio = AudioRef(audio_path, duration)
    elif duration is not None:
        raise CorpusFormatError("set without audio_path", line=line, field="duration_s")

    return Segment(
        id=rec["id"],
        split=rec["split"],
        source_cs=rec["source_cs"],
        ref_en=_optional_str(rec.get("ref_en"), line, "ref_en"),
        ref_ar=_optional_str(rec.get("ref_ar"), line, "ref_ar"),
        audio=audio,
    )


def _iter_jsonl(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"invalid JSON ({exc.msg})", line=lineno) from None
        if not isinstance(rec, dict):
            raise CorpusFormatError("record is not a JSON object", line=lineno)
        yield lineno, rec


def _iter_tsv(text: str):
    lines = text.splitlines()
    if not lines:
        return
    header = lines[0].split("\t")
    if tuple(header) != FIELDS:
        raise CorpusFormatError(f"header must be {list(FIELDS)}, got {header}", line=1)
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cols = raw.split("\t")
        if len(cols) != len(FIELDS):
            raise CorpusFormatError(f"expected {len(FIELDS)} columns, got {len(cols)}", line=lineno)
        yield lineno, dict(zip(FIELDS, (c if c != "" else None for c in cols)))


def load_corpus(path, format: str | None = None, name: str | None = None) -> Corpus:
    """Load a corpus file, preserving record order.

    ``format`` is ``"jsonl"`` or ``"tsv"``; when omitted it is taken from the
    file extension.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in ("jsonl", "tsv"):
        raise ValueError(f"unsupported corpus format {fmt!r}")
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorpusFormatError(f"file is not valid UTF-8 (byte offset {exc.start})") from None
    if text.startswith("﻿"):
        text = text[1:]

    records = _iter_jsonl(text) if fmt == "jsonl" else _iter_tsv(text)
    segments = []
    first_line: dict[str, int] = {}
    for lineno, rec in records:
        seg = _record_to_segment(rec, lineno)
        if seg.id in first_line:
            raise DuplicateSegmentError(seg.id, lineno)
        first_line[seg.id] = lineno
        segments.append(seg)
    return Corpus(tuple(segments), name=name or path.stem, provenance=f"{path}:{fmt}")


def dump_corpus(corpus: Corpus, path, format: str = "jsonl") -> None:
    path = Path(path)
    if format == "jsonl":
        with path.open("w", encoding="utf-8") as f:
            for seg in corpus:
                f.write(json.dumps(seg.to_record(), ensure_ascii=False) + "\n")
    elif format == "tsv":
        buf = io.StringIO()
        buf.write("\t".join(FIELDS) + "\n")
        for seg in corpus:
            cols = []
            for key, value in seg.to_record().items():
                value = "" if value is None else (repr(value) if isinstance(value, float) else str(value))
                if "\t" in value or "\n" in value or "\r" in value:
                    raise ValueError(f"segment {seg.id!r}: field {key!r} contains a tab or newline")
                cols.append(value)
            buf.write("\t".join(cols) + "\n")
        path.write_text(buf.getvalue(), encoding="utf-8")
    else:
        raise ValueError(f"unsupported corpus format {format!r}")


def load_hypotheses(path, system_id: str | None = None, target_lang: str = "en") -> HypothesisSet:
    """Read a ``{id, text}`` JSONL hypothesis file."""
    path = Path(path)
    entries: dict[str, str] = {}
    for lineno, rec in _iter_jsonl(path.read_text(encoding="utf-8")):
        sid, text = rec.get("id"), rec.get("text")
        if not isinstance(sid, str) or not sid:
            raise CorpusFormatError("missing id", line=lineno, field="id")
        if not isinstance(text, str):
            raise CorpusFormatError("missing text", line=lineno, field="text")
        if sid in entries:
            raise DuplicateSegmentError(sid, lineno)
        entries[sid] = text
    return HypothesisSet(system_id or path.stem, target_lang, entries)


def dump_hypotheses(hyps: HypothesisSet, path) -> None:
    with Path(path).open("w", encoding="utf-8") as f:
        for sid, text in hyps.entries.items():
            f.write(json.dumps({"id": sid, "text": text}, ensure_ascii=False) + "\n")


# --------------------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    split_counts: dict[str, int]
    empty_ref_en: int
    empty_ref_ar: int
    missing_audio: int
    expectation: dict[str, int] | None = None
    deltas: dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(d == 0 for d in self.deltas.values())

    def to_dict(self) -> dict:
        return {
            "split_counts": self.split_counts,
            "empty_ref_en": self.empty_ref_en,
            "empty_ref_ar": self.empty_ref_ar,
            "missing_audio": self.missing_audio,
            "expectation": self.expectation,
            "deltas": self.deltas,
            "passed": self.passed,
        }


def validate_corpus(corpus: Corpus, expectation: dict[str, int] | None = None) -> ValidationReport:
    """Count splits, empty references and missing audio.

    ``deltas`` holds ``actual - expected`` for every split in ``expectation``;
    the report passes when all of them are zero.
    """
    counts = corpus.split_counts()
    report = ValidationReport(
        split_counts=counts,
        empty_ref_en=sum(1 for s in corpus if not (s.ref_en or "").strip()),
        empty_ref_ar=sum(1 for s in corpus if not (s.ref_ar or "").strip()),
        missing_audio=sum(1 for s in corpus if s.audio is None),
        expectation=dict(expectation) if expectation is not None else None,
    )
    for split, expected in (expectation or {}).items():
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r} in expectation")
        report.deltas[split] = counts[split] - expected
    return report


# --------------------------------------------------------------------------- code-switching statistics


_ARABIC_RANGES = (
    (0x0600, 0x06FF),
    (0x0750, 0x077F),
    (0x08A0, 0x08FF),
    (0xFB50, 0xFDFF),
    (0xFE70, 0xFEFF),
)


def _is_arabic(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _ARABIC_RANGES)


def _is_basic_latin_letter(ch: str) -> bool:
    return ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def token_script(token: str) -> str:
    """Classify a token as ``"arabic"``, ``"latin"`` or ``"other"`` by letter majority.

    Only letters (Unicode category L*) vote; a script needs strictly more than
    half of them. Tokens with no letters, and ties, are ``"other"``.
    """
    letters = [ch for ch in token if unicodedata.category(ch).startswith("L")]
    if not letters:
        return "other"
    arabic = sum(1 for ch in letters if _is_arabic(ch))
    latin = sum(1 for ch in letters if _is_basic_latin_letter(ch))
    if 2 * arabic > len(letters):
        return "arabic"
    if 2 * latin > len(letters):
        return "latin"
    return "other"


@dataclass(frozen=True)
class CodeSwitchStats:
    arabic_token_fraction: float
    latin_token_fraction: float
    other_fraction: float
    segments_with_switch: int
    word_overlap_src_to_ar: float | None
    token_count: int
    normalized: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def codeswitch_stats(
    corpus: Corpus,
    tokenizer_mode: str = "whitespace",
    *,
    normalize: bool = True,
    config: NormalizationConfig | None = None,
) -> CodeSwitchStats:
    """Script composition of the source side and its verbatim overlap with ``ref_ar``.

    The overlap is micro-averaged: the number of source tokens found in the
    segment's Arabic reference, summed over all segments that have one,
    divided by the total number of source tokens in those segments.
    """
    if tokenizer_mode != "whitespace":
        raise ValueError(f"unsupported tokenizer_mode {tokenizer_mode!r}")
    if len(corpus) == 0:
        raise ValueError("codeswitch_stats needs a non-empty corpus")
    config = config or NormalizationConfig()
    prep = (lambda t: normalize_text(t, config)) if normalize else (lambda t: t)

    scripts: Counter[str] = Counter()
    switched = 0
    hit = total = 0
    for seg in corpus:
        tokens = prep(seg.source_cs).split()
        kinds = [token_script(t) for t in tokens]
        scripts.update(kinds)
        if "arabic" in kinds and "latin" in kinds:
            switched += 1
        if seg.ref_ar:
            ref_tokens = set(prep(seg.ref_ar).split())
            hit += sum(1 for t in tokens if t in ref_tokens)
            total += len(tokens)

    n = sum(scripts.values())
    if n == 0:
        raise ValueError("corpus has no source tokens after preprocessing")
    arabic = scripts["arabic"] / n
    latin = scripts["latin"] / n
    return CodeSwitchStats(
        arabic_token_fraction=arabic,
        latin_token_fraction=latin,
        other_fraction=scripts["other"] / n,
        segments_with_switch=switched,
        word_overlap_src_to_ar=hit / total if total else None,
        token_count=n,
        normalized=normalize,
    )
