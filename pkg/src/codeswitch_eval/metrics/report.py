"""Score containers, JSON round-trip and Markdown rendering in the results-table layout."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

HIGHER, LOWER = "higher_better", "lower_better"

DIRECTIONS = {
    "bleu": HIGHER,
    "meteor": HIGHER,
    "wer": LOWER,
    "cer": LOWER,
    "eed": LOWER,
    "bert_f1": HIGHER,
    "llm_grade": HIGHER,
}
RANGES = {
    "bleu": (0.0, 100.0),
    "meteor": (0.0, 1.0),
    "eed": (0.0, 1.0),
    "bert_f1": (0.0, 1.0),
    "llm_grade": (0.0, 1.0),
    "wer": (0.0, math.inf),
    "cer": (0.0, math.inf),
}

# (metric, header) in results-table order
MT_COLUMNS = [("bleu", "BLEU ↑"), ("bert_f1", "BERT-F1 ↑"), ("eed", "EED ↓"), ("meteor", "METEOR ↑"),
              ("llm_grade", "LLMG ↑")]
ASR_COLUMNS = [("wer", "WER ↓"), ("cer", "CER ↓"), ("bleu", "BLEU ↑"), ("llm_grade", "LLMG ↑"), ("eed", "EED ↓")]

UNAVAILABLE = "—"


@dataclass
class MetricScore:
    metric: str
    corpus_value: float | None
    segment_values: dict[str, float] = field(default_factory=dict)
    notes: dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.metric not in DIRECTIONS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.corpus_value is not None:
            lo, hi = RANGES[self.metric]
            if not lo - 1e-9 <= self.corpus_value <= hi + 1e-9:
                raise ValueError(f"{self.metric} value {self.corpus_value} outside [{lo}, {hi}]")

    @property
    def direction(self) -> str:
        return DIRECTIONS[self.metric]

    @property
    def available(self) -> bool:
        return self.corpus_value is not None

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "direction": self.direction,
            "corpus_value": self.corpus_value,
            "segment_values": self.segment_values,
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> MetricScore:
        return cls(d["metric"], d["corpus_value"], dict(d.get("segment_values", {})), dict(d.get("notes", {})))


@dataclass
class MetricReport:
    system_id: str
    target_lang: str
    scores: list[MetricScore]
    config_fingerprint: str
    coverage: float = 1.0
    n_segments: int = 0
    config: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def score(self, metric: str) -> MetricScore | None:
        for s in self.scores:
            if s.metric == metric:
                return s
        return None

    def value(self, metric: str) -> float | None:
        s = self.score(metric)
        return s.corpus_value if s else None

    def to_dict(self) -> dict:
        return {
            "system_id": self.system_id,
            "target_lang": self.target_lang,
            "config_fingerprint": self.config_fingerprint,
            "coverage": self.coverage,
            "n_segments": self.n_segments,
            "config": self.config,
            "scores": [s.to_dict() for s in self.scores],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> MetricReport:
        return cls(
            system_id=d["system_id"],
            target_lang=d["target_lang"],
            scores=[MetricScore.from_dict(s) for s in d["scores"]],
            config_fingerprint=d["config_fingerprint"],
            coverage=d.get("coverage", 1.0),
            n_segments=d.get("n_segments", 0),
            config=d.get("config", {}),
            metadata=d.get("metadata", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> MetricReport:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def timestamp_metadata() -> dict:
    """The only non-deterministic part of an artifact lives under this key."""
    return {"generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds")}


def strip_metadata(doc: dict) -> dict:
    return {k: v for k, v in doc.items() if k != "metadata"}


def format_value(metric: str, value: float | None) -> str:
    if value is None:
        return UNAVAILABLE
    if metric == "bleu":
        return f"{value:.2f}"
    if metric in ("bert_f1", "llm_grade"):
        return f"{100 * value:.1f}%"
    if metric in ("wer", "cer"):
        return f"{100 * value:.1f}"
    return f"{value:.2f}"


def render_markdown(reports: list[MetricReport]) -> str:
    """Results table; ASR layout for transcript (``cs``) reports, MT layout otherwise."""
    if not reports:
        return ""
    blocks = []
    for asr in (False, True):
        group = [r for r in reports if (r.target_lang == "cs") == asr]
        if not group:
            continue
        cols = ASR_COLUMNS if asr else MT_COLUMNS
        lines = ["| Model | " + " | ".join(h for _, h in cols) + " |",
                 "|---|" + "---:|" * len(cols)]
        for r in group:
            cells = [format_value(m, r.value(m)) for m, _ in cols]
            lines.append(f"| {r.system_id} | " + " | ".join(cells) + " |")
        fps = sorted({r.config_fingerprint for r in group})
        lines.append("")
        lines.append(f"target: {group[0].target_lang if len({r.target_lang for r in group}) == 1 else 'mixed'}; "
                     f"config fingerprint: {', '.join(fps)}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
