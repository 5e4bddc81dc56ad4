"""Cascaded speech translation: audio -> ASR endpoint -> normalize -> MT endpoint.

:class:`Cascade` owns the endpoint clients and a global in-flight limiter
shared by all of them. :func:`batch_run` drives a whole corpus with a
resumable JSONL checkpoint.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .clients import ChatClient, EndpointConfig, EndpointError, InFlightLimiter, Transcription, TranscriptionClient
from .corpus import Corpus, HypothesisSet, Segment
from .preprocess.audio import TARGET_RATE, AudioClip, read_wav, resample_audio, segment_audio
from .preprocess.text import NormalizationConfig, normalize_text
from .prompts import PromptTemplate, translation_template

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A cascade stage failed for one segment."""

    def __init__(self, stage: str, segment_id: str, message: str):
        super().__init__(f"[{stage}] segment {segment_id!r}: {message}")
        self.stage = stage
        self.segment_id = segment_id


class CheckpointError(RuntimeError):
    pass


@dataclass
class PipelineResult:
    segment_id: str
    transcript: str
    translation: str
    target_lang: str
    per_clip_transcripts: list[str]
    asr_retries: int = 0
    mt_retries: int = 0
    timing: dict[str, float] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        joined = " ".join(self.per_clip_transcripts)
        if self.transcript != joined:
            raise ValueError("transcript must equal the per-clip transcripts joined by single spaces")

    def to_record(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "transcript": self.transcript,
            "translation": self.translation,
            "target_lang": self.target_lang,
            "per_clip_transcripts": self.per_clip_transcripts,
            "asr_retries": self.asr_retries,
            "mt_retries": self.mt_retries,
            "timing": self.timing,
        }

    @classmethod
    def from_record(cls, rec: dict) -> PipelineResult:
        return cls(**rec)


def _join(parts: list[str]) -> str:
    return " ".join(parts)


def strip_echo(reply: str, prompt_text: str) -> str:
    """Drop a leading echo of the prompt and surrounding whitespace."""
    text = reply.strip()
    echo = prompt_text.strip()
    if echo and text.startswith(echo):
        text = text[len(echo):].strip()
    return text


class Cascade:
    """ASR and MT clients plus the shared request bound.

    ``max_in_flight`` is the global bound over every request this cascade
    sends; it defaults to the smaller of the two endpoint bounds.
    """

    def __init__(self, asr: EndpointConfig, mt: EndpointConfig, *, max_in_flight: int | None = None,
                 normalization: NormalizationConfig | None = None, templates: dict | None = None,
                 asr_transport=None, mt_transport=None, sleep=time.sleep, clock=time.perf_counter):
        self.limiter = InFlightLimiter(max_in_flight or min(asr.max_in_flight, mt.max_in_flight))
        self.asr = TranscriptionClient(asr, limiter=self.limiter, transport=asr_transport, sleep=sleep)
        self.mt = ChatClient(mt, limiter=self.limiter, transport=mt_transport, sleep=sleep)
        self.normalization = normalization or NormalizationConfig()
        self.templates = dict(templates or {})
        self._clock = clock

    def close(self):
        self.asr.close()
        self.mt.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def template(self, target: str) -> PromptTemplate:
        if target not in self.templates:
            self.templates[target] = translation_template(target)
        return self.templates[target]

    def transcribe(self, clips: list[AudioClip], segment_id: str = "") -> list[Transcription]:
        return _transcribe_with(self.asr, clips, min(self.asr.config.max_in_flight, self.limiter.limit), segment_id)

    def translate(self, text: str, target: str, segment_id: str = "") -> tuple[str, int]:
        return _translate_with(self.mt, self.template(target), text, segment_id)

    def run(self, segment: Segment, audio_path, target: str) -> PipelineResult:
        if segment.audio is None:
            raise StageError("input", segment.id, "no audio")
        clock = self._clock
        t0 = clock()
        try:
            clip = read_wav(audio_path, segment.id)
        except (OSError, ValueError) as exc:
            raise StageError("audio", segment.id, f"cannot read {audio_path}: {exc}") from exc
        if clip.sample_rate != TARGET_RATE:
            clip = resample_audio(clip, TARGET_RATE)
        clips = segment_audio(clip)
        t1 = clock()
        results = self.transcribe(clips, segment.id)
        t2 = clock()
        parts = [r.text.strip() for r in results]
        transcript = _join(parts)
        source = normalize_text(transcript, self.normalization)
        if target == "cs":
            translation, mt_retries = source, 0
        else:
            if not source:
                raise StageError("mt", segment.id, "transcript is empty after normalization")
            translation, mt_retries = self.translate(source, target, segment.id)
        t3 = clock()
        return PipelineResult(
            segment_id=segment.id,
            transcript=transcript,
            translation=translation,
            target_lang=target,
            per_clip_transcripts=parts,
            asr_retries=sum(r.retries for r in results),
            mt_retries=mt_retries,
            timing={"preprocess_s": t1 - t0, "asr_s": t2 - t1, "mt_s": t3 - t2, "total_s": t3 - t0},
        )


def _transcribe_with(client: TranscriptionClient, clips, workers: int, segment_id: str = ""):
    if not clips:
        return []
    with ThreadPoolExecutor(max_workers=min(len(clips), workers)) as pool:
        futures = [pool.submit(client.transcribe, c) for c in clips]
        out = []
        for clip, fut in zip(clips, futures):
            try:
                out.append(fut.result())
            except EndpointError as exc:
                raise StageError("asr", segment_id or clip.origin.segment_id,
                                 f"clip {clip.origin.clip_index} failed: {exc}") from exc
    return out


def _translate_with(client: ChatClient, template: PromptTemplate, text: str, segment_id: str = ""):
    if not text.strip():
        raise ValueError("cannot translate empty text")
    messages = template.render(text)
    retries = 0
    for attempt in range(client.config.max_retries + 1):
        try:
            done = client.complete(messages, temperature=0.0)
        except EndpointError as exc:
            raise StageError("mt", segment_id, str(exc)) from exc
        retries += done.retries
        reply = strip_echo(done.text, messages[-1]["content"])
        if reply:
            return reply, retries + attempt
    raise StageError("mt", segment_id, "empty reply after retries")


def transcribe(clips: list[AudioClip], asr: EndpointConfig, *, transport=None, sleep=time.sleep) -> list[Transcription]:
    """Transcribe clips concurrently; results come back in clip order."""
    with TranscriptionClient(asr, transport=transport, sleep=sleep) as client:
        return _transcribe_with(client, clips, asr.max_in_flight)


def translate(text: str, mt: EndpointConfig, template: PromptTemplate, *, transport=None,
              sleep=time.sleep) -> str:
    """Translate one normalized source sentence with a temperature-0 chat completion."""
    if not text.strip():
        raise ValueError("cannot translate empty text")
    with ChatClient(mt, transport=transport, sleep=sleep) as client:
        return _translate_with(client, template, text)[0]


def cascade(segment: Segment, asr: EndpointConfig, mt: EndpointConfig, target: str, *, audio_path=None,
            corpus: Corpus | None = None, **kwargs) -> PipelineResult:
    """Run one segment through the cascade with freshly built clients."""
    if segment.audio is None:
        raise StageError("input", segment.id, "no audio")
    if audio_path is None:
        audio_path = corpus.audio_path(segment) if corpus is not None else Path(segment.audio.path)
    with Cascade(asr, mt, **kwargs) as runner:
        return runner.run(segment, audio_path, target)


# --------------------------------------------------------------------------- batch + checkpoint


@dataclass
class RunLog:
    completed: list[str] = field(default_factory=list)
    resumed: list[str] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    no_audio: list[str] = field(default_factory=list)
    wall_s: float = 0.0

    @property
    def partial_failure(self) -> bool:
        return bool(self.failures)

    def to_dict(self) -> dict:
        return {
            "completed": self.completed,
            "resumed": self.resumed,
            "failures": self.failures,
            "no_audio": self.no_audio,
            "wall_s": self.wall_s,
        }


@dataclass
class BatchResult:
    hypotheses: HypothesisSet
    transcripts: HypothesisSet
    results: dict[str, PipelineResult]
    log: RunLog


def read_checkpoint(path, target: str | None = None) -> dict[str, PipelineResult]:
    """Load completed results; a truncated last line is dropped from the file."""
    path = Path(path)
    if not path.exists():
        return {}
    raw = path.read_bytes()
    lines = raw.split(b"\n")
    tail = lines.pop()  # b"" when the file ends with a newline
    done: dict[str, PipelineResult] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            res = PipelineResult.from_record(json.loads(line.decode("utf-8")))
        except (ValueError, TypeError) as exc:
            raise CheckpointError(f"{path}: line {lineno} is corrupt: {exc}") from None
        if target is not None and res.target_lang != target:
            raise CheckpointError(f"{path}: line {lineno} is for target {res.target_lang!r}, not {target!r}")
        done[res.segment_id] = res
    if tail.strip():
        try:
            res = PipelineResult.from_record(json.loads(tail.decode("utf-8")))
        except (ValueError, TypeError):
            log.warning("%s: dropping truncated final line", path)
            with path.open("r+b") as f:
                f.truncate(len(raw) - len(tail))
        else:
            # complete record missing its newline
            with path.open("ab") as f:
                f.write(b"\n")
            if target is None or res.target_lang == target:
                done[res.segment_id] = res
    return done


class _CheckpointWriter:
    """The single writer of the checkpoint file; one flushed JSON line per result."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._f = self.path.open("a", encoding="utf-8")

    def append(self, result: PipelineResult):
        line = json.dumps(result.to_record(), ensure_ascii=False) + "\n"
        with self._lock:
            self._f.write(line)
            self._f.flush()
            os.fsync(self._f.fileno())

    def close(self):
        self._f.close()


def batch_run(corpus: Corpus, asr: EndpointConfig, mt: EndpointConfig, target: str, checkpoint_path, *,
              system_id: str = "cascade", max_in_flight: int | None = None,
              normalization: NormalizationConfig | None = None, asr_transport=None, mt_transport=None,
              sleep=time.sleep) -> BatchResult:
    """Run every segment with audio, skipping ids already in the checkpoint.

    Per-segment failures are logged and do not stop the run.
    """
    start = time.perf_counter()
    runlog = RunLog()
    done = read_checkpoint(checkpoint_path, target)
    todo = []
    for seg in corpus:
        if seg.audio is None:
            runlog.no_audio.append(seg.id)
        elif seg.id in done:
            runlog.resumed.append(seg.id)
        else:
            todo.append(seg)

    writer = _CheckpointWriter(checkpoint_path)
    runner = Cascade(asr, mt, max_in_flight=max_in_flight, normalization=normalization,
                     asr_transport=asr_transport, mt_transport=mt_transport, sleep=sleep)

    def work(seg: Segment):
        try:
            res = runner.run(seg, corpus.audio_path(seg), target)
        except StageError as exc:
            log.error("%s", exc)
            return seg.id, None, {"segment_id": seg.id, "stage": exc.stage, "error": str(exc)}
        writer.append(res)
        return seg.id, res, None

    pool = ThreadPoolExecutor(max_workers=runner.limiter.limit)
    try:
        futures = [pool.submit(work, seg) for seg in todo]
        for fut in futures:
            sid, res, failure = fut.result()
            if res is not None:
                done[sid] = res
                runlog.completed.append(sid)
            else:
                runlog.failures.append(failure)
    finally:
        pool.shutdown(wait=True, cancel_futures=True)
        writer.close()
        runner.close()

    order = [seg.id for seg in corpus if seg.id in done]
    hyps = HypothesisSet(system_id, target, {sid: done[sid].translation for sid in order})
    transcripts = HypothesisSet(f"{system_id}-asr", "cs", {sid: done[sid].transcript for sid in order})
    runlog.wall_s = time.perf_counter() - start
    return BatchResult(hyps, transcripts, {sid: done[sid] for sid in order}, runlog)
