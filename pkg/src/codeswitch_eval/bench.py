"""Throughput, latency and quantization-degradation measurements.

Requests are sent strictly one at a time so a benchmark never competes
with itself. All timings use a monotonic clock, injectable for tests.
"""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import asdict, dataclass, field

from .clients import ChatClient, EndpointConfig, EndpointError, TranscriptionClient
from .metrics.report import DIRECTIONS, HIGHER, MetricReport
from .metrics.scoring import IncomparableReportsError
from .preprocess.audio import AudioClip

log = logging.getLogger(__name__)

DEFAULT_WARMUP = 2


class BenchError(RuntimeError):
    pass


@dataclass
class BenchResult:
    endpoint_label: str
    tokens_per_s: float | None = None
    latency_s_per_clip: float | None = None
    wall_clock_s: float = 0.0
    request_count: int = 0
    failures: int = 0
    samples_s: list[float] = field(default_factory=list)
    token_count_source: str | None = None  # "usage" or "whitespace-fallback"

    def to_dict(self) -> dict:
        return asdict(self)


def _elapsed(clock, start: float) -> float:
    dt = clock() - start
    if dt < 0:
        raise BenchError(f"clock went backwards by {-dt:.6f} s")
    return dt


def measure_throughput(mt: EndpointConfig, prompts: list[str], warmup: int = DEFAULT_WARMUP, *,
                       client: ChatClient | None = None, clock=time.perf_counter,
                       transport=None) -> BenchResult:
    """Generated tokens per second over the prompts after the first ``warmup``.

    Token counts come from the response usage field; when a response lacks
    it, its whitespace token count is used and the result says so.
    """
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    if len(prompts) <= warmup:
        raise ValueError(f"need at least one prompt beyond warmup ({len(prompts)} prompts, warmup {warmup})")
    own = client is None
    client = client or ChatClient(mt, transport=transport)
    tokens, gen_s, failures, fallback = 0, 0.0, 0, False
    samples = []
    wall_start = clock()
    try:
        for i, prompt in enumerate(prompts):
            messages = [{"role": "user", "content": prompt}]
            start = clock()
            try:
                done = client.complete(messages)
            except EndpointError as exc:
                if i >= warmup:
                    failures += 1
                log.warning("bench request %d failed: %s", i, exc)
                continue
            dt = _elapsed(clock, start)
            if i < warmup:
                continue
            if done.completion_tokens is None:
                fallback = True
                n = len(done.text.split())
            else:
                n = done.completion_tokens
            tokens += n
            gen_s += dt
            samples.append(dt)
    finally:
        if own:
            client.close()
    measured = len(prompts) - warmup
    if failures == measured:
        raise BenchError(f"all {measured} measured requests failed")
    if gen_s <= 0:
        raise BenchError("no measurable generation time")
    return BenchResult(
        endpoint_label=mt.model_id,
        tokens_per_s=tokens / gen_s,
        wall_clock_s=_elapsed(clock, wall_start),
        request_count=measured,
        failures=failures,
        samples_s=samples,
        token_count_source="whitespace-fallback" if fallback else "usage",
    )


def measure_latency(asr: EndpointConfig, clip: AudioClip, repeats: int = 5, *,
                    client: TranscriptionClient | None = None, clock=time.perf_counter,
                    transport=None) -> BenchResult:
    """Median seconds to transcribe ``clip`` over ``repeats`` sequential requests."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    own = client is None
    client = client or TranscriptionClient(asr, transport=transport)
    samples, failures = [], 0
    wall_start = clock()
    try:
        for i in range(repeats):
            start = clock()
            try:
                client.transcribe(clip)
            except EndpointError as exc:
                failures += 1
                log.warning("latency repeat %d failed: %s", i, exc)
                continue
            samples.append(_elapsed(clock, start))
    finally:
        if own:
            client.close()
    if not samples:
        raise BenchError(f"all {repeats} repeats failed")
    return BenchResult(
        endpoint_label=asr.model_id,
        latency_s_per_clip=statistics.median(samples),
        wall_clock_s=_elapsed(clock, wall_start),
        request_count=repeats,
        failures=failures,
        samples_s=samples,
    )


def relative_degradation(full: float, quant: float, metric: str) -> float | None:
    """``(full - quant) / full``, sign flipped for lower-is-better metrics.

    Positive means the quantized system is worse. ``None`` when ``full`` is 0.
    """
    if full == 0:
        return None
    delta = (full - quant) / full
    return delta if DIRECTIONS[metric] == HIGHER else -delta


def degradation(full: MetricReport, quant: MetricReport) -> dict[str, float | None]:
    """Per-metric relative degradation for metrics both reports have values for."""
    if full.config_fingerprint != quant.config_fingerprint:
        raise IncomparableReportsError(
            f"fingerprint mismatch: {full.config_fingerprint} vs {quant.config_fingerprint}")
    if full.target_lang != quant.target_lang:
        raise IncomparableReportsError(f"target mismatch: {full.target_lang} vs {quant.target_lang}")
    out = {}
    for score in full.scores:
        a, b = score.corpus_value, quant.value(score.metric)
        if a is None or b is None:
            continue
        out[score.metric] = relative_degradation(a, b, score.metric)
    return out


def render_bench(results: list[BenchResult], deltas: dict[str, float | None] | None = None) -> str:
    lines = ["| Endpoint | Tokens/s | Latency (s/clip) | Requests | Failures |", "|---|---:|---:|---:|---:|"]
    for r in results:
        tps = "—" if r.tokens_per_s is None else f"{r.tokens_per_s:.2f}"
        lat = "—" if r.latency_s_per_clip is None else f"{r.latency_s_per_clip:.3f}"
        lines.append(f"| {r.endpoint_label} | {tps} | {lat} | {r.request_count} | {r.failures} |")
    if deltas:
        lines += ["", "| Metric | Relative degradation |", "|---|---:|"]
        for metric, d in deltas.items():
            lines.append(f"| {metric} | {'—' if d is None else f'{100 * d:.2f}%'} |")
    return "\n".join(lines) + "\n"
