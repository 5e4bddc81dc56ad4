"""System-level scoring over a corpus, and ranking of scored systems."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..clients import EndpointError
from ..corpus import Corpus, HypothesisSet
from ..preprocess.text import NormalizationConfig, normalize_text
from ..prompts import DEFAULT_RUBRIC, GraderRubric, translation_template
from .bleu import MAX_NGRAM, SMOOTHING, TOKENIZATION, corpus_bleu, sentence_bleu
from .meteor import ALPHA, BETA, GAMMA, meteor_details
from .edit import char_errors, eed, word_errors
from .report import DIRECTIONS, HIGHER, MetricReport, MetricScore, timestamp_metadata
from .semantic import UngradableError, bert_f1, llm_grade

log = logging.getLogger(__name__)

OFFLINE_METRICS = ("bleu", "meteor", "wer", "cer", "eed")
ALL_METRICS = OFFLINE_METRICS + ("bert_f1", "llm_grade")

_DEFAULT_NORMALIZATION = NormalizationConfig()


class EvaluationError(ValueError):
    pass


class IncomparableReportsError(ValueError):
    pass


@dataclass(frozen=True)
class BleuConfig:
    max_ngram: int = MAX_NGRAM
    tokenization: str = TOKENIZATION
    smoothing: str = SMOOTHING


def metric_config(normalization: NormalizationConfig | None, rubric: GraderRubric = DEFAULT_RUBRIC,
                  extra: dict | None = None) -> dict:
    cfg = {
        "normalization": normalization.to_dict() if normalization else None,
        "bleu": {"max_ngram": MAX_NGRAM, "tokenization": TOKENIZATION,
                 "corpus_smoothing": "none", "sentence_smoothing": SMOOTHING, "effective_order": True},
        "meteor": {"variant": "exact", "alpha": ALPHA, "beta": BETA, "gamma": GAMMA,
                   "tokenization": TOKENIZATION},
        "wer": {"unit": "whitespace-token", "aggregate": "sum-edits/sum-ref"},
        "cer": {"unit": "character", "aggregate": "sum-edits/sum-ref"},
        "eed": {"definition": "char-levenshtein/max-len", "aggregate": "mean"},
        "bert_f1": {"matching": "greedy-cosine", "tokens": "whitespace", "aggregate": "mean"},
        "llm_grade": {"rubric": rubric.to_dict(), "scale": "0-10", "aggregate": "mean", "temperature": 0.0},
        "prompts": {lang: translation_template(lang).to_dict() for lang in ("en", "ar")},
    }
    if extra:
        cfg["extra"] = extra
    return cfg


def fingerprint(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _aligned(corpus: Corpus, hyps: HypothesisSet, normalization, *, strict: bool):
    """(ids, hyp texts, ref texts, src texts) over segments having both sides."""
    hyps.check_against(corpus)
    prep = (lambda t: normalize_text(t, normalization)) if normalization else (lambda t: t)
    ids, H, R, S = [], [], [], []
    for seg in corpus:
        if seg.id not in hyps.entries:
            continue
        ref = seg.reference(hyps.target_lang)
        if not ref:
            if strict:
                raise EvaluationError(f"segment {seg.id!r} has no {hyps.target_lang} reference")
            continue
        ids.append(seg.id)
        H.append(prep(hyps.entries[seg.id]))
        R.append(prep(ref))
        S.append(prep(seg.source_cs))
    return ids, H, R, S


def bleu(hyps: HypothesisSet, refs: Corpus, config: BleuConfig = BleuConfig(),
         normalization: NormalizationConfig | None = _DEFAULT_NORMALIZATION) -> MetricScore:
    """Corpus BLEU of a hypothesis set, with sentence BLEU per segment."""
    if config.tokenization != TOKENIZATION or config.smoothing != SMOOTHING:
        raise ValueError(f"unsupported BLEU config {config}")
    if len(hyps) == 0:
        raise EvaluationError("empty hypothesis set")
    ids, H, R, _ = _aligned(refs, hyps, normalization, strict=True)
    return _bleu_score(ids, H, R, config.max_ngram)


def _bleu_score(ids, H, R, max_ngram=MAX_NGRAM) -> MetricScore:
    return MetricScore(
        "bleu",
        corpus_bleu(H, R, max_ngram),
        {sid: sentence_bleu(h, r, max_ngram) for sid, h, r in zip(ids, H, R)},
    )


def _rate_score(metric, ids, H, R) -> MetricScore:
    count = word_errors if metric == "wer" else char_errors
    seg, dist_sum, ref_sum, excluded = {}, 0, 0, 0
    for sid, h, r in zip(ids, H, R):
        dist, n = count(h, r)
        if n == 0:
            excluded += 1
            continue
        seg[sid] = dist / n
        dist_sum += dist
        ref_sum += n
    notes = {"excluded_empty_reference": excluded} if excluded else {}
    return MetricScore(metric, dist_sum / ref_sum if ref_sum else None, seg, notes)


def _mean_score(metric, values: dict[str, float], notes=None) -> MetricScore:
    value = sum(values.values()) / len(values) if values else None
    return MetricScore(metric, value, values, notes or {})


def _parallel(fn, items, workers: int):
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(fn, items))


def _bert_score(ids, H, R, client) -> MetricScore:
    if client is None:
        return MetricScore("bert_f1", None, notes={"unavailable": "no embedding endpoint configured"})

    def one(args):
        h, r = args
        try:
            return bert_f1(h, r, client)
        except EndpointError as exc:
            log.warning("bert_f1 failed: %s", exc)
            return None

    results = _parallel(one, list(zip(H, R)), client.config.max_in_flight)
    values = {sid: v for sid, v in zip(ids, results) if v is not None}
    failed = len(ids) - len(values)
    notes = {"endpoint_failures": failed} if failed else {}
    if not values:
        notes["unavailable"] = "embedding endpoint failed for every segment"
    return _mean_score("bert_f1", values, notes)


def _grade_score(ids, H, R, S, client, rubric) -> MetricScore:
    if client is None:
        return MetricScore("llm_grade", None, notes={"unavailable": "no grader endpoint configured"})

    def one(args):
        s, h, r = args
        try:
            return llm_grade(s, h, r, client, rubric)
        except UngradableError:
            return "ungradable"
        except EndpointError as exc:
            log.warning("llm_grade failed: %s", exc)
            return None

    results = _parallel(one, list(zip(S, H, R)), client.config.max_in_flight)
    values = {sid: v for sid, v in zip(ids, results) if isinstance(v, float)}
    notes = {}
    ungradable = sum(1 for v in results if v == "ungradable")
    failed = sum(1 for v in results if v is None)
    if ungradable:
        notes["ungradable_segments"] = ungradable
    if failed:
        notes["endpoint_failures"] = failed
    if not values:
        notes["unavailable"] = "no segment could be graded"
    return _mean_score("llm_grade", values, notes)


def score_system(
    corpus: Corpus,
    hyps: HypothesisSet,
    metric_set=OFFLINE_METRICS,
    *,
    embed_client=None,
    grader_client=None,
    normalization: NormalizationConfig | None = _DEFAULT_NORMALIZATION,
    rubric: GraderRubric = DEFAULT_RUBRIC,
    extra_fingerprint: dict | None = None,
) -> MetricReport:
    """Score every requested metric over segments that have a hypothesis and a reference.

    Pass ``normalization=None`` to score raw text. Endpoint-backed metrics
    without a client are reported as unavailable rather than failing.
    """
    unknown = [m for m in metric_set if m not in DIRECTIONS]
    if unknown:
        raise ValueError(f"unknown metric(s) {unknown}")
    ids, H, R, S = _aligned(corpus, hyps, normalization, strict=False)
    with_ref = sum(1 for seg in corpus if seg.reference(hyps.target_lang))
    if not ids:
        raise EvaluationError(f"system {hyps.system_id!r}: no segment has both a hypothesis and a reference")

    scores = []
    for metric in metric_set:
        if metric == "bleu":
            scores.append(_bleu_score(ids, H, R))
        elif metric in ("wer", "cer"):
            scores.append(_rate_score(metric, ids, H, R))
        elif metric == "eed":
            scores.append(_mean_score("eed", {sid: eed(h, r) for sid, h, r in zip(ids, H, R)}))
        elif metric == "meteor":
            details = {sid: meteor_details(h, r) for sid, h, r in zip(ids, H, R)}
            empty = sum(1 for d in details.values() if d.empty_input)
            scores.append(_mean_score("meteor", {sid: d.score for sid, d in details.items()},
                                      {"empty_input_segments": empty} if empty else None))
        elif metric == "bert_f1":
            scores.append(_bert_score(ids, H, R, embed_client))
        elif metric == "llm_grade":
            scores.append(_grade_score(ids, H, R, S, grader_client, rubric))

    extra = dict(extra_fingerprint or {})
    if embed_client is not None and "bert_f1" in metric_set:
        extra["embedding_model"] = embed_client.config.model_id
    if grader_client is not None and "llm_grade" in metric_set:
        extra["grader_model"] = grader_client.config.model_id
    config = metric_config(normalization, rubric, extra or None)
    return MetricReport(
        system_id=hyps.system_id,
        target_lang=hyps.target_lang,
        scores=scores,
        config_fingerprint=fingerprint(config),
        coverage=len(ids) / with_ref if with_ref else 0.0,
        n_segments=len(ids),
        config=config,
        metadata=timestamp_metadata(),
    )


@dataclass(frozen=True)
class LeaderboardEntry:
    rank: int
    system_id: str
    value: float | None


def rank_systems(reports: list[MetricReport], key_metric: str) -> list[LeaderboardEntry]:
    """Order systems by ``key_metric`` in its direction; ties go to the smaller system id.

    Systems without a value for the key metric are listed last.
    """
    if key_metric not in DIRECTIONS:
        raise ValueError(f"unknown metric {key_metric!r}")
    if not reports:
        return []
    fps = {r.config_fingerprint for r in reports}
    langs = {r.target_lang for r in reports}
    if len(fps) > 1:
        raise IncomparableReportsError(f"reports have different config fingerprints: {sorted(fps)}")
    if len(langs) > 1:
        raise IncomparableReportsError(f"reports have different target languages: {sorted(langs)}")

    by_id = {r.system_id: r for r in reports}
    if len(by_id) != len(reports):
        raise ValueError("duplicate system ids")
    ordered = rank_order({sid: r.value(key_metric) for sid, r in by_id.items()}, DIRECTIONS[key_metric])
    return [LeaderboardEntry(i + 1, sid, by_id[sid].value(key_metric)) for i, sid in enumerate(ordered)]


def rank_order(values: dict[str, float | None], direction: str) -> list[str]:
    """System ids best first; ties go to the smaller id, missing values last."""
    sign = -1.0 if direction == HIGHER else 1.0

    def key(sid):
        v = values[sid]
        return (v is None, sign * v if v is not None else 0.0, sid)

    return sorted(values, key=key)


def render_leaderboard(entries: list[LeaderboardEntry], key_metric: str) -> str:
    lines = [f"| Rank | Model | {key_metric} |", "|---:|---|---:|"]
    for e in entries:
        lines.append(f"| {e.rank} | {e.system_id} | {'—' if e.value is None else f'{e.value:.4g}'} |")
    return "\n".join(lines) + "\n"
