from .bleu import corpus_bleu, sentence_bleu, tokenize_intl
from .edit import cer, eed, levenshtein, wer
from .meteor import meteor, meteor_details
from .report import DIRECTIONS, MetricReport, MetricScore, render_markdown
from .scoring import (
    ALL_METRICS,
    OFFLINE_METRICS,
    BleuConfig,
    EvaluationError,
    IncomparableReportsError,
    LeaderboardEntry,
    bleu,
    fingerprint,
    metric_config,
    rank_order,
    rank_systems,
    render_leaderboard,
    score_system,
)
from .semantic import UngradableError, bert_f1, greedy_cosine_f1, llm_grade, parse_grade

__all__ = [
    "ALL_METRICS",
    "BleuConfig",
    "DIRECTIONS",
    "EvaluationError",
    "IncomparableReportsError",
    "LeaderboardEntry",
    "MetricReport",
    "MetricScore",
    "OFFLINE_METRICS",
    "UngradableError",
    "bert_f1",
    "bleu",
    "cer",
    "corpus_bleu",
    "eed",
    "fingerprint",
    "greedy_cosine_f1",
    "levenshtein",
    "llm_grade",
    "meteor",
    "meteor_details",
    "metric_config",
    "parse_grade",
    "rank_systems",
    "render_leaderboard",
    "render_markdown",
    "score_system",
    "sentence_bleu",
    "tokenize_intl",
    "wer",
]
