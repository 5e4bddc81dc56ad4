"""Corpus and sentence BLEU with a single pinned tokenizer.

Corpus BLEU sums clipped n-gram matches over all segments (no smoothing);
sentence BLEU uses exponential smoothing for zero-match orders. Both use the
effective order, i.e. orders for which the hypothesis has no n-grams at all
are left out of the geometric mean.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field

MAX_NGRAM = 4
TOKENIZATION = "intl-punct-split"
SMOOTHING = "exp"


def tokenize_intl(text: str) -> list[str]:
    """Split punctuation and symbols into their own tokens.

    Punctuation between two digits stays attached, so "3.14" and "1,000"
    survive as single tokens. Works on any script via Unicode categories.
    """
    out = []
    n = len(text)
    for i, ch in enumerate(text):
        cat = unicodedata.category(ch)
        if cat[0] == "S":
            out.append(f" {ch} ")
        elif cat[0] == "P":
            between_digits = (
                0 < i < n - 1
                and unicodedata.category(text[i - 1]) == "Nd"
                and unicodedata.category(text[i + 1]) == "Nd"
            )
            out.append(ch if between_digits else f" {ch} ")
        else:
            out.append(ch)
    return "".join(out).split()


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


@dataclass
class BleuStats:
    matches: list[int] = field(default_factory=lambda: [0] * MAX_NGRAM)
    totals: list[int] = field(default_factory=lambda: [0] * MAX_NGRAM)
    hyp_len: int = 0
    ref_len: int = 0

    def __iadd__(self, other: BleuStats) -> BleuStats:
        self.matches = [a + b for a, b in zip(self.matches, other.matches)]
        self.totals = [a + b for a, b in zip(self.totals, other.totals)]
        self.hyp_len += other.hyp_len
        self.ref_len += other.ref_len
        return self


def segment_stats(hyp: str, ref: str, max_ngram: int = MAX_NGRAM) -> BleuStats:
    h, r = tokenize_intl(hyp), tokenize_intl(ref)
    stats = BleuStats([0] * max_ngram, [0] * max_ngram, len(h), len(r))
    for n in range(1, max_ngram + 1):
        hc, rc = _ngrams(h, n), _ngrams(r, n)
        stats.matches[n - 1] = sum(min(c, rc[g]) for g, c in hc.items())
        stats.totals[n - 1] = max(len(h) - n + 1, 0)
    return stats


def brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len == 0:
        return 0.0
    if hyp_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / hyp_len)


def score_from_stats(stats: BleuStats, smooth: bool = False) -> float:
    """BLEU on a 0-100 scale from accumulated statistics."""
    order = sum(1 for t in stats.totals if t > 0)
    if stats.hyp_len == 0 or order == 0:
        return 0.0
    log_sum = 0.0
    smooth_div = 1.0
    for m, t in zip(stats.matches[:order], stats.totals[:order]):
        if m == 0:
            if not smooth:
                return 0.0
            smooth_div *= 2.0
            log_sum += math.log(1.0 / (smooth_div * t))
        else:
            log_sum += math.log(m / t)
    return 100.0 * brevity_penalty(stats.hyp_len, stats.ref_len) * math.exp(log_sum / order)


def corpus_bleu(hyps: list[str], refs: list[str], max_ngram: int = MAX_NGRAM) -> float:
    if len(hyps) != len(refs):
        raise ValueError(f"{len(hyps)} hypotheses vs {len(refs)} references")
    if not hyps:
        raise ValueError("corpus_bleu needs at least one segment")
    total = BleuStats([0] * max_ngram, [0] * max_ngram)
    for h, r in zip(hyps, refs):
        total += segment_stats(h, r, max_ngram)
    return score_from_stats(total)


def sentence_bleu(hyp: str, ref: str, max_ngram: int = MAX_NGRAM) -> float:
    return score_from_stats(segment_stats(hyp, ref, max_ngram), smooth=True)
