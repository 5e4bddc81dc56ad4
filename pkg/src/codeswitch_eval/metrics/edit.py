"""Levenshtein distance and the error rates built on it."""

from __future__ import annotations

from collections.abc import Sequence


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost edit distance between two sequences (strings or token lists)."""
    if a == b:
        return 0
    # common prefix/suffix never changes the distance
    start = 0
    n = min(len(a), len(b))
    while start < n and a[start] == b[start]:
        start += 1
    end_a, end_b = len(a), len(b)
    while end_a > start and end_b > start and a[end_a - 1] == b[end_b - 1]:
        end_a -= 1
        end_b -= 1
    a, b = a[start:end_a], b[start:end_b]
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)

    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        left = i
        for j, cb in enumerate(b, 1):
            sub = prev[j - 1] + (ca != cb)
            ins = left + 1
            dele = prev[j] + 1
            left = sub if sub < ins else ins
            if dele < left:
                left = dele
            cur.append(left)
        prev = cur
    return prev[-1]


def word_errors(hyp: str, ref: str) -> tuple[int, int]:
    """(edit distance over whitespace tokens, reference token count)."""
    ref_toks = ref.split()
    return levenshtein(hyp.split(), ref_toks), len(ref_toks)


def char_errors(hyp: str, ref: str) -> tuple[int, int]:
    return levenshtein(hyp, ref), len(ref)


def wer(hyp: str, ref: str) -> float:
    dist, n = word_errors(hyp, ref)
    if n == 0:
        raise ValueError("WER is undefined for an empty reference")
    return dist / n


def cer(hyp: str, ref: str) -> float:
    dist, n = char_errors(hyp, ref)
    if n == 0:
        raise ValueError("CER is undefined for an empty reference")
    return dist / n


def eed(hyp: str, ref: str) -> float:
    """Character edit distance divided by the longer string's length, in [0, 1]."""
    longest = max(len(hyp), len(ref))
    if longest == 0:
        return 0.0
    return levenshtein(hyp, ref) / longest
