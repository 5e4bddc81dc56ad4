"""Exact-match METEOR (unigram alignment, recall-weighted F-mean, fragmentation penalty)."""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass

from .bleu import tokenize_intl

ALPHA = 0.9  # F = PR / (alpha*P + (1-alpha)*R) = 10PR / (R + 9P)
BETA = 3.0
GAMMA = 0.5

# Above this many candidate alignments fall back to in-order matching.
_MAX_ALIGNMENTS = 4096


@dataclass(frozen=True)
class MeteorResult:
    score: float
    matches: int
    chunks: int
    precision: float
    recall: float
    empty_input: bool = False


def _chunks(pairs: list[tuple[int, int]]) -> int:
    if not pairs:
        return 0
    pairs = sorted(pairs)
    n = 1
    for (h0, r0), (h1, r1) in zip(pairs, pairs[1:]):
        if not (h1 == h0 + 1 and r1 == r0 + 1):
            n += 1
    return n


def _type_options(hpos: list[int], rpos: list[int], cap: int) -> list[list[tuple[int, int]]]:
    """Maximum injective matchings of one word type (at most ``cap + 1`` of them)."""
    k = min(len(hpos), len(rpos))
    if len(hpos) <= len(rpos):
        perms = itertools.permutations(rpos, k)
        return [list(zip(hpos, p)) for p in itertools.islice(perms, cap + 1)]
    perms = itertools.permutations(hpos, k)
    return [list(zip(p, rpos)) for p in itertools.islice(perms, cap + 1)]


def align(hyp: list[str], ref: list[str]) -> list[tuple[int, int]]:
    """Maximum exact-match alignment with the fewest chunks.

    Among alignments with the maximum number of matches, pick the one with
    fewest chunks, then the smallest total position displacement.
    """
    hmap, rmap = defaultdict(list), defaultdict(list)
    for i, w in enumerate(hyp):
        hmap[w].append(i)
    for j, w in enumerate(ref):
        rmap[w].append(j)
    shared = [w for w in hmap if w in rmap]
    if not shared:
        return []

    options = [_type_options(hmap[w], rmap[w], _MAX_ALIGNMENTS) for w in shared]
    n_combos = 1
    for opts in options:
        n_combos *= len(opts)
        if n_combos > _MAX_ALIGNMENTS:
            break
    if n_combos > _MAX_ALIGNMENTS:
        # in-order matching per word type
        return sorted(p for w in shared for p in zip(hmap[w], rmap[w]))

    best, best_key = None, None
    for combo in itertools.product(*options):
        pairs = [p for part in combo for p in part]
        key = (_chunks(pairs), sum(abs(h - r) for h, r in pairs))
        if best_key is None or key < best_key:
            best, best_key = pairs, key
    return sorted(best)


def meteor_details(hyp: str, ref: str) -> MeteorResult:
    h, r = tokenize_intl(hyp), tokenize_intl(ref)
    if not h or not r:
        return MeteorResult(0.0, 0, 0, 0.0, 0.0, empty_input=True)
    pairs = align(h, r)
    m = len(pairs)
    if m == 0:
        return MeteorResult(0.0, 0, 0, 0.0, 0.0)
    precision, recall = m / len(h), m / len(r)
    fmean = precision * recall / (ALPHA * precision + (1 - ALPHA) * recall)
    chunks = _chunks(pairs)
    penalty = GAMMA * (chunks / m) ** BETA
    return MeteorResult(fmean * (1 - penalty), m, chunks, precision, recall)


def meteor(hyp: str, ref: str) -> float:
    return meteor_details(hyp, ref).score
