"""Endpoint-backed metrics: embedding F1 and LLM grading."""

from __future__ import annotations

import re

import numpy as np

from ..prompts import DEFAULT_RUBRIC, GraderRubric

_FIRST_INT = re.compile(r"\d+")


class UngradableError(RuntimeError):
    def __init__(self, attempts: int, last_reply: str):
        super().__init__(f"no 0-10 grade found in {attempts} replies; last: {last_reply[:80]!r}")
        self.attempts = attempts
        self.last_reply = last_reply


def greedy_cosine_f1(hyp_vecs: np.ndarray, ref_vecs: np.ndarray) -> float:
    """F1 of greedy max-cosine matching between two sets of token vectors."""
    if len(hyp_vecs) == 0 or len(ref_vecs) == 0:
        return 0.0

    def unit(v):
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        return v / np.where(norms == 0, 1.0, norms)

    sim = unit(np.asarray(hyp_vecs, float)) @ unit(np.asarray(ref_vecs, float)).T
    precision = float(np.clip(sim.max(axis=1).mean(), 0.0, 1.0))
    recall = float(np.clip(sim.max(axis=0).mean(), 0.0, 1.0))
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def bert_f1(hyp: str, ref: str, embed_client) -> float:
    """Embedding F1 over whitespace tokens. Raises ``EndpointError`` if the server fails."""
    h, r = hyp.split(), ref.split()
    if not h or not r:
        return 0.0
    vecs = embed_client.embed(h + r)
    return greedy_cosine_f1(vecs[: len(h)], vecs[len(h):])


def parse_grade(reply: str) -> int | None:
    """First integer in the reply if it lies in 0..10, else ``None``.

    >>> parse_grade("8/10, faithful and fluent")
    8
    >>> parse_grade("great translation") is None
    True
    """
    m = _FIRST_INT.search(reply)
    if m is None:
        return None
    value = int(m.group())
    return value if 0 <= value <= 10 else None


def llm_grade(src: str, hyp: str, ref: str, chat_client, rubric: GraderRubric = DEFAULT_RUBRIC) -> float:
    """Grade on the rubric's 0-10 scale at temperature 0 and return ``grade / 10``.

    Unparseable replies are re-asked up to ``rubric.max_attempts`` times in
    total, after which :class:`UngradableError` is raised.
    """
    messages = rubric.render(src, hyp, ref)
    reply = ""
    for _ in range(rubric.max_attempts):
        reply = chat_client.complete(messages, temperature=0.0).text
        grade = parse_grade(reply)
        if grade is not None:
            return grade / 10.0
    raise UngradableError(rubric.max_attempts, reply)
