"""Side-by-side tokenizer comparison and fertility statistics."""

from __future__ import annotations

from dataclasses import dataclass

from .bpe import TokenizerModel, is_space_token, tokenize


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    tokens: tuple[str, ...]
    count: int
    fertility: float


def _as_items(models):
    items = list(models.items()) if isinstance(models, dict) else list(models)
    if not items:
        raise ValueError("need at least one tokenizer model")
    return items


def compare_tokenizers(models, text: str) -> list[ComparisonRow]:
    """Per-model tokens (whitespace tokens dropped), token count and tokens per word.

    ``models`` is a mapping or a sequence of ``(name, TokenizerModel)`` pairs.
    """
    n_words = len(text.split())
    rows = []
    for name, model in _as_items(models):
        toks = tuple(t for t in tokenize(model, text) if not is_space_token(t))
        rows.append(ComparisonRow(name, toks, len(toks), len(toks) / n_words if n_words else 0.0))
    return rows


def corpus_fertility(models, texts) -> dict[str, float]:
    """Aggregate fertility over many texts: total non-space tokens / total words."""
    words = sum(len(t.split()) for t in texts)
    out = {}
    for name, model in _as_items(models):
        n = sum(1 for t in texts for tok in tokenize(model, t) if not is_space_token(tok))
        out[name] = n / words if words else 0.0
    return out


def render_comparison(rows: list[ComparisonRow]) -> str:
    lines = ["| Model | Tokens | Count | Fertility |", "|---|---|---:|---:|"]
    for r in rows:
        lines.append(f"| {r.name} | [{'، '.join(r.tokens)}] | {r.count} | {r.fertility:.2f} |")
    return "\n".join(lines)
