"""Byte-pair encoding with byte fallback.

Text is pre-split into words (runs of non-whitespace) and single whitespace
characters. Merges never cross a word boundary, and whitespace characters are
symbols of their own, so concatenating decoded tokens restores the input
exactly.
"""

from __future__ import annotations

import heapq
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import regex
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_texts

_PIECES = regex.compile(r"\S+|\s")
_BYTE_TOKENS = tuple(f"<0x{b:02X}>" for b in range(256))
_BYTE_IDS = {tok: b for b, tok in enumerate(_BYTE_TOKENS)}


class UnrepresentableCharacterError(ValueError):
    def __init__(self, char: str):
        super().__init__(f"character {char!r} (U+{ord(char):04X}) is not in the vocabulary and byte_fallback is off")
        self.char = char


@dataclass
class TokenizerModel:
    vocab: dict[str, int]
    merges: list[tuple[str, str]]
    byte_fallback: bool = True
    special_tokens: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.merges = [tuple(m) for m in self.merges]
        for left, right in self.merges:
            if left + right not in self.vocab:
                raise ValueError(f"merge result {left + right!r} missing from vocab")
        if self.byte_fallback:
            missing = [t for t in _BYTE_TOKENS if t not in self.vocab]
            if missing:
                raise ValueError(f"byte_fallback needs all 256 byte tokens, {len(missing)} missing")
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}
        self._id_to_token = {i: t for t, i in self.vocab.items()}
        self._cache: dict[str, tuple[str, ...]] = {}

    def __eq__(self, other):
        if not isinstance(other, TokenizerModel):
            return NotImplemented
        return (self.vocab, self.merges, self.byte_fallback, self.special_tokens) == (
            other.vocab, other.merges, other.byte_fallback, other.special_tokens)

    def id_to_token(self, token_id: int) -> str:
        try:
            return self._id_to_token[token_id]
        except KeyError:
            raise KeyError(f"unknown token id {token_id}") from None

    def to_json(self) -> dict:
        return {
            "vocab": self.vocab,
            "merges": [f"{a} {b}" for a, b in self.merges],
            "byte_fallback": self.byte_fallback,
            "special_tokens": list(self.special_tokens),
        }

    @classmethod
    def from_json(cls, doc: dict) -> TokenizerModel:
        merges = []
        for m in doc["merges"]:
            parts = m.split(" ")
            if len(parts) != 2:
                raise ValueError(f"malformed merge entry {m!r}")
            merges.append(tuple(parts))
        return cls(dict(doc["vocab"]), merges, bool(doc.get("byte_fallback", True)),
                   list(doc.get("special_tokens", [])))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path) -> TokenizerModel:
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise OSError(f"cannot read tokenizer model {path}: {exc}") from exc
        return cls.from_json(doc)


def build_model(alphabet, merges, byte_fallback=True, special_tokens=()) -> TokenizerModel:
    """Assemble a model: specials, then byte tokens, then characters, then merge results."""
    vocab: dict[str, int] = {}

    def add(tok):
        if tok not in vocab:
            vocab[tok] = len(vocab)

    for tok in special_tokens:
        add(tok)
    if byte_fallback:
        for tok in _BYTE_TOKENS:
            add(tok)
    for ch in alphabet:
        add(ch)
    for left, right in merges:
        add(left + right)
    return TokenizerModel(vocab, list(merges), byte_fallback, list(special_tokens))


# --------------------------------------------------------------------------- training


def _merge_word(symbols: tuple[str, ...], left: str, right: str, merged: str) -> tuple[str, ...]:
    out = []
    i = 0
    n = len(symbols)
    while i < n:
        if i + 1 < n and symbols[i] == left and symbols[i + 1] == right:
            out.append(merged)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def _pairs(symbols):
    return zip(symbols, symbols[1:])


def train_bpe(corpus_text, vocab_size: int, *, byte_fallback: bool = True, special_tokens=()) -> TokenizerModel:
    """Learn merges until the character alphabet plus merges reaches ``vocab_size``.

    Byte tokens and special tokens are not counted in ``vocab_size``. At
    each step the most frequent adjacent pair wins; equal counts go to the
    pair whose merged string sorts first, then to the shorter left part.
    """
    texts = check_texts(corpus_text, "corpus_text")
    if not any(texts):
        raise ValueError("cannot train on an empty corpus")
    alphabet = sorted({ch for t in texts for ch in t})
    if vocab_size < len(alphabet):
        raise ValueError(f"vocab_size {vocab_size} is smaller than the corpus alphabet ({len(alphabet)} symbols)")
    reserved = set(special_tokens) | (set(_BYTE_TOKENS) if byte_fallback else set())

    word_freq = Counter(w for t in texts for w in _PIECES.findall(t) if not w.isspace())
    words = [tuple(w) for w in word_freq]
    freqs = [word_freq[w] for w in word_freq]

    pair_counts: Counter[tuple[str, str]] = Counter()
    where: defaultdict[tuple[str, str], set[int]] = defaultdict(set)
    for idx, sym in enumerate(words):
        for pair in _pairs(sym):
            pair_counts[pair] += freqs[idx]
            where[pair].add(idx)

    heap = [(-c, a + b, a, b) for (a, b), c in pair_counts.items()]
    heapq.heapify(heap)
    known = set(alphabet)
    merges: list[tuple[str, str]] = []
    n_merges = vocab_size - len(alphabet)

    while len(merges) < n_merges and heap:
        neg, merged, left, right = heapq.heappop(heap)
        pair = (left, right)
        count = pair_counts.get(pair, 0)
        if count <= 0:
            continue
        if -neg != count:  # stale entry
            heapq.heappush(heap, (-count, merged, left, right))
            continue
        if merged in reserved:
            pair_counts[pair] = 0
            continue
        merges.append(pair)
        known.add(merged)

        touched: Counter[tuple[str, str]] = Counter()
        for idx in list(where[pair]):
            old = words[idx]
            new = _merge_word(old, left, right, merged)
            if new == old:
                continue
            f = freqs[idx]
            for p in _pairs(old):
                pair_counts[p] -= f
                touched[p] -= f
            for p in _pairs(new):
                pair_counts[p] += f
                touched[p] += f
                where[p].add(idx)
            words[idx] = new
        del pair_counts[pair]
        where.pop(pair, None)
        for p, delta in touched.items():
            if p != pair and delta > 0 and pair_counts[p] > 0:
                heapq.heappush(heap, (-pair_counts[p], p[0] + p[1], p[0], p[1]))

    return build_model(alphabet, merges, byte_fallback, special_tokens)


# --------------------------------------------------------------------------- inference


def _segment_word(model: TokenizerModel, word: str) -> tuple[str, ...]:
    cached = model._cache.get(word)
    if cached is not None:
        return cached
    symbols = list(word)
    ranks = model._ranks
    while len(symbols) > 1:
        best = None
        best_rank = None
        for i in range(len(symbols) - 1):
            r = ranks.get((symbols[i], symbols[i + 1]))
            if r is not None and (best_rank is None or r < best_rank):
                best, best_rank = (symbols[i], symbols[i + 1]), r
        if best is None:
            break
        symbols = list(_merge_word(tuple(symbols), best[0], best[1], best[0] + best[1]))
    result = tuple(symbols)
    if len(model._cache) < 100_000:
        model._cache[word] = result
    return result


def tokenize(model: TokenizerModel, text: str) -> list[str]:
    """Token strings for ``text``; unknown characters become ``<0xNN>`` byte tokens."""
    out: list[str] = []
    for piece in _PIECES.findall(text):
        symbols = (piece,) if piece.isspace() else _segment_word(model, piece)
        for sym in symbols:
            if sym in model.vocab:
                out.append(sym)
            elif model.byte_fallback:
                out.extend(_BYTE_TOKENS[b] for b in sym.encode("utf-8"))
            else:
                raise UnrepresentableCharacterError(sym[0])
    return out


def encode(model: TokenizerModel, text: str) -> list[int]:
    vocab = model.vocab
    return [vocab[t] for t in tokenize(model, text)]


def decode(model: TokenizerModel, ids) -> str:
    buf = bytearray()
    for i in ids:
        tok = model.id_to_token(i)
        if model.byte_fallback and tok in _BYTE_IDS:
            buf.append(_BYTE_IDS[tok])
        else:
            buf.extend(tok.encode("utf-8"))
    return buf.decode("utf-8", errors="replace")


def is_space_token(token: str) -> bool:
    if token in _BYTE_IDS:
        return chr(_BYTE_IDS[token]).isspace() and _BYTE_IDS[token] < 0x80
    return token.isspace()


# --------------------------------------------------------------------------- estimator


class BPETokenizer(TransformerMixin, BaseEstimator):
    """BPE as a transformer: ``fit`` learns merges, ``transform`` maps texts to id lists.

    Parameters
    ----------
    vocab_size : int
        Alphabet size plus number of merges to learn.
    byte_fallback : bool
        Encode out-of-vocabulary characters as UTF-8 byte tokens.
    special_tokens : sequence of str, optional
        Reserved tokens placed first in the vocabulary.
    """

    def __init__(self, vocab_size=1000, byte_fallback=True, special_tokens=None):
        self.vocab_size = vocab_size
        self.byte_fallback = byte_fallback
        self.special_tokens = special_tokens

    @classmethod
    def from_model(cls, model: TokenizerModel) -> BPETokenizer:
        alphabet = sum(1 for t in model.vocab if len(t) == 1)
        est = cls(vocab_size=alphabet + len(model.merges), byte_fallback=model.byte_fallback,
                  special_tokens=list(model.special_tokens) or None)
        est.model_ = model
        return est

    def fit(self, X, y=None):
        self.model_ = train_bpe(check_texts(X), self.vocab_size, byte_fallback=self.byte_fallback,
                                special_tokens=tuple(self.special_tokens or ()))
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return [encode(self.model_, t) for t in check_texts(X)]

    def inverse_transform(self, X):
        check_is_fitted(self, "model_")
        return [decode(self.model_, ids) for ids in X]

    def tokenize(self, text: str) -> list[str]:
        check_is_fitted(self, "model_")
        return tokenize(self.model_, text)
