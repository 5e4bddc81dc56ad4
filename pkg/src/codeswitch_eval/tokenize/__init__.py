from .bpe import (
    BPETokenizer,
    TokenizerModel,
    UnrepresentableCharacterError,
    build_model,
    decode,
    encode,
    tokenize,
    train_bpe,
)
from .compare import ComparisonRow, compare_tokenizers, corpus_fertility, render_comparison
from .demo import DEMO_MODELS, arabic_merges_model, char_fallback_model, demo_model_path, load_demo_model

__all__ = [
    "BPETokenizer",
    "ComparisonRow",
    "DEMO_MODELS",
    "TokenizerModel",
    "UnrepresentableCharacterError",
    "arabic_merges_model",
    "build_model",
    "char_fallback_model",
    "compare_tokenizers",
    "corpus_fertility",
    "decode",
    "demo_model_path",
    "encode",
    "load_demo_model",
    "render_comparison",
    "tokenize",
    "train_bpe",
]
