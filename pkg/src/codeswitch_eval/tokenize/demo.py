"""Two small bundled models that show the character-vs-subword contrast on Arabic.

``char_fallback`` knows every Arabic letter but has no Arabic merges, so an
Arabic word comes out one letter per token. ``arabic_merges`` adds a handful
of Arabic subword merges on top of the same alphabet.
"""

from __future__ import annotations

from importlib import resources

from .bpe import TokenizerModel, build_model

DEMO_MODELS = ("char_fallback", "arabic_merges")

_ARABIC_LETTERS = [chr(cp) for cp in range(0x0621, 0x064B)] + ["ى", "ة"]
_LATIN = [chr(cp) for cp in range(0x21, 0x7F)]
ALPHABET = sorted(set(_ARABIC_LETTERS + _LATIN + [" "]))

# Priority order matters: "اح" must outrank "ال" so that "التفاح" ends in "اح".
ARABIC_MERGES = [
    ("أ", "ن"), ("أن", "ا"),
    ("أ", "ح"),
    ("ا", "ح"),
    ("ا", "ل"), ("ال", "ت"), ("الت", "ف"),
    ("ف", "ى"), ("م", "ن"), ("ع", "ل"), ("عل", "ى"),
    ("t", "h"), ("th", "e"), ("i", "n"), ("in", "g"),
]


def char_fallback_model() -> TokenizerModel:
    return build_model(ALPHABET, [], byte_fallback=True)


def arabic_merges_model() -> TokenizerModel:
    return build_model(ALPHABET, ARABIC_MERGES, byte_fallback=True)


def demo_model_path(name: str):
    if name not in DEMO_MODELS:
        raise KeyError(f"unknown demo model {name!r}; choose from {DEMO_MODELS}")
    return resources.files("codeswitch_eval") / "data" / "tokenizers" / f"{name}.json"


def load_demo_model(name: str) -> TokenizerModel:
    return TokenizerModel.load(demo_model_path(name))
