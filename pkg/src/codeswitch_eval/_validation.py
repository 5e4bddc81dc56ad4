"""Input validation helpers shared by the estimators and metric functions."""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np


def check_texts(X, name: str = "X") -> list[str]:
    """Coerce an iterable of strings to a list, rejecting a bare string.

    A bare ``str`` is iterable, so passing one by mistake would silently be
    treated as a list of characters. That is almost never what the caller
    wants, hence the explicit error.
    """
    if isinstance(X, (str, bytes)):
        raise TypeError(f"{name} must be an iterable of strings, not a single {type(X).__name__}")
    if not isinstance(X, Iterable):
        raise TypeError(f"{name} must be an iterable of strings, got {type(X).__name__}")
    texts = list(X)
    for i, t in enumerate(texts):
        if not isinstance(t, str):
            raise TypeError(f"{name}[{i}] must be str, got {type(t).__name__}")
    return texts


def check_samples(samples, name: str = "samples") -> np.ndarray:
    """Return a finite 1-D float64 copy of ``samples``."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_positive(value, name: str, *, integer: bool = False):
    if integer and (isinstance(value, bool) or not isinstance(value, (int, np.integer))):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    return value
