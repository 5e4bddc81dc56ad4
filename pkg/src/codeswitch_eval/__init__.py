"""Evaluation harness for code-switched Egyptian Arabic-English speech translation."""

__version__ = "0.1.0"
