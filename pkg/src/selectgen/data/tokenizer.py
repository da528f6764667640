"""Whitespace/punctuation tokenizer for the closed synthetic lexicon."""

from __future__ import annotations

import re

_TOKEN = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Case-fold and split on whitespace, peeling punctuation into its own
    tokens: "A b." -> ["a", "b", "."]."""
    return _TOKEN.findall(text.lower())


def detokenize(tokens: list[str]) -> str:
    """Inverse of tokenize up to whitespace normalization."""
    return " ".join(tokens)
