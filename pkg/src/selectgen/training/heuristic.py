"""Distant-supervision selection labels.

Two modes: `overlap` marks source tokens whose surface form also appears in
the target; `embedding` marks, for each target token, the cosine-nearest
source token under the current source embedding table.  Stopwords and
punctuation are never marked.  A draw that ends all-zero force-selects the
first non-stopword source token so downstream losses always see a non-empty
target selection.
"""

from __future__ import annotations

import numpy as np

from ..data.vocab import Vocabulary
from ..errors import ConfigError


def _selectable(token: str, stopwords: frozenset[str] | set[str]) -> bool:
    if token in stopwords:
        return False
    # punctuation-only tokens ("," "." "?" ...) are never content
    return any(ch.isalnum() for ch in token)


def overlap_labels(source: list[str], target: list[str],
                   stopwords: frozenset[str] | set[str]) -> np.ndarray:
    target_set = set(target)
    bits = np.zeros(len(source), dtype=np.float64)
    for i, tok in enumerate(source):
        if tok in target_set and _selectable(tok, stopwords):
            bits[i] = 1.0
    return _force_nonzero(bits, source, stopwords)


def embedding_labels(source: list[str], target: list[str],
                     stopwords: frozenset[str] | set[str],
                     vocab: Vocabulary, embed_table: np.ndarray) -> np.ndarray:
    src_ids = vocab.encode(source)
    tgt_ids = vocab.encode(target)
    candidates = [i for i, tok in enumerate(source) if _selectable(tok, stopwords)]
    bits = np.zeros(len(source), dtype=np.float64)
    if candidates:
        cand_vecs = embed_table[[src_ids[i] for i in candidates]]
        norms = np.linalg.norm(cand_vecs, axis=1)
        norms = np.where(norms < 1e-12, 1.0, norms)
        for tid in tgt_ids:
            v = embed_table[tid]
            nv = np.linalg.norm(v)
            if nv < 1e-12:
                continue
            sims = cand_vecs @ v / (norms * nv)
            bits[candidates[int(np.argmax(sims))]] = 1.0
    return _force_nonzero(bits, source, stopwords)


def heuristic_labels(source: list[str], target: list[str], mode: str,
                     stopwords: frozenset[str] | set[str],
                     vocab: Vocabulary | None = None,
                     embed_table: np.ndarray | None = None) -> np.ndarray:
    """Selection bits over the source tokens (no structural slot)."""
    if not source or not target:
        raise ConfigError("heuristic labels need non-empty source and target")
    if mode == "overlap":
        return overlap_labels(source, target, stopwords)
    if mode == "embedding":
        if vocab is None or embed_table is None:
            raise ConfigError("embedding mode needs a vocabulary and embedding table")
        return embedding_labels(source, target, stopwords, vocab, embed_table)
    raise ConfigError(f"unknown heuristic mode {mode!r}")


def _force_nonzero(bits: np.ndarray, source: list[str],
                   stopwords) -> np.ndarray:
    if bits.any():
        return bits
    for i, tok in enumerate(source):
        if _selectable(tok, stopwords):
            bits[i] = 1.0
            return bits
    bits[0] = 1.0  # degenerate all-stopword source; still select something
    return bits
