"""Token-level ROUGE, BLEU, and self-BLEU.

All scorers take token lists (the tokenizer's output) and return floats in
[0, 1].  BLEU uses add-one smoothing on n-gram counts for n >= 2 so short
texts do not zero out the geometric mean; unigram precision stays
unsmoothed, which keeps identical-pair scores at exactly 1.0.
"""

from __future__ import annotations

import math
from collections import Counter
from itertools import permutations


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def rouge_n(candidate: list[str], reference: list[str], n: int) -> float:
    """Clipped n-gram overlap F1."""
    cand, ref = _ngrams(candidate, n), _ngrams(reference, n)
    total_c, total_r = sum(cand.values()), sum(ref.values())
    if total_c == 0 or total_r == 0:
        return 0.0
    overlap = sum(min(c, ref[g]) for g, c in cand.items())
    return _f1(overlap / total_c, overlap / total_r)


def _lcs_len(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: list[str], reference: list[str]) -> float:
    """Longest-common-subsequence F1."""
    if not candidate or not reference:
        return 0.0
    lcs = _lcs_len(candidate, reference)
    return _f1(lcs / len(candidate), lcs / len(reference))


def rouge(candidate: list[str], reference: list[str], variant: str | int) -> float:
    if variant in ("L", "l"):
        return rouge_l(candidate, reference)
    return rouge_n(candidate, reference, int(variant))


def bleu(candidate: list[str], reference: list[str], max_n: int = 4) -> float:
    """Clipped n-gram precision geometric mean with brevity penalty."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    if not candidate:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand, ref = _ngrams(candidate, n), _ngrams(reference, n)
        total = sum(cand.values())
        matches = sum(min(c, ref[g]) for g, c in cand.items())
        if n >= 2:  # add-one smoothing for the sparse higher orders
            matches += 1
            total += 1
        if total == 0 or matches == 0:
            return 0.0
        log_sum += math.log(matches / total) / max_n
    c, r = len(candidate), len(reference)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum)


def self_bleu(samples: list[list[str]], max_n: int = 1) -> float:
    """Mean BLEU over ordered pairs; how alike a sample set is."""
    if len(samples) < 2:
        raise ValueError("self_bleu needs at least two samples")
    scores = [bleu(a, b, max_n) for a, b in permutations(samples, 2)]
    return sum(scores) / len(scores)
