"""Decoding strategies over a fixed selection mask.

All three run outside any gradient tape and are deterministic given the
model, mask, and (for sampling) the generator state.  Scores are cumulative
log-probabilities including the end-of-sequence step when it is produced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.vocab import BOS_ID, EOS_ID
from ..errors import ConfigError
from .network import EncodedSource, Model


@dataclass
class Hypothesis:
    ids: list[int]
    score: float


def greedy(model: Model, enc: EncodedSource, mask: np.ndarray,
           max_len: int | None = None) -> Hypothesis:
    max_len = max_len or model.config.max_target_len
    state = model.init_decoder(enc, mask)
    ids: list[int] = []
    score = 0.0
    prev = BOS_ID
    for _ in range(max_len + 1):
        log_probs, state = model.decode_step(state, prev, enc, mask)
        tok = int(np.argmax(log_probs.data))
        score += float(log_probs.data[tok])
        if tok == EOS_ID:
            return Hypothesis(ids=ids, score=score)
        ids.append(tok)
        prev = tok
    return Hypothesis(ids=ids, score=score)


def sample(model: Model, enc: EncodedSource, mask: np.ndarray,
           rng: np.random.Generator, temperature: float = 1.0,
           max_len: int | None = None) -> Hypothesis:
    if temperature <= 0.0:
        raise ConfigError("sampling temperature must be positive")
    max_len = max_len or model.config.max_target_len
    state = model.init_decoder(enc, mask)
    ids: list[int] = []
    score = 0.0
    prev = BOS_ID
    for _ in range(max_len + 1):
        log_probs, state = model.decode_step(state, prev, enc, mask)
        lp = log_probs.data / temperature
        lp = lp - np.max(lp)
        p = np.exp(lp)
        p /= p.sum()
        tok = int(rng.choice(len(p), p=p))
        score += float(log_probs.data[tok])  # score under the untempered model
        if tok == EOS_ID:
            return Hypothesis(ids=ids, score=score)
        ids.append(tok)
        prev = tok
    return Hypothesis(ids=ids, score=score)


def beam(model: Model, enc: EncodedSource, mask: np.ndarray, width: int = 5,
         max_len: int | None = None) -> list[Hypothesis]:
    """Level-synchronous beam search, best hypothesis first.

    Ties are broken by parent insertion order and then token id, so results
    do not depend on dict or sort instability.
    """
    if width < 1:
        raise ConfigError("beam width must be >= 1")
    max_len = max_len or model.config.max_target_len
    start = model.init_decoder(enc, mask)
    # active: (score, ids, prev_token, state)
    active = [(0.0, [], BOS_ID, start)]
    finished: list[Hypothesis] = []
    for _ in range(max_len + 1):
        if not active:
            break
        candidates = []  # (-score, parent_idx, token, score)
        stepped = []
        for idx, (score, ids, prev, state) in enumerate(active):
            log_probs, new_state = model.decode_step(state, prev, enc, mask)
            stepped.append((ids, new_state))
            for tok, lp in enumerate(log_probs.data):
                s = score + float(lp)
                candidates.append((-s, idx, tok, s))
        candidates.sort()
        next_active = []
        for neg, idx, tok, s in candidates[:width]:
            ids, state = stepped[idx]
            if tok == EOS_ID:
                finished.append(Hypothesis(ids=list(ids), score=s))
            else:
                next_active.append((s, ids + [tok], tok, state))
        active = next_active
    for score, ids, _prev, _state in active:  # ran out of length
        finished.append(Hypothesis(ids=ids, score=score))
    finished.sort(key=lambda h: -h.score)
    return finished[:width]
