"""Inference engine shared by the HTTP service and the CLI.

One loaded checkpoint, stateless methods, every random draw derived from the
request seed.  The service endpoints and the CLI verbs are both thin
wrappers around this class, so local and over-the-wire behavior cannot
drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import autodiff as ad
from ..data.tokenizer import detokenize, tokenize
from ..data.vocab import Vocabulary
from ..errors import AllMaskedError, LengthExceeded, ParseError
from ..model.checkpoint import load_checkpoint
from ..model.generate import beam, greedy, sample
from ..model.network import Model, best_select, sample_mask

MODES = ("greedy", "beam", "sample")

# request-seed streams
_MASK_DRAW, _DECODE = 0, 1


@dataclass
class GeneratedText:
    text: str
    score: float
    mask: list[int]


class Engine:
    def __init__(self, model: Model, vocab: Vocabulary, checkpoint_id: str,
                 meta: dict | None = None):
        self.model = model
        self.vocab = vocab
        self.checkpoint_id = checkpoint_id
        self.meta = meta or {}

    @classmethod
    def load(cls, checkpoint_path: str | Path) -> "Engine":
        model, vocab, meta, ckpt_id = load_checkpoint(checkpoint_path)
        return cls(model, vocab, ckpt_id, meta)

    # -- helpers -------------------------------------------------------------

    def _tokens(self, source: str) -> list[str]:
        tokens = tokenize(source)
        if not tokens:
            raise ParseError("source text produced no tokens")
        limit = self.model.config.max_source_len
        if len(tokens) > limit:
            raise LengthExceeded(f"source has {len(tokens)} tokens, limit {limit}")
        return tokens

    def _target_tokens(self, target: str) -> list[str]:
        tokens = tokenize(target)
        if not tokens:
            raise ParseError("target text produced no tokens")
        limit = self.model.config.max_target_len
        if len(tokens) > limit:
            raise LengthExceeded(f"target has {len(tokens)} tokens, limit {limit}")
        return tokens

    def _check_mask(self, mask: list[int], n_tokens: int) -> np.ndarray:
        if len(mask) != n_tokens:
            raise ParseError(f"mask length {len(mask)} does not match "
                             f"token count {n_tokens}")
        bits = np.asarray(mask, dtype=np.float64)
        if not np.isin(bits, (0.0, 1.0)).all():
            raise ParseError("mask entries must be 0 or 1")
        if not bits.any():
            raise AllMaskedError("mask selects no tokens")
        return bits

    # -- operations ----------------------------------------------------------

    def encode(self, source: str) -> tuple[list[str], list[float]]:
        tokens = self._tokens(source)
        with ad.no_tape():
            enc = self.model.encode(self.vocab.encode(tokens))
            gamma = self.model.prior(enc).visible()
        return tokens, [float(g) for g in gamma]

    def sample_masks(self, source: str, k: int, seed: int) -> list[list[int]]:
        if k < 1:
            raise ParseError("k must be >= 1")
        tokens = self._tokens(source)
        with ad.no_tape():
            enc = self.model.encode(self.vocab.encode(tokens))
            gamma = self.model.prior(enc).visible()
        rng = np.random.default_rng((seed, _MASK_DRAW))
        return [[int(b) for b in sample_mask(gamma, rng)] for _ in range(k)]

    def generate(self, source: str, mask: list[int] | None, mode: str,
                 samples: int, seed: int, temperature: float = 1.0,
                 beam_width: int = 5) -> list[GeneratedText]:
        if mode not in MODES:
            raise ParseError(f"mode must be one of {MODES}")
        if samples < 1:
            raise ParseError("samples must be >= 1")
        tokens = self._tokens(source)
        with ad.no_tape():
            enc = self.model.encode(self.vocab.encode(tokens))
            if mask is None:
                gamma = self.model.prior(enc).visible()
                rng_mask = np.random.default_rng((seed, _MASK_DRAW))
                bits = sample_mask(gamma, rng_mask)
            else:
                bits = self._check_mask(mask, len(tokens))
            full = self.model.full_mask(bits)
            out: list[GeneratedText] = []
            mask_list = [int(b) for b in bits]
            if mode == "greedy":
                hyp = greedy(self.model, enc, full)
                out.append(self._finish(hyp, mask_list))
            elif mode == "beam":
                width = max(beam_width, samples)
                for hyp in beam(self.model, enc, full, width)[:samples]:
                    out.append(self._finish(hyp, mask_list))
            else:
                rng = np.random.default_rng((seed, _DECODE))
                for _ in range(samples):
                    hyp = sample(self.model, enc, full, rng, temperature)
                    out.append(self._finish(hyp, mask_list))
        return out

    def posterior(self, source: str, target: str) -> tuple[list[float], list[int]]:
        tokens = self._tokens(source)
        target_tokens = self._target_tokens(target)
        with ad.no_tape():
            enc = self.model.encode(self.vocab.encode(tokens))
            summary = self.model.encode_target(self.vocab.encode(target_tokens))
            q = self.model.posterior(enc, summary).visible()
        best = best_select(q)
        return [float(v) for v in q], [int(b) for b in best]

    def _finish(self, hyp, mask_list: list[int]) -> GeneratedText:
        return GeneratedText(text=detokenize(self.vocab.decode(hyp.ids)),
                             score=float(hyp.score), mask=mask_list)
