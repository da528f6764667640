"""The measurement battery run against a trained checkpoint.

Per test example: K masks are sampled from the prior selector and decoded
greedily (diversity, oracle, and mean quality come from these); the
best-select mask is decoded with beam search for the headline quality row;
the posterior best-select mask likewise; and one fixed mask is decoded with
temperature sampling 10 times for self-BLEU.

Every random draw derives from (seed, stream, example index), so results
are identical whatever the thread count; SELECTGEN_THREADS only caps the
worker pool used to spread examples across threads.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import autodiff as ad
from ..data.vocab import Vocabulary
from ..model.generate import beam, greedy, sample
from ..model.network import Model, bernoulli_entropy, best_select, sample_mask
from ..training.config import EvalConfig
from ..training.heuristic import _selectable
from ..training.loop import PreparedExample
from ..training.objectives import sampled_elbo
from .ngram import bleu, rouge_l, rouge_n, self_bleu

REPORT_FORMAT = "selectgen-report-v1"

# derived-seed streams
_MASKS, _FIXED, _NLL = 29, 31, 37


def thread_budget() -> int:
    """Worker cap from SELECTGEN_THREADS (default 1, floor 1)."""
    raw = os.environ.get("SELECTGEN_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass
class ExampleResult:
    """Everything measured on one test example."""

    reference: list[str]
    pri_text: list[str]
    post_text: list[str]
    sampled_texts: list[list[str]]
    sampled_masks: list[str]  # visible bits as strings, for uniqueness
    fixed_samples: list[list[str]]
    entropy: float
    nll_bound: float
    posterior_agreement: float | None
    pri_mask: np.ndarray | None = field(repr=False, default=None)
    post_mask: np.ndarray | None = field(repr=False, default=None)


def _mask_string(bits: np.ndarray) -> str:
    return "".join(str(int(b)) for b in bits)


def evaluate_example(model: Model, vocab: Vocabulary, prep: PreparedExample,
                     cfg: EvalConfig, index: int,
                     stopwords: frozenset[str] | set[str] = frozenset()) -> ExampleResult:
    with ad.no_tape():
        enc = model.encode(prep.source_ids)
        prior = model.prior(enc)
        gamma = prior.visible()

        # K sampled masks, greedy decodes
        rng = np.random.default_rng((cfg.seed, _MASKS, index))
        sampled_masks, sampled_texts = [], []
        for _ in range(cfg.mask_samples):
            bits = sample_mask(gamma, rng)
            hyp = greedy(model, enc, model.full_mask(bits))
            sampled_masks.append(_mask_string(bits))
            sampled_texts.append(vocab.decode(hyp.ids))

        # headline decodes from the best-select masks, prior and posterior
        pri_bits = best_select(gamma)
        pri_hyp = beam(model, enc, model.full_mask(pri_bits), cfg.beam_width)[0]
        summary = model.encode_target(prep.target_ids)
        post = model.posterior(enc, summary)
        post_bits = best_select(post.visible())
        post_hyp = beam(model, enc, model.full_mask(post_bits), cfg.beam_width)[0]

        # fixed mask, sampled generations
        rng_fixed = np.random.default_rng((cfg.seed, _FIXED, index))
        fixed = [vocab.decode(sample(model, enc, model.full_mask(pri_bits),
                                     rng_fixed, cfg.temperature).ids)
                 for _ in range(cfg.per_mask_samples)]

        rng_nll = np.random.default_rng((cfg.seed, _NLL, index))
        bound, _, _ = sampled_elbo(model, enc, prep.target_ids, rng_nll)

        # agreement with gold counted over content positions only: field
        # labels and punctuation are trivially unselected on both sides
        agreement = None
        if prep.gold is not None and len(prep.gold) == len(post_bits):
            content = np.array([_selectable(t, stopwords)
                                for t in prep.source_tokens], dtype=bool)
            if content.any():
                agreement = float(np.mean(post_bits[content] == prep.gold[content]))

    return ExampleResult(
        reference=prep.target_tokens,
        pri_text=vocab.decode(pri_hyp.ids),
        post_text=vocab.decode(post_hyp.ids),
        sampled_texts=sampled_texts,
        sampled_masks=sampled_masks,
        fixed_samples=fixed,
        entropy=bernoulli_entropy(prior.data, prior.content),
        nll_bound=-bound,
        posterior_agreement=agreement,
        pri_mask=pri_bits,
        post_mask=post_bits,
    )


def _quality(texts: list[list[str]], reference: list[str]) -> dict:
    return {
        "rouge1": float(np.mean([rouge_n(t, reference, 1) for t in texts])),
        "rouge2": float(np.mean([rouge_n(t, reference, 2) for t in texts])),
        "rougeL": float(np.mean([rouge_l(t, reference) for t in texts])),
        "bleu4": float(np.mean([bleu(t, reference, 4) for t in texts])),
    }


def aggregate(results: list[ExampleResult]) -> dict:
    """Fold per-example results into the report metrics, in index order."""
    pri = [_quality([r.pri_text], r.reference) for r in results]
    post = [_quality([r.post_text], r.reference) for r in results]
    uniq_masks, uniq_texts, effects, selfb = [], [], [], []
    mean_scores, oracle_scores = [], []
    for r in results:
        k = len(r.sampled_masks)
        n_masks = len(set(r.sampled_masks))
        n_texts = len(set(tuple(t) for t in r.sampled_texts))
        uniq_masks.append(n_masks / k)
        uniq_texts.append(n_texts / k)
        effects.append(min(1.0, n_texts / n_masks))
        selfb.append(self_bleu(r.fixed_samples, max_n=1))
        r1 = [rouge_n(t, r.reference, 1) for t in r.sampled_texts]
        r2 = [rouge_n(t, r.reference, 2) for t in r.sampled_texts]
        rl = [rouge_l(t, r.reference) for t in r.sampled_texts]
        b4 = [bleu(t, r.reference, 4) for t in r.sampled_texts]
        mean_scores.append({"rouge1": np.mean(r1), "rouge2": np.mean(r2),
                            "rougeL": np.mean(rl), "bleu4": np.mean(b4)})
        oracle_scores.append({"rouge1": max(r1), "rouge2": max(r2),
                              "rougeL": max(rl), "bleu4": max(b4)})

    def fold(dicts: list[dict]) -> dict:
        keys = dicts[0].keys()
        return {k: float(np.mean([d[k] for d in dicts])) for k in keys}

    agreements = [r.posterior_agreement for r in results
                  if r.posterior_agreement is not None]
    return {
        "pri": fold(pri),
        "post": fold(post),
        "sampled_mean": fold(mean_scores),
        "oracle": fold(oracle_scores),
        "diversity": {
            "unique_masks": float(np.mean(uniq_masks)),
            "unique_texts": float(np.mean(uniq_texts)),
            "effect": float(np.mean(effects)),
            "self_bleu1": float(np.mean(selfb)),
        },
        "selector_entropy": float(np.mean([r.entropy for r in results])),
        "nll_bound": float(np.mean([r.nll_bound for r in results])),
        "posterior_agreement": (float(np.mean(agreements)) if agreements else None),
    }


def run_battery(model: Model, vocab: Vocabulary, test_set: list[PreparedExample],
                cfg: EvalConfig,
                stopwords: frozenset[str] | set[str] = frozenset()) -> list[ExampleResult]:
    examples = test_set[: cfg.max_examples] if cfg.max_examples else test_set
    workers = thread_budget()
    if workers == 1:
        return [evaluate_example(model, vocab, prep, cfg, i, stopwords)
                for i, prep in enumerate(examples)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(evaluate_example, model, vocab, prep, cfg, i,
                               stopwords)
                   for i, prep in enumerate(examples)]
        return [f.result() for f in futures]  # index order regardless of finish order


def build_report(model: Model, vocab: Vocabulary, test_set: list[PreparedExample],
                 cfg: EvalConfig, checkpoint_id: str,
                 stopwords: frozenset[str] | set[str] = frozenset()) -> dict:
    results = run_battery(model, vocab, test_set, cfg, stopwords)
    report = {
        "format": REPORT_FORMAT,
        "checkpoint_id": checkpoint_id,
        "eval_config": {
            "mask_samples": cfg.mask_samples,
            "per_mask_samples": cfg.per_mask_samples,
            "beam_width": cfg.beam_width,
            "temperature": cfg.temperature,
            "seed": cfg.seed,
        },
        "n_examples": len(results),
        "metrics": aggregate(results),
        "decodes": [
            {
                "reference": " ".join(r.reference),
                "pri": " ".join(r.pri_text),
                "pri_mask": _mask_string(r.pri_mask),
                "post": " ".join(r.post_text),
                "post_mask": _mask_string(r.post_mask),
            }
            for r in results
        ],
    }
    return report


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
