"""The training loop with its two-phase schedule.

Strategies with a pretrain phase (reinforce_select, vrs) start by fitting
their selector to distant-supervision labels while the generator already
trains on sampled masks; the run switches to the joint objective once the
held-out bound stops improving for `pretrain_patience` consecutive
evaluations, or once `pretrain_fraction` of the step budget is spent,
whichever comes first.  The cap matters: on an easy corpus the bound can
keep creeping up for the whole run, and the joint objective would never
get a turn.  The other strategies run a single phase.

Determinism contract: same config and seed gives a byte-identical metrics
log.  Every random draw comes from generators seeded by (seed, stream)
pairs, batches are accumulated in a fixed order, and evaluation reuses the
same derived seed each time so bound comparisons across evaluations see the
same noise.  Wall-clock timing is printed to stderr, never written into the
log.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import autodiff as ad
from ..data.corpus import load_corpus
from ..data.grammar import GrammarSpec
from ..data.synth import Example
from ..errors import NonFiniteLoss
from ..model.checkpoint import save_checkpoint
from ..model.config import ModelConfig
from ..model.network import Model, bernoulli_entropy
from .config import RunConfig
from .heuristic import heuristic_labels
from .objectives import (
    LossBreakdown,
    bottom_up_loss,
    reinforce_loss,
    sampled_elbo,
    sampled_prior_bound,
    soft_select_loss,
    vrs_loss,
)
from .optimizer import Adam

# derived-seed streams
_INIT, _ORDER, _TRAIN, _EVAL = 11, 13, 17, 19


@dataclass
class PreparedExample:
    source_tokens: list[str]
    target_tokens: list[str]
    source_ids: list[int]
    target_ids: list[int]
    labels: np.ndarray  # distant-supervision bits over source tokens
    gold: np.ndarray | None


@dataclass
class TrainResult:
    checkpoint_path: Path
    metrics_path: Path
    checkpoint_id: str
    steps: int
    final_phase: str


def _phase_name(strategy_kind: str, pretrain: bool) -> str:
    if strategy_kind in ("bottom_up", "soft_select"):
        return "train"
    return "pretrain" if pretrain else "joint"


def prepare_examples(examples: list[Example], grammar: GrammarSpec, vocab,
                     mode: str, model: Model | None = None) -> list[PreparedExample]:
    out = []
    for ex in examples:
        labels = heuristic_labels(
            ex.source, ex.target, mode, grammar.stopwords,
            vocab=vocab,
            embed_table=None if model is None else model.params["theta.embed"].data)
        out.append(PreparedExample(
            source_tokens=ex.source,
            target_tokens=ex.target,
            source_ids=vocab.encode(ex.source),
            target_ids=vocab.encode(ex.target),
            labels=labels,
            gold=None if ex.gold_mask is None else np.asarray(ex.gold_mask, dtype=np.float64),
        ))
    return out


def _split(examples: list, fraction: float) -> tuple[list, list]:
    n_valid = max(1, int(round(len(examples) * fraction)))
    n_valid = min(n_valid, len(examples) - 1) if len(examples) > 1 else 1
    return examples[:-n_valid] or examples, examples[-n_valid:]


def _example_loss(model: Model, prep: PreparedExample, kind: str,
                  strategy, rng, pretrain: bool,
                  batch_ratio: float | None = None):
    enc = model.encode(prep.source_ids, train=True, rng=rng)
    if kind == "bottom_up":
        return bottom_up_loss(model, enc, prep.target_ids, prep.labels,
                              strategy, rng=rng, train=True)
    if kind == "soft_select":
        return soft_select_loss(model, enc, prep.target_ids, strategy,
                                rng=rng, train=True, batch_ratio=batch_ratio)
    if kind == "reinforce_select":
        return reinforce_loss(model, enc, prep.target_ids, strategy, rng,
                              labels=prep.labels, pretrain=pretrain, train=True,
                              batch_ratio=batch_ratio)
    return vrs_loss(model, enc, prep.target_ids, strategy, rng,
                    labels=prep.labels, pretrain=pretrain, train=True)


def _batch_ratio(model: Model, batch: list[int], train_set: list,
                 kind: str, pretrain: bool) -> float | None:
    """Batch mean of per-example mean selection probability.

    The ratio penalty aggregates at this level; only the strategies that
    carry that penalty need it.
    """
    if kind == "soft_select" or (kind == "reinforce_select" and not pretrain):
        from .objectives import visible_mean

        with ad.no_tape():
            means = []
            for i in batch:
                enc = model.encode(train_set[i].source_ids)
                means.append(visible_mean(model.prior(enc)))
        return float(np.mean(means))
    return None


def _trainable_partitions(kind: str) -> tuple[str, ...]:
    if kind == "vrs":
        return ("theta", "gamma", "phi")
    return ("theta", "gamma")


def _validation_stats(model: Model, valid: list[PreparedExample], kind: str,
                      eval_seed_base: tuple[int, int]) -> dict:
    """Held-out bound + selector entropy; the rng is re-derived every call."""
    rng = np.random.default_rng(eval_seed_base)
    bounds, kls, entropies = [], [], []
    with ad.no_tape():
        for prep in valid:
            enc = model.encode(prep.source_ids)
            prior = model.prior(enc)
            entropies.append(bernoulli_entropy(prior.data, prior.content))
            if kind == "vrs":
                bound, _lp, kl = sampled_elbo(model, enc, prep.target_ids, rng)
                bounds.append(bound)
                kls.append(kl)
            elif kind == "reinforce_select":
                bounds.append(sampled_prior_bound(model, enc, prep.target_ids, rng))
            else:
                hard = model.full_mask(prep.labels)
                bounds.append(float(model.sequence_logprob(
                    enc, prep.target_ids, hard).data))
    return {
        "bound": float(np.mean(bounds)),
        "kl": float(np.mean(kls)) if kls else 0.0,
        "entropy": float(np.mean(entropies)),
    }


def _log_line(fh, record: dict) -> None:
    fh.write(json.dumps(record, sort_keys=True) + "\n")
    fh.flush()


def train_run(cfg: RunConfig) -> TrainResult:
    t_start = time.monotonic()
    grammar = GrammarSpec.load(cfg.data.grammar)
    vocab = grammar.build_vocab()
    train_raw = load_corpus(cfg.data.train, max_source_len=cfg.data.max_source_len,
                            max_target_len=cfg.data.max_target_len)
    if cfg.data.valid:
        valid_raw = load_corpus(cfg.data.valid,
                                max_source_len=cfg.data.max_source_len,
                                max_target_len=cfg.data.max_target_len)
    else:
        train_raw, valid_raw = _split(train_raw, cfg.data.valid_fraction)

    seed = cfg.run.seed
    model = Model(ModelConfig(vocab_size=len(vocab), **cfg.model),
                  np.random.default_rng((seed, _INIT)))
    strategy = cfg.strategy
    kind = strategy.kind

    embed_mode = strategy.heuristic == "embedding"
    train_set = prepare_examples(train_raw, grammar, vocab, "overlap"
                                 if not embed_mode else "embedding",
                                 model=model if embed_mode else None)
    valid_set = prepare_examples(valid_raw, grammar, vocab, "overlap"
                                 if not embed_mode else "embedding",
                                 model=model if embed_mode else None)
    eval_subset = valid_set[: cfg.run.eval_examples]

    out_dir = Path(cfg.run.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / cfg.run.metrics_name
    checkpoint_path = out_dir / cfg.run.checkpoint_name

    optimizer = Adam(model.params, strategy.optimizer)
    order_rng = np.random.default_rng((seed, _ORDER))
    train_rng = np.random.default_rng((seed, _TRAIN))

    pretrain = strategy.has_pretrain_phase
    pretrain_budget = int(round(strategy.pretrain_fraction * cfg.run.steps))
    best_bound = -np.inf
    stale = 0
    order: list[int] = []
    running = {"total": 0.0, "reconstruction": 0.0, "kl": 0.0,
               "penalty": 0.0, "supervision": 0.0, "n": 0}

    model.set_trainable(*_trainable_partitions(kind))

    with metrics_path.open("w") as log:
        for step in range(1, cfg.run.steps + 1):
            # refill the shuffled index stream as needed
            while len(order) < cfg.run.batch_size:
                epoch = list(range(len(train_set)))
                order_rng.shuffle(epoch)
                order.extend(epoch)
            batch = [order.pop(0) for _ in range(cfg.run.batch_size)]

            if embed_mode:  # labels follow the current embedding table
                for i in batch:
                    ex = train_set[i]
                    ex.labels = heuristic_labels(
                        ex.source_tokens, ex.target_tokens, "embedding",
                        grammar.stopwords, vocab=vocab,
                        embed_table=model.params["theta.embed"].data)

            batch_ratio = _batch_ratio(model, batch, train_set, kind, pretrain)
            accum: dict[str, np.ndarray] = {}
            for i in batch:
                prep = train_set[i]
                with ad.Tape():
                    surrogate, bd = _example_loss(model, prep, kind, strategy,
                                                  train_rng, pretrain,
                                                  batch_ratio)
                    if not np.isfinite(bd.total):
                        _dump_divergence(out_dir, step, i, bd)
                        raise NonFiniteLoss(
                            f"non-finite loss at step {step}, example {i}; "
                            f"dump written to {out_dir / 'divergence.json'}")
                    grads = ad.backward(surrogate)
                for name, g in grads.items():
                    if name in accum:
                        accum[name] = accum[name] + g
                    else:
                        accum[name] = g
                running["total"] += bd.total
                running["reconstruction"] += bd.reconstruction
                running["kl"] += bd.kl
                running["penalty"] += bd.penalty
                running["supervision"] += bd.supervision
                running["n"] += 1
            scale = 1.0 / cfg.run.batch_size
            optimizer.step({k: v * scale for k, v in accum.items()})

            if step % cfg.run.eval_interval == 0 or step == cfg.run.steps:
                stats = _validation_stats(model, eval_subset, kind, (seed, _EVAL))
                n = max(1, running["n"])
                phase = _phase_name(kind, pretrain)
                _log_line(log, {
                    "step": step,
                    "phase": phase,
                    "total": running["total"] / n,
                    "reconstruction": running["reconstruction"] / n,
                    "kl": running["kl"] / n,
                    "penalty": running["penalty"] / n,
                    "supervision": running["supervision"] / n,
                    "valid_bound": stats["bound"],
                    "valid_kl": stats["kl"],
                    "selector_entropy": stats["entropy"],
                })
                running = dict.fromkeys(running, 0.0) | {"n": 0}
                if pretrain:
                    if stats["bound"] > best_bound + 1e-9:
                        best_bound = stats["bound"]
                        stale = 0
                    else:
                        stale += 1
                    if stale >= strategy.pretrain_patience:
                        pretrain = False
                        print(f"phase switch at step {step}: held-out bound "
                              f"stalled for {stale} evaluations",
                              file=sys.stderr)
                    elif step >= pretrain_budget:
                        pretrain = False
                        print(f"phase switch at step {step}: supervised budget "
                              f"of {pretrain_budget} steps spent",
                              file=sys.stderr)

    meta = {
        "strategy": kind,
        "seed": seed,
        "steps": cfg.run.steps,
        "final_phase": _phase_name(kind, pretrain),
        "grammar": str(cfg.data.grammar),
    }
    ckpt_id = save_checkpoint(checkpoint_path, model, vocab, meta)
    print(f"trained {cfg.run.steps} steps in {time.monotonic() - t_start:.1f}s; "
          f"checkpoint {ckpt_id[:12]} at {checkpoint_path}", file=sys.stderr)
    return TrainResult(checkpoint_path=checkpoint_path,
                       metrics_path=metrics_path,
                       checkpoint_id=ckpt_id,
                       steps=cfg.run.steps,
                       final_phase=meta["final_phase"])


def _dump_divergence(out_dir: Path, step: int, example_index: int,
                     bd: LossBreakdown) -> None:
    doc = {
        "step": step,
        "example_index": example_index,
        "total": repr(bd.total),
        "reconstruction": repr(bd.reconstruction),
        "kl": repr(bd.kl),
        "penalty": repr(bd.penalty),
        "supervision": repr(bd.supervision),
    }
    (out_dir / "divergence.json").write_text(json.dumps(doc, indent=2, sort_keys=True))
