"""Per-example losses for the four training strategies.

Every function returns a surrogate scalar tensor plus a LossBreakdown of
plain floats.  Backpropagating the surrogate produces the correct gradients
for each parameter partition, including the score-function path for sampled
masks: the surrogate adds `log q(mask) * (-advantage)` with the advantage
detached, so its gradient is the REINFORCE estimator even though its value
is not itself the objective.  The breakdown never includes surrogate-only
terms; its `total` is the strategy's actual loss value.

The control variate is the soft-select baseline: the decoder evaluated with
the expected mask as soft attention weights.  It is computed with recording
suspended, so no gradient ever flows through it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..model.network import (
    BernoulliVector,
    EncodedSource,
    Model,
    bernoulli_kl,
    mask_log_prob,
    sample_mask,
)
from .config import StrategyConfig


@dataclass
class LossBreakdown:
    """Reported loss parts; `total` is the strategy's combination of them.

    `kl` is the raw KL value in nats.  It is a summand of `total` only when
    the objective uses it unweighted (the pretrain-phase evidence bound);
    under the mutual-information constraint the weighted |KL - target| term
    lives in `penalty` and `kl` stays informational.
    """

    total: float
    reconstruction: float = 0.0
    kl: float = 0.0
    penalty: float = 0.0
    supervision: float = 0.0
    control_variate: float = 0.0


def selector_bce(selector: BernoulliVector, labels: np.ndarray) -> Tensor:
    """Mean binary cross-entropy over the visible positions."""
    n = int(selector.content.sum())
    probs = ad.slice_(selector.probs, 0, n)
    t = ad.as_tensor(np.asarray(labels, dtype=np.float64))
    on = ad.mul(t, ad.log(probs))
    off = ad.mul(ad.sub(1.0, t), ad.log(ad.sub(1.0, probs)))
    return ad.neg(ad.mean(ad.add(on, off)))


def ratio_penalty(selector: BernoulliVector, target_ratio: float,
                  weight: float) -> Tensor:
    """weight * |mean selection probability - target|, visible tokens only."""
    n = int(selector.content.sum())
    m = ad.mean(ad.slice_(selector.probs, 0, n))
    return ad.mul(float(weight), ad.abs_(ad.sub(m, float(target_ratio))))


def visible_mean(selector: BernoulliVector) -> float:
    return float(np.mean(selector.visible()))


def _ratio_terms(selector: BernoulliVector, cfg: StrategyConfig,
                 batch_ratio: float | None) -> tuple[Tensor, float]:
    """Surrogate term and reported value for the selecting-ratio penalty.

    Standalone calls penalize this example's own mean.  Inside a batch the
    penalty applies to the batch mean of per-example means, so the caller
    passes that mean: the surrogate becomes the linearized share
    weight * sign(batch_ratio - target) * mean(probs), whose batch-averaged
    gradient is exactly the batch penalty's subgradient, and the reported
    value is the shared batch penalty.
    """
    if batch_ratio is None:
        t = ratio_penalty(selector, cfg.target_ratio, cfg.penalty_weight)
        return t, float(t.data)
    sign = float(np.sign(batch_ratio - cfg.target_ratio))
    value = cfg.penalty_weight * abs(batch_ratio - cfg.target_ratio)
    n = int(selector.content.sum())
    m = ad.mean(ad.slice_(selector.probs, 0, n))
    return ad.mul(cfg.penalty_weight * sign, m), value


def max_prob_penalty(selector: BernoulliVector, weight: float) -> Tensor:
    """weight * (1 - max probability): pushes the surest pick toward 1."""
    n = int(selector.content.sum())
    mx = ad.max_(ad.slice_(selector.probs, 0, n))
    return ad.mul(float(weight), ad.sub(1.0, mx))


def cmi_penalty(kl, target: float, weight: float) -> Tensor:
    """weight * |KL - target|: two-sided pull toward the information budget."""
    return ad.mul(float(weight), ad.abs_(ad.sub(ad.as_tensor(kl), float(target))))


def control_variate(model: Model, enc: EncodedSource, target_ids: list[int],
                    expected_mask: np.ndarray) -> float:
    """Soft-select baseline B: log-likelihood under the expected mask.

    Evaluated with recording suspended; the value is a per-step constant.
    """
    with ad.no_tape():
        lp = model.sequence_logprob(enc, target_ids, np.asarray(expected_mask))
    return float(lp.data)


def bottom_up_loss(model: Model, enc: EncodedSource, target_ids: list[int],
                   labels: np.ndarray, cfg: StrategyConfig,
                   rng: np.random.Generator | None = None,
                   train: bool = False) -> tuple[Tensor, LossBreakdown]:
    """Selector BCE toward heuristic labels + generator NLL on that hard mask."""
    prior = model.prior(enc)
    sup = selector_bce(prior, labels)
    hard = model.full_mask(labels)
    recon = ad.neg(model.sequence_logprob(enc, target_ids, hard,
                                          train=train, rng=rng))
    surrogate = ad.add(sup, recon)
    bd = LossBreakdown(
        total=float(surrogate.data),
        reconstruction=float(recon.data),
        supervision=float(sup.data),
    )
    return surrogate, bd


def soft_select_loss(model: Model, enc: EncodedSource, target_ids: list[int],
                     cfg: StrategyConfig,
                     rng: np.random.Generator | None = None,
                     train: bool = False,
                     batch_ratio: float | None = None) -> tuple[Tensor, LossBreakdown]:
    """NLL with the selection probabilities used directly as soft weights."""
    prior = model.prior(enc)
    recon = ad.neg(model.sequence_logprob(enc, target_ids, prior.probs,
                                          train=train, rng=rng))
    ratio_t, ratio_v = _ratio_terms(prior, cfg, batch_ratio)
    max_t = max_prob_penalty(prior, cfg.penalty_weight)
    surrogate = ad.add(recon, ad.add(ratio_t, max_t))
    penalty_value = ratio_v + float(max_t.data)
    bd = LossBreakdown(
        total=float(recon.data) + penalty_value,
        reconstruction=float(recon.data),
        penalty=penalty_value,
    )
    return surrogate, bd


def reinforce_loss(model: Model, enc: EncodedSource, target_ids: list[int],
                   cfg: StrategyConfig, rng: np.random.Generator,
                   labels: np.ndarray | None = None, pretrain: bool = False,
                   train: bool = False,
                   batch_ratio: float | None = None) -> tuple[Tensor, LossBreakdown]:
    """Hard-sample training of the prior selector.

    Pretrain phase: the selector learns heuristic labels by BCE while the
    generator sees masks sampled from it.  Joint phase: the selector gradient
    is the score-function estimator with the soft-select baseline, plus the
    selecting-ratio penalty.
    """
    prior = model.prior(enc)
    bits = sample_mask(prior.data, rng)
    recon = ad.neg(model.sequence_logprob(enc, target_ids, bits,
                                          train=train, rng=rng))
    if pretrain:
        if labels is None:
            raise ValueError("pretrain phase needs heuristic labels")
        sup = selector_bce(prior, labels)
        surrogate = ad.add(recon, sup)
        bd = LossBreakdown(total=float(surrogate.data),
                           reconstruction=float(recon.data),
                           supervision=float(sup.data))
        return surrogate, bd

    baseline = control_variate(model, enc, target_ids, prior.data)
    advantage = -float(recon.data) - baseline  # log p(sample) - B
    score = mask_log_prob(prior.probs, bits)
    ratio_t, ratio_v = _ratio_terms(prior, cfg, batch_ratio)
    surrogate = ad.add(ad.add(recon, ratio_t),
                       ad.mul(score, ad.constant(-advantage)))
    bd = LossBreakdown(
        total=float(recon.data) + ratio_v,
        reconstruction=float(recon.data),
        penalty=ratio_v,
        control_variate=baseline,
    )
    return surrogate, bd


def vrs_loss(model: Model, enc: EncodedSource, target_ids: list[int],
             cfg: StrategyConfig, rng: np.random.Generator,
             labels: np.ndarray | None = None, pretrain: bool = False,
             train: bool = False) -> tuple[Tensor, LossBreakdown]:
    """Variational strategy with the posterior selector.

    Pretrain phase: the posterior learns heuristic labels by BCE while the
    generator and prior follow the evidence bound built from masks the
    posterior samples (the bound's gradient reaches the posterior only
    through that supervision, matching the staged schedule).  Joint phase:
    reconstruction minus lambda * |KL - target| with the REINFORCE path into
    the posterior and the analytic KL path into both selector networks.
    """
    prior = model.prior(enc)
    summary = model.encode_target(target_ids, train=train, rng=rng)
    post = model.posterior(enc, summary)
    bits = sample_mask(post.data, rng)
    recon = ad.neg(model.sequence_logprob(enc, target_ids, bits,
                                          train=train, rng=rng))
    if pretrain:
        if labels is None:
            raise ValueError("pretrain phase needs heuristic labels")
        sup = selector_bce(post, labels)
        if cfg.supervise_prior_in_pretrain:
            sup = ad.add(sup, selector_bce(prior, labels))
        # KL with the posterior side detached: the prior chases the frozen
        # posterior, the posterior itself only follows the supervision
        kl = bernoulli_kl(ad.constant(post.probs), prior.probs)
        surrogate = ad.add(ad.add(recon, kl), sup)
        bd = LossBreakdown(total=float(surrogate.data),
                           reconstruction=float(recon.data),
                           kl=float(kl.data),
                           supervision=float(sup.data))
        return surrogate, bd

    baseline = control_variate(model, enc, target_ids, post.data)
    advantage = -float(recon.data) - baseline  # log p(sample) - B
    score = mask_log_prob(post.probs, bits)
    kl = bernoulli_kl(post.probs, prior.probs)
    pen = cmi_penalty(kl, cfg.kl_target(enc.n_visible), cfg.penalty_weight)
    surrogate = ad.add(ad.add(recon, pen),
                       ad.mul(score, ad.constant(-advantage)))
    bd = LossBreakdown(
        total=float(recon.data) + float(pen.data),
        reconstruction=float(recon.data),
        kl=float(kl.data),
        penalty=float(pen.data),
        control_variate=baseline,
    )
    return surrogate, bd


def sampled_elbo(model: Model, enc: EncodedSource, target_ids: list[int],
                 rng: np.random.Generator) -> tuple[float, float, float]:
    """One-sample evidence bound: (bound, reconstruction, kl).

    Uses a mask sampled from the posterior and the analytic KL; evaluation
    only, never recorded.
    """
    with ad.no_tape():
        prior = model.prior(enc)
        summary = model.encode_target(target_ids)
        post = model.posterior(enc, summary)
        bits = sample_mask(post.data, rng)
        lp = float(model.sequence_logprob(enc, target_ids, bits).data)
        kl = float(bernoulli_kl(post.probs, prior.probs).data)
    return lp - kl, lp, kl


def sampled_prior_bound(model: Model, enc: EncodedSource,
                        target_ids: list[int],
                        rng: np.random.Generator) -> float:
    """One-sample Jensen bound under the prior selector (evaluation only)."""
    with ad.no_tape():
        prior = model.prior(enc)
        bits = sample_mask(prior.data, rng)
        return float(model.sequence_logprob(enc, target_ids, bits).data)
