"""Exact quantities by enumerating every selection mask.

All functions share one convention: masks run over the n+1 model positions
(visible tokens plus the structural end slot), enumerated in binary counter
order where position i is bit i.  The all-zero mask is excluded everywhere
and the remaining probability mass is renormalized, which matches the
sampling policy (all-zero draws are rejected) and keeps every log defined.

These are oracles: they exist so that sampled estimators and bounds can be
checked against the genuinely exact answer on small instances.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..errors import EnumerationTooLarge
from ..model.network import EncodedSource, Model, mask_log_prob

MAX_ENUM_VISIBLE = 14


def _check_size(enc: EncodedSource) -> None:
    if enc.n_visible > MAX_ENUM_VISIBLE:
        raise EnumerationTooLarge(
            f"exact enumeration needs <= {MAX_ENUM_VISIBLE} source tokens, "
            f"got {enc.n_visible}")


def all_masks(n_positions: int):
    """Yield every non-zero mask as (index, bits) in counter order."""
    for k in range(1, 1 << n_positions):
        bits = np.array([(k >> i) & 1 for i in range(n_positions)],
                        dtype=np.float64)
        yield k, bits


def factorized_log_mass(probs: np.ndarray, bits: np.ndarray) -> float:
    """log of the independent-Bernoulli mass of `bits`."""
    p = np.asarray(probs, dtype=np.float64)
    b = np.asarray(bits, dtype=np.float64)
    return float(np.sum(b * np.log(p) + (1.0 - b) * np.log1p(-p)))


def log1mexp(x: float) -> float:
    """log(1 - e^x) for x < 0, stable near both ends."""
    if x >= 0.0:
        raise ValueError("log1mexp needs a negative argument")
    if x > -0.6931471805599453:  # -ln 2
        return float(np.log(-np.expm1(x)))
    return float(np.log1p(-np.exp(x)))


def logsumexp(values: np.ndarray) -> float:
    m = float(np.max(values))
    return m + float(np.log(np.sum(np.exp(values - m))))


def mask_logp_table(model: Model, enc: EncodedSource,
                    target_ids: list[int]) -> np.ndarray:
    """logp(target | source, mask) for every mask index; index 0 is NaN.

    Shape (2^(n+1),); computed with recording suspended.
    """
    _check_size(enc)
    n = enc.n_positions
    table = np.full(1 << n, np.nan)
    with ad.no_tape():
        for k, bits in all_masks(n):
            table[k] = float(model.sequence_logprob(enc, target_ids, bits).data)
    return table


def renormalized_log_masses(probs: np.ndarray) -> np.ndarray:
    """log mass of every non-zero mask, renormalized; index 0 is NaN."""
    p = np.asarray(probs, dtype=np.float64)
    n = p.size
    out = np.full(1 << n, np.nan)
    log_zero = factorized_log_mass(p, np.zeros(n))
    norm = log1mexp(log_zero)
    for k, bits in all_masks(n):
        out[k] = factorized_log_mass(p, bits) - norm
    return out


def exact_marginal(model: Model, enc: EncodedSource, target_ids: list[int],
                   prior_probs: np.ndarray,
                   logp_table: np.ndarray | None = None) -> float:
    """log sum over non-zero masks of (renormalized prior mass * likelihood)."""
    _check_size(enc)
    if logp_table is None:
        logp_table = mask_logp_table(model, enc, target_ids)
    log_prior = renormalized_log_masses(prior_probs)
    return logsumexp(log_prior[1:] + logp_table[1:])


def exact_elbo(model: Model, enc: EncodedSource, target_ids: list[int],
               posterior_probs: np.ndarray, prior_probs: np.ndarray,
               logp_table: np.ndarray | None = None) -> float:
    """Evidence bound with a factorized posterior, by full enumeration."""
    _check_size(enc)
    if logp_table is None:
        logp_table = mask_logp_table(model, enc, target_ids)
    log_q = renormalized_log_masses(posterior_probs)
    log_b = renormalized_log_masses(prior_probs)
    q = np.exp(log_q[1:])
    return float(np.sum(q * (logp_table[1:] + log_b[1:] - log_q[1:])))


def elbo_for_distribution(mask_probs: np.ndarray, prior_probs: np.ndarray,
                          logp_table: np.ndarray) -> float:
    """Evidence bound for an arbitrary distribution over non-zero masks.

    `mask_probs` has one entry per mask index (index 0 must carry no mass).
    Zero-probability masks contribute nothing.
    """
    log_b = renormalized_log_masses(prior_probs)
    total = 0.0
    for k in range(1, len(logp_table)):
        qk = mask_probs[k]
        if qk <= 0.0:
            continue
        total += qk * (logp_table[k] + log_b[k] - np.log(qk))
    return float(total)


def enumerated_posterior(model: Model, enc: EncodedSource,
                         target_ids: list[int], prior_probs: np.ndarray,
                         logp_table: np.ndarray | None = None) -> np.ndarray:
    """True p(mask | source, target) over mask indices; index 0 gets 0."""
    _check_size(enc)
    if logp_table is None:
        logp_table = mask_logp_table(model, enc, target_ids)
    log_prior = renormalized_log_masses(prior_probs)
    w = log_prior[1:] + logp_table[1:]
    w = np.exp(w - logsumexp(w))
    out = np.zeros(len(logp_table))
    out[1:] = w / w.sum()
    return out


def elbo_surrogate(posterior_probs, prior_probs, logp_table: np.ndarray) -> Tensor:
    """The exact evidence bound as a differentiable scalar.

    `posterior_probs` and `prior_probs` may be tensors (gradients flow into
    whichever is taped); the per-mask likelihoods are constants.  Used to
    obtain enumerated-exact gradients for estimator checks.
    """
    q = ad.as_tensor(posterior_probs)
    p = ad.as_tensor(prior_probs)
    n = q.data.size
    zeros = np.zeros(n)
    log_zq = ad.log(ad.sub(1.0, ad.exp(mask_log_prob(q, zeros))))
    log_zb = ad.log(ad.sub(1.0, ad.exp(mask_log_prob(p, zeros))))
    terms = []
    for k, bits in all_masks(n):
        lq = ad.sub(mask_log_prob(q, bits), log_zq)
        lb = ad.sub(mask_log_prob(p, bits), log_zb)
        inner = ad.add(ad.sub(lb, lq), float(logp_table[k]))
        terms.append(ad.mul(ad.exp(lq), inner))
    return ad.sum_(ad.stack_rows(terms))
