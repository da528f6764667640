"""Encoder, Bernoulli selectors, and masked-attention decoder.

The source is embedded and run through a single-layer bidirectional LSTM.
A prior network maps each encoder state to an independent selection
probability; a posterior network sees the encoder state concatenated with a
summary of the target and produces refined probabilities.  The decoder is an
LSTM whose bilinear attention is renormalized over the selected positions
only, so tokens outside the mask get exactly zero attention weight.

One structural position (an end-of-source marker) is appended to every
input.  Its selection probability is pinned to a constant just below one and
carries no gradient; it guarantees the attention denominator never vanishes
and makes the fully-unselected mask an event of probability <= 1e-7 rather
than an undefined corner.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..autodiff import Parameter, Tensor
from ..data.vocab import BOS_ID, EOS_ID, Vocabulary
from ..errors import ConfigError
from .config import ModelConfig

PARTITIONS = ("theta", "gamma", "phi")


def partition_of(name: str) -> str:
    head = name.split(".", 1)[0]
    if head not in PARTITIONS:
        raise ConfigError(f"parameter {name!r} outside the known partitions")
    return head


@dataclass
class EncodedSource:
    """Encoder output for one source, structural slot included."""

    ids: list[int]  # visible token ids, no structural marker
    states: Tensor  # (n+1, 2*hidden)
    content: np.ndarray  # bool (n+1,), False at the structural slot

    @property
    def n_visible(self) -> int:
        return len(self.ids)

    @property
    def n_positions(self) -> int:
        return len(self.content)


@dataclass
class BernoulliVector:
    """Independent selection probabilities over source positions."""

    probs: Tensor  # (n+1,), structural entries pinned
    content: np.ndarray  # bool, False at structural slots
    role: str = "prior"

    @property
    def data(self) -> np.ndarray:
        return self.probs.data

    def visible(self) -> np.ndarray:
        return self.probs.data[self.content]


@dataclass
class DecoderState:
    h: Tensor
    c: Tensor
    keys: Tensor  # (n+1, hidden) precomputed attention keys H @ W_att
    alpha: np.ndarray | None = None  # last attention weights, for inspection


def _glorot(rng: np.random.Generator, shape) -> np.ndarray:
    fan_in = shape[-1] if len(shape) > 1 else shape[0]
    fan_out = shape[0]
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def _lstm_bias(hidden: int) -> np.ndarray:
    b = np.zeros(4 * hidden)
    b[hidden : 2 * hidden] = 1.0  # forget-gate bias
    return b


class Model:
    """Seq2seq generator with an explicit selection mask."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        c = config
        V, E, H = c.vocab_size, c.embed_dim, c.hidden
        S, TE, T = c.selector_hidden, c.target_embed_dim, c.target_hidden
        spec = {
            "theta.embed": (V, E),
            "theta.enc_fwd.w": (4 * H, E + H),
            "theta.enc_fwd.b": (4 * H,),
            "theta.enc_bwd.w": (4 * H, E + H),
            "theta.enc_bwd.b": (4 * H,),
            "theta.init.w": (H, 2 * H),
            "theta.init.b": (H,),
            "theta.dec.w": (4 * H, E + H),
            "theta.dec.b": (4 * H,),
            "theta.att.w": (2 * H, H),
            "theta.comb.w": (H, 3 * H),
            "theta.comb.b": (H,),
            "theta.out.w": (V, H),
            "theta.out.b": (V,),
            "gamma.l1.w": (2 * H, S),
            "gamma.l1.b": (S,),
            "gamma.l2.w": (S,),
            "gamma.l2.b": (),
            "phi.embed": (V, TE),
            "phi.enc_fwd.w": (4 * T, TE + T),
            "phi.enc_fwd.b": (4 * T,),
            "phi.enc_bwd.w": (4 * T, TE + T),
            "phi.enc_bwd.b": (4 * T,),
            "phi.l1.w": (2 * H + 2 * T, S),
            "phi.l1.b": (S,),
            "phi.l2.w": (S,),
            "phi.l2.b": (),
        }
        self.params: dict[str, Parameter] = {}
        for name, shape in sorted(spec.items()):
            if name.endswith("enc_fwd.b") or name.endswith("enc_bwd.b"):
                hid = T if name.startswith("phi") else H
                data = _lstm_bias(hid)
            elif name.endswith(".b") or shape == ():
                data = np.zeros(shape)
            else:
                data = _glorot(rng, shape)
            self.params[name] = Parameter(data, name)

    # -- parameter partitions ------------------------------------------------

    def partition(self, *names: str) -> list[Parameter]:
        """Parameters of the given partitions ('theta', 'gamma', 'phi')."""
        for n in names:
            if n not in PARTITIONS:
                raise ConfigError(f"unknown partition {n!r}")
        return [p for k, p in self.params.items() if partition_of(k) in names]

    def set_trainable(self, *names: str) -> None:
        allowed = set(names)
        for k, p in self.params.items():
            p.needs_grad = partition_of(k) in allowed

    # -- encoding ------------------------------------------------------------

    def _bilstm(self, prefix: str, embedded: Tensor, hidden: int) -> Tensor:
        n = embedded.data.shape[0]
        w_f = self.params[f"{prefix}.enc_fwd.w"]
        b_f = self.params[f"{prefix}.enc_fwd.b"]
        w_b = self.params[f"{prefix}.enc_bwd.w"]
        b_b = self.params[f"{prefix}.enc_bwd.b"]
        zero = ad.constant(np.zeros(hidden))
        fwd, h, cc = [], zero, zero
        for i in range(n):
            h, cc = lstm_step(w_f, b_f, ad.row(embedded, i), h, cc, hidden)
            fwd.append(h)
        bwd = [None] * n
        h, cc = zero, zero
        for i in reversed(range(n)):
            h, cc = lstm_step(w_b, b_b, ad.row(embedded, i), h, cc, hidden)
            bwd[i] = h
        return ad.hstack(ad.stack_rows(fwd), ad.stack_rows(bwd))

    def encode(
        self,
        ids: list[int],
        *,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> EncodedSource:
        """Run the source (plus the structural end marker) through the encoder."""
        full = list(ids) + [EOS_ID]
        emb = ad.embedding_rows(self.params["theta.embed"], full)
        states = self._bilstm("theta", emb, self.config.hidden)
        if train and self.config.dropout > 0.0:
            states = ad.dropout(states, self.config.dropout, rng)
        content = np.ones(len(full), dtype=bool)
        content[-1] = False
        return EncodedSource(ids=list(ids), states=states, content=content)

    # -- selectors -----------------------------------------------------------

    def _selector(self, prefix: str, inputs: Tensor, content: np.ndarray) -> Tensor:
        a = ad.tanh(ad.add(ad.matmul(inputs, self.params[f"{prefix}.l1.w"]),
                           self.params[f"{prefix}.l1.b"]))
        logits = ad.add(ad.matmul(a, self.params[f"{prefix}.l2.w"]),
                        self.params[f"{prefix}.l2.b"])
        clamp = self.config.logit_clamp
        probs = ad.sigmoid(ad.clip(logits, -clamp, clamp))
        pin = np.full(len(content), self.config.structural_pin)
        return ad.replace_where(probs, content, pin)

    def prior(self, enc: EncodedSource) -> BernoulliVector:
        probs = self._selector("gamma", enc.states, enc.content)
        return BernoulliVector(probs=probs, content=enc.content, role="prior")

    def encode_target(
        self,
        target_ids: list[int],
        *,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """Summarize the target with the posterior's own bi-LSTM."""
        emb = ad.embedding_rows(self.params["phi.embed"], list(target_ids) + [EOS_ID])
        states = self._bilstm("phi", emb, self.config.target_hidden)
        if train and self.config.dropout > 0.0:
            states = ad.dropout(states, self.config.dropout, rng)
        n = states.data.shape[0]
        last_fwd = ad.slice_(ad.row(states, n - 1), 0, self.config.target_hidden)
        first_bwd = ad.slice_(ad.row(states, 0), self.config.target_hidden,
                              2 * self.config.target_hidden)
        return ad.concat((last_fwd, first_bwd))

    def posterior(self, enc: EncodedSource, target_summary: Tensor) -> BernoulliVector:
        joined = ad.append_columns(enc.states, target_summary)
        probs = self._selector("phi", joined, enc.content)
        return BernoulliVector(probs=probs, content=enc.content, role="posterior")

    # -- masked decoding -----------------------------------------------------

    def init_decoder(self, enc: EncodedSource, mask) -> DecoderState:
        """Start state from the mask-weighted mean of encoder states."""
        mask = ad.as_tensor(mask)
        pooled = ad.matmul(mask, enc.states)
        if self.config.pool_by_selected:
            denom = ad.sum_(mask)
        else:
            denom = ad.constant(float(enc.n_positions))
        pooled = ad.div(pooled, denom)
        h0 = ad.tanh(ad.add(ad.matmul(self.params["theta.init.w"], pooled),
                            self.params["theta.init.b"]))
        keys = ad.matmul(enc.states, self.params["theta.att.w"])
        c0 = ad.constant(np.zeros(self.config.hidden))
        return DecoderState(h=h0, c=c0, keys=keys)

    def decode_step(
        self,
        state: DecoderState,
        prev_id: int,
        enc: EncodedSource,
        mask,
        *,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> tuple[Tensor, DecoderState]:
        """One step: next-token log-probabilities and the updated state.

        `mask` is a hard {0,1} vector or a tensor of soft weights over the
        n+1 positions; attention is renormalized over its support.
        """
        x = ad.row(self.params["theta.embed"], prev_id)
        h, c = lstm_step(self.params["theta.dec.w"], self.params["theta.dec.b"],
                         x, state.h, state.c, self.config.hidden)
        scores = ad.matmul(state.keys, h)
        alpha = ad.masked_softmax(scores, mask)
        context = ad.matmul(alpha, enc.states)
        comb = ad.tanh(ad.add(
            ad.matmul(self.params["theta.comb.w"], ad.concat((context, h))),
            self.params["theta.comb.b"]))
        if train and self.config.dropout > 0.0:
            comb = ad.dropout(comb, self.config.dropout, rng)
        logits = ad.add(ad.matmul(self.params["theta.out.w"], comb),
                        self.params["theta.out.b"])
        log_probs = ad.log_softmax(logits)
        next_state = DecoderState(h=h, c=c, keys=state.keys, alpha=alpha.data)
        return log_probs, next_state

    def sequence_logprob(
        self,
        enc: EncodedSource,
        target_ids: list[int],
        mask,
        *,
        train: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """log p(target | source, mask), end marker included.  Always <= 0."""
        state = self.init_decoder(enc, mask)
        inputs = [BOS_ID] + list(target_ids)
        outputs = list(target_ids) + [EOS_ID]
        terms = []
        for prev, tgt in zip(inputs, outputs):
            log_probs, state = self.decode_step(state, prev, enc, mask,
                                                train=train, rng=rng)
            terms.append(ad.pick(log_probs, tgt))
        return ad.sum_(ad.concat(terms))

    # -- mask policies (plain numpy; not differentiated) ----------------------

    def full_mask(self, visible_bits: np.ndarray) -> np.ndarray:
        """Visible-token bits plus the always-on structural slot."""
        return np.append(np.asarray(visible_bits, dtype=np.float64), 1.0)


def lstm_step(w: Parameter, b: Parameter, x: Tensor, h: Tensor, c: Tensor,
              hidden: int) -> tuple[Tensor, Tensor]:
    z = ad.add(ad.matmul(w, ad.concat((x, h))), b)
    i = ad.sigmoid(ad.slice_(z, 0, hidden))
    f = ad.sigmoid(ad.slice_(z, hidden, 2 * hidden))
    g = ad.tanh(ad.slice_(z, 2 * hidden, 3 * hidden))
    o = ad.sigmoid(ad.slice_(z, 3 * hidden, 4 * hidden))
    c2 = ad.add(ad.mul(f, c), ad.mul(i, g))
    h2 = ad.mul(o, ad.tanh(c2))
    return h2, c2


def sample_mask(probs: np.ndarray, rng: np.random.Generator,
                max_retries: int = 16) -> np.ndarray:
    """Draw independent bits; resample all-zero draws, then force the argmax.

    Up to `max_retries` redraws are attempted before the highest-probability
    position (lowest index on ties) is force-selected.
    """
    p = np.asarray(probs, dtype=np.float64)
    for _ in range(1 + max_retries):
        bits = (rng.random(p.shape) < p).astype(np.float64)
        if bits.any():
            return bits
    bits = np.zeros_like(p)
    bits[int(np.argmax(p))] = 1.0
    return bits


def best_select(probs: np.ndarray) -> np.ndarray:
    """Threshold at 0.5 (strict); force the argmax if nothing clears it."""
    p = np.asarray(probs, dtype=np.float64)
    bits = (p > 0.5).astype(np.float64)
    if not bits.any():
        bits[int(np.argmax(p))] = 1.0
    return bits


def mask_log_prob(probs, bits: np.ndarray) -> Tensor:
    """log of the factorized Bernoulli mass of `bits` under `probs`."""
    t = ad.as_tensor(np.asarray(bits, dtype=np.float64))
    p = ad.as_tensor(probs)
    on = ad.mul(t, ad.log(p))
    off = ad.mul(ad.sub(1.0, t), ad.log(ad.sub(1.0, p)))
    return ad.sum_(ad.add(on, off))


def bernoulli_kl(q, p) -> Tensor:
    """KL between factorized Bernoulli vectors, summed over positions."""
    q = ad.as_tensor(q)
    p = ad.as_tensor(p)
    one_q = ad.sub(1.0, q)
    one_p = ad.sub(1.0, p)
    on = ad.mul(q, ad.sub(ad.log(q), ad.log(p)))
    off = ad.mul(one_q, ad.sub(ad.log(one_q), ad.log(one_p)))
    return ad.sum_(ad.add(on, off))


def bernoulli_entropy(probs: np.ndarray, content: np.ndarray | None = None) -> float:
    """Mean per-position entropy in nats, structural slots excluded."""
    p = np.asarray(probs, dtype=np.float64)
    if content is not None:
        p = p[np.asarray(content, dtype=bool)]
    if p.size == 0:
        return 0.0
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    h = -(p * np.log(p) + (1.0 - p) * np.log(1.0 - p))
    return float(np.mean(h))


def encode_tokens(vocab: Vocabulary, tokens: list[str]) -> list[int]:
    return vocab.encode(tokens)
