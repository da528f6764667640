"""Network semantics against scalar reference implementations.

The reference scripts in oracles.py recompute every quantity with explicit
loops over python floats; agreement here means the vectorized, taped forward
pass implements the declared wiring.
"""

from __future__ import annotations

import numpy as np
import pytest

import selectgen.autodiff as ad
from selectgen.data.vocab import BOS_ID, EOS_ID
from selectgen.errors import ParseError
from selectgen.model import (
    best_select,
    bernoulli_entropy,
    bernoulli_kl,
    greedy,
    beam,
    sample,
    sample_mask,
)
from selectgen.model.checkpoint import load_checkpoint, save_checkpoint

from .conftest import make_tiny_model
from .oracles import (
    ref_bernoulli_entropy,
    ref_bernoulli_kl,
    ref_encode,
    ref_selector,
    ref_sequence_logprob,
)


@pytest.fixture
def instance(tiny_vocab):
    model = make_tiny_model(len(tiny_vocab), seed=3)
    src = tiny_vocab.encode(["w1", "w2", ",", "w3", "w4"])
    tgt = tiny_vocab.encode(["w2", "w4", "."])
    return model, src, tgt


# -- encoder -------------------------------------------------------------------

def test_encoder_matches_scalar_reference(instance):
    model, src, _ = instance
    with ad.no_tape():
        enc = model.encode(src)
    ref = np.array(ref_encode(model, src, EOS_ID))
    assert enc.states.data.shape == (len(src) + 1, 2 * model.config.hidden)
    assert np.max(np.abs(enc.states.data - ref)) < 1e-12


def test_encoder_is_deterministic(instance):
    model, src, _ = instance
    with ad.no_tape():
        a = model.encode(src).states.data
        b = model.encode(src).states.data
    assert np.array_equal(a, b)


def test_length_one_source(instance):
    model, _, _ = instance
    with ad.no_tape():
        enc = model.encode([5])
    assert enc.states.data.shape == (2, 2 * model.config.hidden)
    assert enc.n_visible == 1 and enc.n_positions == 2


# -- selectors -----------------------------------------------------------------

def test_prior_matches_scalar_reference(instance):
    model, src, _ = instance
    with ad.no_tape():
        enc = model.encode(src)
        probs = model.prior(enc).data
    ref = ref_selector(model, "gamma", [list(r) for r in enc.states.data],
                       list(enc.content))
    assert np.max(np.abs(probs - np.array(ref))) < 1e-12


def test_zero_weight_selector_gives_half(tiny_vocab):
    model = make_tiny_model(len(tiny_vocab), seed=1)
    for name in ("gamma.l1.w", "gamma.l1.b", "gamma.l2.w", "gamma.l2.b"):
        model.params[name].data[...] = 0.0
    with ad.no_tape():
        probs = model.prior(model.encode([4, 5, 6])).data
    assert np.allclose(probs[:-1], 0.5)


def test_logit_clamp_caps_gamma(tiny_vocab):
    model = make_tiny_model(len(tiny_vocab), seed=1)
    model.params["gamma.l2.b"].data[...] = 40.0  # raw logit far past the clamp
    with ad.no_tape():
        probs = model.prior(model.encode([4, 5])).data
    visible = probs[:-1]
    assert np.all(visible <= 1.0 - 1e-7)
    sig16 = 1.0 / (1.0 + np.exp(-model.config.logit_clamp))
    assert np.allclose(visible, sig16)


def test_structural_slot_is_pinned(instance):
    model, src, tgt = instance
    with ad.no_tape():
        enc = model.encode(src)
        prior = model.prior(enc)
        post = model.posterior(enc, model.encode_target(tgt))
    pin = model.config.structural_pin
    assert prior.data[-1] == pin and post.data[-1] == pin
    assert not prior.content[-1]


def test_structural_pin_receives_no_gradient(instance):
    model, src, _ = instance
    with ad.Tape():
        prior = model.prior(model.encode(src))
        loss = ad.pick(prior.probs, prior.probs.data.size - 1)
    grads = ad.backward(loss)
    for name, g in grads.items():
        assert np.all(g == 0.0), name


def test_posterior_differs_across_targets(instance):
    model, src, _ = instance
    with ad.no_tape():
        enc = model.encode(src)
        q1 = model.posterior(enc, model.encode_target([4, 5])).data
        q2 = model.posterior(enc, model.encode_target([4, 6])).data
    assert not np.allclose(q1, q2)


def test_posterior_matches_scalar_reference(instance):
    model, src, tgt = instance
    with ad.no_tape():
        enc = model.encode(src)
        summary = model.encode_target(tgt)
        probs = model.posterior(enc, summary).data
    joined = [list(r) + list(summary.data) for r in enc.states.data]
    ref = ref_selector(model, "phi", joined, list(enc.content))
    assert np.max(np.abs(probs - np.array(ref))) < 1e-12


# -- pooled initial state --------------------------------------------------------

def test_pooling_arithmetic(instance):
    model, src, _ = instance
    with ad.no_tape():
        enc = model.encode(src)
        mask = model.full_mask(np.array([1.0, 1.0, 0.0, 0.0, 0.0]))
        state = model.init_decoder(enc, mask)
    h = enc.states.data
    pooled = (h[0] + h[1] + h[-1]) / enc.n_positions
    w = model.params["theta.init.w"].data
    b = model.params["theta.init.b"].data
    assert np.max(np.abs(state.h.data - np.tanh(w @ pooled + b))) < 1e-12


# -- masked attention -----------------------------------------------------------

def test_sequence_logprob_matches_scalar_reference(instance):
    model, src, tgt = instance
    mask = model.full_mask(np.array([1.0, 0.0, 1.0, 1.0, 0.0]))
    with ad.no_tape():
        lp = float(model.sequence_logprob(model.encode(src), tgt, mask).data)
    ref = ref_sequence_logprob(model, src, tgt, list(mask), BOS_ID, EOS_ID)
    assert abs(lp - ref) < 1e-10


def test_soft_mask_logprob_matches_scalar_reference(instance):
    model, src, tgt = instance
    soft = np.array([0.9, 0.2, 0.6, 0.4, 0.8, 1.0 - 1e-7])
    with ad.no_tape():
        lp = float(model.sequence_logprob(model.encode(src), tgt,
                                          ad.constant(soft)).data)
    ref = ref_sequence_logprob(model, src, tgt, list(soft), BOS_ID, EOS_ID)
    assert abs(lp - ref) < 1e-10


def test_uniform_outputs_give_length_times_log_vocab(tiny_vocab):
    model = make_tiny_model(len(tiny_vocab), seed=2)
    model.params["theta.out.w"].data[...] = 0.0
    model.params["theta.out.b"].data[...] = 0.0
    tgt = [4, 5, 6]
    with ad.no_tape():
        enc = model.encode([7, 8])
        lp = float(model.sequence_logprob(enc, tgt, model.full_mask(
            np.ones(2))).data)
    # predicts each target token plus the end marker uniformly
    expected = -(len(tgt) + 1) * np.log(len(tiny_vocab))
    assert abs(lp - expected) < 1e-12


def test_off_mask_attention_is_exactly_zero(instance):
    model, src, tgt = instance
    bits = np.array([1.0, 0.0, 1.0, 0.0, 1.0])
    mask = model.full_mask(bits)
    with ad.no_tape():
        enc = model.encode(src)
        state = model.init_decoder(enc, mask)
        for prev in [BOS_ID] + tgt:
            _, state = model.decode_step(state, prev, enc, mask)
            assert np.all(state.alpha[mask == 0.0] == 0.0)
            assert abs(state.alpha.sum() - 1.0) <= 1e-12


def test_all_ones_mask_reproduces_plain_softmax(instance):
    model, src, tgt = instance
    mask = model.full_mask(np.ones(len(src)))
    with ad.no_tape():
        enc = model.encode(src)
        state = model.init_decoder(enc, mask)
        for prev in [BOS_ID] + tgt:
            _, state = model.decode_step(state, prev, enc, mask)
            scores = state.keys.data @ state.h.data
            plain = np.exp(scores - scores.max())
            plain /= plain.sum()
            assert np.max(np.abs(state.alpha - plain)) < 1e-12


def test_one_hot_mask_makes_context_that_state(instance):
    model, src, _ = instance
    mask = np.zeros(len(src) + 1)
    mask[2] = 1.0
    with ad.no_tape():
        enc = model.encode(src)
        state = model.init_decoder(enc, mask)
        _, state = model.decode_step(state, BOS_ID, enc, mask)
    expected = np.zeros_like(state.alpha)
    expected[2] = 1.0
    assert np.array_equal(state.alpha, expected)


def test_perturbing_off_mask_scores_changes_nothing():
    rng = np.random.default_rng(0)
    scores = rng.standard_normal(6)
    mask = np.array([1.0, 0.0, 1.0, 0.0, 0.0, 1.0])
    with ad.no_tape():
        a = ad.masked_softmax(scores, mask).data
        shifted = scores + 100.0 * (1.0 - mask)
        b = ad.masked_softmax(shifted, mask).data
    assert np.array_equal(a, b)


# -- mask policies -----------------------------------------------------------------

def test_sample_mask_near_one_probs():
    probs = np.full(8, 1.0 - 1e-7)
    bits = sample_mask(probs, np.random.default_rng(0))
    assert np.array_equal(bits, np.ones(8))


def test_sample_mask_forces_argmax_when_all_tiny():
    probs = np.full(5, 1e-7)
    probs[3] = 2e-7
    bits = sample_mask(probs, np.random.default_rng(0))
    assert bits.sum() == 1.0 and bits[3] == 1.0


def test_sample_mask_empirical_mean():
    probs = np.full(10, 0.5)
    rng = np.random.default_rng(42)
    draws = np.stack([sample_mask(probs, rng) for _ in range(100_000)])
    # conditioning on non-zero masks is invisible at p=0.5, n=10
    sigma = 0.5 / np.sqrt(draws.shape[0])
    assert np.all(np.abs(draws.mean(axis=0) - 0.5) < 3 * sigma + 2 ** -10)


def test_best_select_hand_cases():
    assert np.array_equal(best_select(np.array([0.9, 0.2, 0.6])), [1, 0, 1])
    # strict threshold, then the force-selection policy picks index 0
    assert np.array_equal(best_select(np.array([0.5, 0.5])), [1, 0])
    assert np.array_equal(best_select(np.array([0.49, 0.51])), [0, 1])


# -- distribution helpers ------------------------------------------------------------

def test_bernoulli_kl_matches_reference():
    q = np.array([0.9, 0.3, 0.5])
    p = np.array([0.5, 0.5, 0.5])
    with ad.no_tape():
        val = float(bernoulli_kl(q, p).data)
    assert abs(val - ref_bernoulli_kl(list(q), list(p))) < 1e-14
    assert abs(float(bernoulli_kl(p, p).data)) < 1e-15


def test_bernoulli_entropy_matches_reference():
    probs = np.array([0.9, 0.5, 0.2])
    content = np.array([True, True, True])
    assert abs(bernoulli_entropy(probs, content)
               - ref_bernoulli_entropy(list(probs))) < 1e-14


# -- decoding ---------------------------------------------------------------------

def test_greedy_is_deterministic(instance):
    model, src, _ = instance
    mask = model.full_mask(np.ones(len(src)))
    with ad.no_tape():
        enc = model.encode(src)
        a = greedy(model, enc, mask)
        b = greedy(model, enc, mask)
    assert a.ids == b.ids and a.score == b.score


def test_greedy_score_is_the_sequence_logprob(instance):
    model, src, _ = instance
    mask = model.full_mask(np.ones(len(src)))
    with ad.no_tape():
        enc = model.encode(src)
        hyp = greedy(model, enc, mask)
        lp = float(model.sequence_logprob(enc, hyp.ids, mask).data)
    assert abs(hyp.score - lp) < 1e-10


def test_beam_width_one_equals_greedy(instance):
    model, src, _ = instance
    mask = model.full_mask(np.ones(len(src)))
    with ad.no_tape():
        enc = model.encode(src)
        g = greedy(model, enc, mask)
        b = beam(model, enc, mask, 1)[0]
    assert g.ids == b.ids


def test_beam_scores_sorted_and_top_at_least_greedy(instance):
    model, src, _ = instance
    mask = model.full_mask(np.ones(len(src)))
    with ad.no_tape():
        enc = model.encode(src)
        hyps = beam(model, enc, mask, 4)
        g = greedy(model, enc, mask)
    scores = [h.score for h in hyps]
    assert scores == sorted(scores, reverse=True)
    assert hyps[0].score >= g.score - 1e-12


def test_low_temperature_sampling_converges_to_greedy(instance):
    model, src, _ = instance
    mask = model.full_mask(np.ones(len(src)))
    with ad.no_tape():
        enc = model.encode(src)
        g = greedy(model, enc, mask)
        s = sample(model, enc, mask, np.random.default_rng(0), temperature=1e-3)
    assert s.ids == g.ids


def test_sampling_is_seed_deterministic(instance):
    model, src, _ = instance
    mask = model.full_mask(np.ones(len(src)))
    with ad.no_tape():
        enc = model.encode(src)
        a = sample(model, enc, mask, np.random.default_rng(9))
        b = sample(model, enc, mask, np.random.default_rng(9))
    assert a.ids == b.ids


# -- checkpointing -----------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path, tiny_vocab, instance):
    model, src, tgt = instance
    path = tmp_path / "ckpt.json"
    cid = save_checkpoint(path, model, tiny_vocab, {"note": "round-trip"})
    loaded, vocab2, meta, cid2 = load_checkpoint(path)
    assert cid == cid2
    assert meta["note"] == "round-trip"
    assert vocab2.to_dict() == tiny_vocab.to_dict()
    for name, p in model.params.items():
        assert np.array_equal(loaded.params[name].data, p.data)
    with ad.no_tape():
        a = float(model.sequence_logprob(model.encode(src), tgt,
                                         model.full_mask(np.ones(len(src)))).data)
        b = float(loaded.sequence_logprob(loaded.encode(src), tgt,
                                          loaded.full_mask(np.ones(len(src)))).data)
    assert a == b


def test_checkpoint_id_is_content_stable(tmp_path, tiny_vocab, instance):
    model, _, _ = instance
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    id1 = save_checkpoint(p1, model, tiny_vocab, {})
    id2 = save_checkpoint(p2, model, tiny_vocab, {})
    assert id1 == id2
    assert p1.read_bytes() == p2.read_bytes()


def test_corrupted_checkpoint_is_rejected(tmp_path, tiny_vocab, instance):
    import json

    model, _, _ = instance
    path = tmp_path / "ckpt.json"
    save_checkpoint(path, model, tiny_vocab, {})
    doc = json.loads(path.read_text())
    doc["meta"]["note"] = "tampered"
    path.write_text(json.dumps(doc))
    with pytest.raises(ParseError):
        load_checkpoint(path)


def test_wrong_format_is_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"format": "something-else"}')
    with pytest.raises(ParseError):
        load_checkpoint(path)
