"""Gradient and semantics checks for the tape library.

Every primitive gets a finite-difference check through a small random graph;
the checker itself is validated for sensitivity by corrupting a gradient on
purpose.  Property tests cover broadcasting and the simplex invariants of
the softmax family.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import selectgen.autodiff as ad
from selectgen.autodiff import Parameter
from selectgen.errors import AllMaskedError, NonScalarLoss

from .oracles import ref_masked_softmax


def fd_check(params, loss_builder, tol=1e-6, step=1e-5):
    err = ad.check_gradients(loss_builder, params, step=step)
    assert err < tol, f"max relative error {err}"


def rnd(shape, seed):
    return np.random.default_rng(seed).standard_normal(shape)


# -- elementwise and reduction primitives -------------------------------------

def test_add_sub_mul_div_gradients():
    a = Parameter(rnd(5, 0), "a")
    b = Parameter(rnd(5, 1) + 3.0, "b")

    def build():
        t = ad.add(ad.mul(a, b), ad.sub(a, ad.div(a, b)))
        return ad.sum_(t)

    fd_check([a, b], build)


def test_broadcast_add_matrix_rowvector():
    m = Parameter(rnd((4, 3), 2), "m")
    v = Parameter(rnd(3, 3), "v")
    fd_check([m, v], lambda: ad.sum_(ad.tanh(ad.add(m, v))))


def test_broadcast_scalar_against_vector():
    s = Parameter(np.array(0.7), "s")
    v = Parameter(rnd(6, 4), "v")
    fd_check([s, v], lambda: ad.sum_(ad.mul(s, ad.add(v, s))))


def test_unary_chain_gradients():
    x = Parameter(rnd(7, 5) * 0.5, "x")

    def build():
        t = ad.sigmoid(ad.tanh(ad.exp(ad.mul(x, 0.3))))
        t = ad.log(ad.add(ad.abs_(t), 0.5))
        return ad.mean(t)

    fd_check([x], build)


def test_clip_gradient_masks_out_of_range():
    x = Parameter(np.array([-2.0, -0.5, 0.5, 2.0]), "x")
    with ad.Tape():
        loss = ad.sum_(ad.clip(x, -1.0, 1.0))
    g = ad.backward(loss)["x"]
    assert np.array_equal(g, np.array([0.0, 1.0, 1.0, 0.0]))


def test_max_gradient_flows_to_argmax_only():
    x = Parameter(np.array([0.1, 3.0, -1.0]), "x")
    with ad.Tape():
        loss = ad.max_(x)
    g = ad.backward(loss)["x"]
    assert np.array_equal(g, np.array([0.0, 1.0, 0.0]))


def test_matmul_all_dim_cases():
    mm = Parameter(rnd((3, 4), 6), "mm")
    mv = Parameter(rnd(4, 7), "mv")
    vm = Parameter(rnd(3, 8), "vm")

    def build():
        mat = ad.matmul(mm, Parameter(rnd((4, 2), 9), "k"))
        a = ad.matmul(mm, mv)      # matrix @ vector
        b = ad.matmul(vm, mm)      # vector @ matrix
        dot = ad.matmul(a, a)      # vector @ vector
        return ad.add(ad.sum_(mat), ad.add(ad.sum_(b), dot))

    fd_check([mm, mv, vm], build)


# -- structural primitives ----------------------------------------------------

def test_concat_slice_pick_row_gradients():
    a = Parameter(rnd(4, 10), "a")
    b = Parameter(rnd(3, 11), "b")
    m = Parameter(rnd((3, 4), 12), "m")

    def build():
        joined = ad.concat((a, b, ad.pick(a, 2)))
        sliced = ad.slice_(joined, 1, 6)
        return ad.add(ad.sum_(sliced), ad.sum_(ad.row(m, 1)))

    fd_check([a, b, m], build)


def test_stack_rows_hstack_append_columns():
    r1 = Parameter(rnd(3, 13), "r1")
    r2 = Parameter(rnd(3, 14), "r2")
    v = Parameter(rnd(2, 15), "v")

    def build():
        stacked = ad.stack_rows((r1, r2))          # (2, 3)
        wide = ad.hstack(stacked, stacked)         # (2, 6)
        full = ad.append_columns(wide, v)          # (2, 8)
        return ad.sum_(ad.tanh(full))

    fd_check([r1, r2, v], build)


def test_embedding_rows_gradient_accumulates_repeats():
    table = Parameter(rnd((5, 3), 16), "table")
    with ad.Tape():
        emb = ad.embedding_rows(table, [1, 1, 4])
        loss = ad.sum_(emb)
    g = ad.backward(loss)["table"]
    expected = np.zeros((5, 3))
    expected[1] = 2.0
    expected[4] = 1.0
    assert np.array_equal(g, expected)


def test_replace_where_pins_values_and_blocks_gradient():
    x = Parameter(np.array([0.2, 0.4, 0.6]), "x")
    keep = np.array([True, False, True])
    fill = np.array([0.0, 9.0, 0.0])
    with ad.Tape():
        out = ad.replace_where(x, keep, fill)
        loss = ad.sum_(ad.mul(out, out))
    assert out.data[1] == 9.0
    g = ad.backward(loss)["x"]
    assert g[1] == 0.0 and g[0] != 0.0 and g[2] != 0.0


# -- softmax family ------------------------------------------------------------

def test_log_softmax_gradient():
    x = Parameter(rnd(6, 17), "x")
    fd_check([x], lambda: ad.pick(ad.log_softmax(x), 2))


def test_sum_of_softmax_has_zero_gradient():
    x = Parameter(rnd(5, 18), "x")
    with ad.Tape():
        loss = ad.sum_(ad.exp(ad.log_softmax(x)))
    g = ad.backward(loss)["x"]
    assert np.max(np.abs(g)) < 1e-12


def test_masked_softmax_hand_values():
    with ad.no_tape():
        out = ad.masked_softmax(np.zeros(3), np.ones(3)).data
        assert np.allclose(out, [1 / 3] * 3, atol=1e-15)
        out = ad.masked_softmax(np.array([5.0, -2.0, 9.0]),
                                np.array([0.0, 1.0, 0.0])).data
        assert np.array_equal(out, [0.0, 1.0, 0.0])
        out = ad.masked_softmax(np.array([np.log(2.0), 0.0, 0.0]),
                                np.array([1.0, 1.0, 0.0])).data
        assert np.allclose(out, [2 / 3, 1 / 3, 0.0], atol=1e-15)


def test_masked_softmax_gradients_scores_and_mask():
    # differentiable region: soft masks are sigmoid outputs, strictly positive
    s = Parameter(rnd(5, 19), "s")
    m = Parameter(np.array([0.9, 0.3, 0.4, 1.0, 0.2]), "m")

    def build():
        alpha = ad.masked_softmax(s, m)
        return ad.pick(alpha, 3)

    fd_check([s], build)
    fd_check([m], build)


def test_masked_softmax_score_gradient_with_hard_zero_entries():
    s = Parameter(rnd(5, 30), "s")
    hard = np.array([1.0, 0.0, 1.0, 1.0, 0.0])
    fd_check([s], lambda: ad.pick(ad.masked_softmax(s, ad.constant(hard)), 2))


def test_masked_softmax_all_zero_mask_raises():
    with pytest.raises(AllMaskedError):
        with ad.no_tape():
            ad.masked_softmax(np.zeros(3), np.zeros(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10_000))
def test_masked_softmax_simplex_property(n, seed):
    rng = np.random.default_rng(seed)
    scores = rng.standard_normal(n) * 3
    mask = (rng.random(n) < 0.6).astype(np.float64)
    if not mask.any():
        mask[0] = 1.0
    with ad.no_tape():
        alpha = ad.masked_softmax(scores, mask).data
    assert np.all(alpha[mask == 0.0] == 0.0)
    assert abs(alpha.sum() - 1.0) < 1e-12
    assert np.all(alpha >= 0.0)


# -- dropout --------------------------------------------------------------------

def test_dropout_zeroes_and_rescales():
    x = Parameter(np.ones((20, 10)), "x")
    with ad.no_tape():
        out = ad.dropout(x, 0.5, np.random.default_rng(3)).data
    kept = out[out != 0.0]
    assert np.allclose(kept, 2.0)
    assert 0 < kept.size < out.size


def test_dropout_gradient_matches_kept_pattern():
    x = Parameter(rnd(12, 20), "x")
    with ad.Tape():
        out = ad.dropout(x, 0.4, np.random.default_rng(5))
        loss = ad.sum_(out)
    g = ad.backward(loss)["x"]
    zeroed = out.data == 0.0
    assert np.all(g[zeroed] == 0.0)
    assert np.allclose(g[~zeroed], 1.0 / 0.6)


# -- tape mechanics --------------------------------------------------------------

def test_no_tape_suspends_recording():
    x = Parameter(np.array([1.0, 2.0]), "x")
    with ad.Tape():
        with ad.no_tape():
            silent = ad.sum_(ad.mul(x, x))
        loss = ad.sum_(x)
    grads = ad.backward(loss)
    assert np.array_equal(grads["x"], np.ones(2))
    # the suspended computation recorded nothing, so no gradients flow
    assert dict(ad.backward(silent)) == {}


def test_non_scalar_loss_rejected():
    x = Parameter(np.ones(3), "x")
    with ad.Tape():
        t = ad.mul(x, 2.0)
    with pytest.raises(NonScalarLoss):
        ad.backward(t)


def test_gradients_only_for_dependent_parameters():
    a = Parameter(np.ones(2), "a")
    b = Parameter(np.ones(2), "b")
    with ad.Tape():
        loss = ad.sum_(a)
    grads = ad.backward(loss)
    assert "a" in grads and "b" not in grads


def test_linear_loss_gradient_is_exact():
    w = Parameter(rnd(4, 21), "w")
    x = rnd(4, 22)
    with ad.Tape():
        loss = ad.matmul(w, ad.constant(x))
    g = ad.backward(loss)["w"]
    assert np.max(np.abs(g - x)) < 1e-10


def test_sigmoid_at_zero_times_weight_derivative():
    w = Parameter(np.array(1.0), "w")
    with ad.Tape():
        loss = ad.mul(ad.sigmoid(ad.constant(0.0)), w)
    g = ad.backward(loss)["w"]
    assert abs(float(g) - 0.5) < 1e-15


def test_two_layer_network_matches_finite_differences():
    # about 50 parameters end to end
    w1 = Parameter(rnd((6, 5), 23) * 0.5, "w1")
    b1 = Parameter(rnd(6, 24) * 0.1, "b1")
    w2 = Parameter(rnd(6, 25) * 0.5, "w2")
    x = rnd(5, 26)

    def build():
        hidden = ad.tanh(ad.add(ad.matmul(w1, ad.constant(x)), b1))
        return ad.sigmoid(ad.matmul(w2, hidden))

    fd_check([w1, b1, w2], build, tol=1e-4)


def test_checker_detects_corrupted_gradient():
    w = Parameter(rnd(5, 27), "w")
    x = rnd(5, 28)
    with ad.Tape():
        loss = ad.sum_(ad.tanh(ad.mul(w, ad.constant(x))))
    analytic = dict(ad.backward(loss))
    analytic["w"] = analytic["w"] * 1.10  # 10% corruption
    numeric = ad.finite_difference_gradients(
        lambda: ad.sum_(ad.tanh(ad.mul(w, ad.constant(x)))), [w])
    assert ad.max_relative_error(analytic, numeric) > 1e-2


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 10_000))
def test_broadcast_add_property(rows, cols, seed):
    rng = np.random.default_rng(seed)
    m = Parameter(rng.standard_normal((rows, cols)), "m")
    v = Parameter(rng.standard_normal(cols), "v")
    with ad.Tape():
        loss = ad.sum_(ad.add(m, v))
    grads = ad.backward(loss)
    assert grads["m"].shape == (rows, cols)
    assert grads["v"].shape == (cols,)
    assert np.allclose(grads["v"], rows)
