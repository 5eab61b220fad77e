import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tagtriad import nncore as nn
from tagtriad.gradsuite import TOLERANCE, op_cases


def test_softmax_uniform():
    out = nn.softmax(nn.Tensor([0.0, 0.0, 0.0]))
    assert np.allclose(out.data, [1 / 3, 1 / 3, 1 / 3], atol=0, rtol=1e-15)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 7)),
              elements=st.floats(-50, 50, allow_nan=False)))
def test_softmax_rows_are_distributions(x):
    out = nn.softmax(nn.Tensor(x), axis=-1).data
    assert (out >= 0).all()
    assert np.abs(out.sum(axis=-1) - 1).max() < 1e-9


def test_masked_softmax_zeroes_dropped_entries():
    mask = np.array([True, False, True])
    out = nn.softmax(nn.Tensor([1.0, 50.0, 2.0]), mask=mask).data
    assert out[1] == 0.0
    assert abs(out.sum() - 1) < 1e-12


def test_dropout_identity_cases():
    x = nn.Tensor(np.arange(6.0))
    assert nn.dropout(x, 0.0, seed=1, train=True) is x
    assert nn.dropout(x, 0.7, seed=1, train=False) is x


def test_inverted_dropout_preserves_expectation():
    x = nn.Tensor(np.full(200_000, 2.0))
    out = nn.dropout(x, 0.3, seed=5, train=True).data
    assert abs(out.mean() - 2.0) / 2.0 < 0.01


def test_dropout_rejects_bad_probability():
    with pytest.raises(ValueError):
        nn.dropout(nn.Tensor([1.0]), 1.0, seed=0, train=True)


def test_layer_norm_constant_vector_is_zero():
    out = nn.layer_norm(nn.Tensor(np.full((2, 5), 3.7))).data
    assert np.all(out == 0.0)


def test_cross_entropy_uniform_and_stable():
    assert math.isclose(float(nn.cross_entropy(nn.Tensor([0.0, 0.0]), 0).data), math.log(2), rel_tol=1e-15)
    big = float(nn.cross_entropy(nn.Tensor([1000.0, 0.0]), 0).data)
    assert np.isfinite(big) and big < 1e-12


def test_cross_entropy_batch_is_mean_of_rows():
    rng = np.random.default_rng(0)
    logits = rng.standard_normal((6, 4))
    labels = np.array([0, 3, 1, 1, 2, 0])
    batched = float(nn.cross_entropy(nn.Tensor(logits), labels).data)
    single = [float(nn.cross_entropy(nn.Tensor(row), y).data) for row, y in zip(logits, labels)]
    assert math.isclose(batched, np.mean(single), rel_tol=1e-13)


def test_cross_entropy_label_out_of_range():
    with pytest.raises(ValueError, match="out of range"):
        nn.cross_entropy(nn.Tensor([0.0, 1.0]), 2)


def test_shape_errors_report_both_shapes():
    with pytest.raises(nn.ShapeError, match=r"\(2, 3\).*\(4, 2\)"):
        nn.matmul(nn.Tensor(np.zeros((2, 3))), nn.Tensor(np.zeros((4, 2))))
    with pytest.raises(nn.ShapeError, match="add"):
        nn.Tensor(np.zeros(3)) + nn.Tensor(np.zeros(4))
    with pytest.raises(nn.ShapeError, match="concat"):
        nn.concat([nn.Tensor(np.zeros((2, 3))), nn.Tensor(np.zeros((3, 3)))], axis=1)


def test_grad_check_quadratic():
    x = nn.parameter(np.array(3.0))
    err = nn.grad_check(lambda: x * x, [x], eps=1e-5)
    assert err < 1e-9
    (x * x).backward()
    assert x.grad == 6.0


@pytest.mark.parametrize("name", sorted(op_cases()))
def test_op_gradients(name):
    f, params = op_cases()[name]
    assert nn.grad_check(f, params, eps=1e-6) < TOLERANCE


def test_gradient_accumulates_over_shared_use():
    x = nn.parameter(np.array([1.0, -2.0]))
    y = (x * x + x * 3.0).sum()
    y.backward()
    assert np.array_equal(x.grad, 2 * x.data + 3.0)


def test_sgd_step_example():
    w = nn.parameter(np.array([1.0]))
    w.grad = np.array([0.5])
    nn.sgd_step({"w": w}, lr=0.1)
    assert w.data[0] == pytest.approx(0.95, abs=1e-15)


def test_sgd_zero_gradient_is_noop():
    w = nn.parameter(np.array([1.5, -2.0]))
    w.grad = np.zeros(2)
    nn.sgd_step({"w": w}, lr=0.3)
    assert np.array_equal(w.data, [1.5, -2.0])


@pytest.mark.parametrize("g", [1e-6, 0.3, -7.0, 1e4])
def test_adam_first_step_is_sign_times_lr(g):
    w = nn.parameter(np.array([0.0]))
    opt = nn.Adam({"w": w}, lr=0.01)
    w.grad = np.array([g])
    opt.step()
    # bias correction makes the first step -sign(g) * lr, shrunk only by eps
    assert w.data[0] == pytest.approx(-np.sign(g) * 0.01, rel=1e-2 if abs(g) < 1e-5 else 1e-6)
    assert np.sign(w.data[0]) == -np.sign(g)


def test_optimizer_names_non_finite_parameter():
    w = nn.parameter(np.array([1.0]))
    w.grad = np.array([np.nan])
    with pytest.raises(nn.NonFiniteGradient, match="'emb'"):
        nn.Adam({"emb": w}).step()


def test_no_grad_builds_no_graph():
    x = nn.parameter(np.ones(3))
    with nn.no_grad():
        y = x * 2.0
    assert y._parents == ()


def test_float32_mode():
    with nn.default_dtype(np.float32):
        t = nn.Tensor([1.0, 2.0])
        assert t.data.dtype == np.float32
    assert nn.Tensor([1.0]).data.dtype == np.float64


def test_derive_rng_streams_are_reproducible_and_distinct():
    a = nn.derive_rng(3, "x", 1).random(4)
    assert np.array_equal(a, nn.derive_rng(3, "x", 1).random(4))
    assert not np.array_equal(a, nn.derive_rng(3, "x", 2).random(4))
    assert not np.array_equal(a, nn.derive_rng(3, "y", 1).random(4))


def test_checkpoint_round_trip_is_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    tensors = {"a": rng.standard_normal((3, 4)), "b": rng.standard_normal(5).astype(np.float32)}
    path = nn.save_checkpoint(tmp_path / "c.json", "lstm", tensors, {"k": 1}, "abc", {"note": "x"})
    ck = nn.load_checkpoint(path, expect_kind="lstm")
    assert ck["vocab_hash"] == "abc" and ck["config"] == {"k": 1}
    for k, v in tensors.items():
        assert ck["tensors"][k].dtype == v.dtype
        assert ck["tensors"][k].tobytes() == v.tobytes()


def test_checkpoint_kind_guard(tmp_path):
    path = nn.save_checkpoint(tmp_path / "c.json", "lstm", {}, {}, "h")
    with pytest.raises(nn.CheckpointError, match="expected kind"):
        nn.load_checkpoint(path, expect_kind="bert_finetuned")
    with pytest.raises(nn.CheckpointError, match="unknown checkpoint kind"):
        nn.save_checkpoint(tmp_path / "d.json", "svm", {}, {}, "h")
