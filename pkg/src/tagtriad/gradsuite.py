"""Finite-difference gradient suites: each primitive op, a short LSTM chain, one encoder layer.

Each case reduces the op's output to a scalar through a fixed random projection,
so every output coordinate carries a distinct weight.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import nncore as nn
from .lstm import lstm_cell_step
from .transformer import EncoderConfig, attention_block, init_encoder_params

TOLERANCE = 1e-4


@dataclass(frozen=True)
class GradResult:
    name: str
    max_rel_error: float
    seconds: float

    @property
    def ok(self) -> bool:
        return self.max_rel_error < TOLERANCE


def _p(rng, *shape, lo=None):
    x = rng.standard_normal(shape)
    if lo is not None:
        # keep magnitudes away from zero (kinks, logs, powers)
        x = np.sign(x) * (np.abs(x) + lo)
    return nn.parameter(x)


def op_cases(seed: int = 0) -> dict:
    """name -> (loss closure, params)."""
    rng = np.random.default_rng(seed)
    R = np.random.default_rng(seed + 1)
    cases = {}

    def case(name, fn, *params):
        proj = nn.Tensor(R.standard_normal(fn().shape)) if fn().ndim else None
        cases[name] = ((lambda: (fn() * proj).sum()) if proj is not None else fn, list(params))

    a, b = _p(rng, 3, 4), _p(rng, 3, 4)
    row = _p(rng, 4)
    case("add", lambda: a + b, a, b)
    case("add_broadcast", lambda: a + row, a, row)
    case("mul", lambda: a * b, a, b)
    case("mul_broadcast", lambda: a * row, a, row)
    case("neg", lambda: nn.neg(a), a)
    pos = nn.parameter(np.abs(rng.standard_normal((3, 4))) + 0.5)
    case("power", lambda: nn.power(pos, 2.5), pos)
    case("exp", lambda: nn.exp(a), a)
    case("log", lambda: nn.log(pos), pos)
    case("tanh", lambda: nn.tanh(a), a)
    case("sigmoid", lambda: nn.sigmoid(a), a)
    away = _p(rng, 3, 4, lo=0.1)
    case("relu", lambda: nn.relu(away), away)
    case("gelu", lambda: nn.gelu(a), a)
    cond = rng.random((3, 4)) < 0.5
    case("where", lambda: nn.where(cond, a, b), a, b)
    t3 = _p(rng, 2, 3, 4)
    case("sum_all", lambda: nn.tsum(t3), t3)
    case("sum_axis", lambda: nn.tsum(t3, axis=1), t3)
    case("mean", lambda: nn.mean(t3, axis=-1, keepdims=True), t3)
    case("reshape", lambda: nn.reshape(t3, (6, 4)), t3)
    case("transpose", lambda: nn.transpose(t3, (2, 0, 1)), t3)
    case("swapaxes", lambda: nn.swapaxes(t3, -1, -2), t3)
    case("getitem", lambda: nn.getitem(t3, (slice(None), np.array([2, 0, 2]))), t3)
    case("slice", lambda: nn.slice_(t3, -1, 1, 3), t3)
    c1, c2 = _p(rng, 2, 3), _p(rng, 2, 5)
    case("concat", lambda: nn.concat([c1, c2], axis=1), c1, c2)
    m1, m2 = _p(rng, 3, 5), _p(rng, 5, 2)
    case("matmul", lambda: m1 @ m2, m1, m2)
    v1 = _p(rng, 5)
    case("matmul_vector", lambda: m1 @ v1, m1, v1)
    ba, bb = _p(rng, 2, 3, 4), _p(rng, 2, 4, 3)
    case("matmul_batched", lambda: ba @ bb, ba, bb)
    w2 = _p(rng, 4, 3)
    case("matmul_batched_weight", lambda: ba @ w2, ba, w2)
    emb = _p(rng, 6, 3)
    ids = np.array([[1, 4, 1], [0, 5, 2]])
    case("embedding", lambda: nn.embedding(emb, ids), emb)
    mask = np.array([[True, True, False, True]] * 3)
    case("softmax", lambda: nn.softmax(a, axis=-1), a)
    case("softmax_masked", lambda: nn.where(mask, nn.softmax(a, axis=-1, mask=mask), 0.0), a)
    case("log_softmax", lambda: nn.log_softmax(a, axis=-1), a)
    g, be = _p(rng, 4), _p(rng, 4)
    case("layer_norm", lambda: nn.layer_norm(t3, g, be), t3, g, be)
    case("dropout", lambda: nn.dropout(a, 0.3, seed=7, train=True), a)
    labels = np.array([1, 3, 0])
    case("cross_entropy", lambda: nn.cross_entropy(a, labels), a)
    return cases


def lstm_chain_case(steps: int = 5, seed: int = 0):
    rng = np.random.default_rng(seed)
    d, h = 3, 4
    W, U, b = _p(rng, d, 4 * h), _p(rng, h, 4 * h), _p(rng, 4 * h)
    xs = _p(rng, steps, 2, d)
    h0 = nn.Tensor(np.zeros((2, h)))
    proj = rng.standard_normal((2, h))

    def f():
        hs, cs = h0, h0
        for t in range(steps):
            hs, cs = lstm_cell_step(nn.getitem(xs, t), hs, cs, W, U, b)
        return (hs * proj).sum() + (cs * 0.5).sum()

    return f, [W, U, b, xs]


def encoder_layer_case(seed: int = 0):
    rng = np.random.default_rng(seed)
    cfg = EncoderConfig(vocab_size=8, layers=1, d_model=8, heads=2, d_ff=16, max_positions=8, max_len=8, dropout=0.0)
    raw = init_encoder_params(cfg, seed)
    params = {k: nn.parameter(v * 10 if k.startswith("layer0.W") else v + 0.1 * rng.standard_normal(v.shape))
              for k, v in raw.items() if k.startswith("layer0.")}
    x = _p(rng, 2, 5, cfg.d_model)
    keep = np.array([[True] * 5, [True, True, True, False, False]])
    proj = rng.standard_normal((2, 5, cfg.d_model)) * keep[..., None]

    def f():
        out = attention_block(x, keep, params, "layer0.", cfg.heads, 0.0, None, False, cfg.ln_eps)
        return (out * proj).sum()

    return f, [x] + list(params.values())


def run_suites(seed: int = 0) -> list[GradResult]:
    """Run every suite in 64-bit floats; returns one result per case."""
    results = []
    with nn.default_dtype(np.float64):
        cases = dict(op_cases(seed))
        cases["lstm_chain_5_steps"] = lstm_chain_case(5, seed)
        cases["encoder_layer"] = encoder_layer_case(seed)
        for name, (f, params) in cases.items():
            t = time.perf_counter()
            # the key bias gets an exactly-zero gradient (softmax ignores row shifts), so the
            # encoder case needs a denominator floor above central-difference roundoff
            floor = 1e-5 if name == "encoder_layer" else 1e-6
            err = nn.grad_check(f, params, eps=1e-5 if name == "encoder_layer" else 1e-6, floor=floor)
            results.append(GradResult(name, err, time.perf_counter() - t))
    return results
