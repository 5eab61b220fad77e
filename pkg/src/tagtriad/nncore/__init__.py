"""Tensor arithmetic with reverse-mode differentiation, optimizers and losses."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gradcheck import grad_check, relative_error
from .optim import SGD, Adam, NonFiniteGradient, adam_step, sgd_step
from .tensor import (
    ShapeError,
    Tensor,
    add,
    as_tensor,
    concat,
    cross_entropy,
    default_dtype,
    derive_rng,
    dropout,
    embedding,
    exp,
    gelu,
    get_default_dtype,
    getitem,
    layer_norm,
    log,
    log_softmax,
    matmul,
    mean,
    mul,
    neg,
    no_grad,
    power,
    relu,
    reshape,
    sigmoid,
    slice_,
    softmax,
    softmax_np,
    swapaxes,
    tanh,
    transpose,
    tsum,
    where,
)


def parameter(data, name=None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def init_uniform(rng, shape, scale):
    return rng.uniform(-scale, scale, size=shape).astype(get_default_dtype())


def init_normal(rng, shape, std):
    return (rng.standard_normal(shape) * std).astype(get_default_dtype())
