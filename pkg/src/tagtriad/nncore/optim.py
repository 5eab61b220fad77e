"""SGD and Adam over a named parameter dictionary."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class NonFiniteGradient(FloatingPointError):
    pass


class Optimizer:
    kind = "base"

    def __init__(self, params: dict[str, Tensor], lr: float):
        self.params = dict(params)
        self.lr = lr
        self.step_count = 0

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def _checked_grads(self):
        grads = {}
        for name, p in self.params.items():
            if p.grad is None:
                continue
            if not np.all(np.isfinite(p.grad)):
                raise NonFiniteGradient(f"non-finite gradient in parameter {name!r}")
            grads[name] = p.grad
        return grads

    def step(self):
        grads = self._checked_grads()
        self.step_count += 1
        for name, g in grads.items():
            self._update(name, self.params[name], g)

    def _update(self, name, p, g):
        raise NotImplementedError


class SGD(Optimizer):
    kind = "sgd"

    def _update(self, name, p, g):
        p.data -= self.lr * g


class Adam(Optimizer):
    """Adam with bias-corrected moment estimates."""

    kind = "adam"

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__(params, lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def _update(self, name, p, g):
        m, v = self.m[name], self.v[name]
        m *= self.beta1
        m += (1 - self.beta1) * g
        v *= self.beta2
        v += (1 - self.beta2) * g * g
        mhat = m / (1 - self.beta1**self.step_count)
        vhat = v / (1 - self.beta2**self.step_count)
        p.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def sgd_step(params, lr: float):
    """One plain gradient step on every parameter that holds a gradient."""
    opt = SGD(params, lr)
    opt.step()
    return params


def adam_step(params, state: Adam):
    state.step()
    return params
