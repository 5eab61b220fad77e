"""Central finite-difference check of reverse-mode gradients."""

from __future__ import annotations

import numpy as np


def relative_error(analytic, numeric, floor: float = 1e-6):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(f, params, eps: float = 1e-5, max_coords: int | None = None, seed: int = 0, floor: float = 1e-6) -> float:
    """Worst relative error between backprop and central differences.

    ``f`` takes no arguments and returns a scalar Tensor; it must be
    deterministic. ``params`` is an iterable of leaf tensors (or a dict of
    them). With ``max_coords`` set, that many coordinates per parameter are
    sampled instead of checking them all. The denominator of the relative
    error is floored at ``floor`` so exact zeros do not blow up.
    """
    if isinstance(params, dict):
        params = list(params.values())
    for p in params:
        p.grad = None
    f().backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, a in zip(params, analytic):
        if not p.data.flags.c_contiguous:
            raise ValueError("grad_check needs C-contiguous parameter arrays")
        flat = p.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + eps
            up = float(f().data)
            flat[i] = orig - eps
            down = float(f().data)
            flat[i] = orig
            numeric = (up - down) / (2 * eps)
            worst = max(worst, relative_error(float(a.reshape(-1)[i]), numeric, floor))
    for p in params:
        p.grad = None
    return worst
