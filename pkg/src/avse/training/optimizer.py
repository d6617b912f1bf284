"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from avse.errors import ShapeError
from avse.model.params import ModelParams


@dataclass
class OptimizerState:
    """First/second moments per parameter plus the step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_optimizer(params: ModelParams, lr: float = 1e-3) -> OptimizerState:
    return OptimizerState(
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
        lr=lr,
    )


def adam_step(
    params: ModelParams, grads: ModelParams, state: OptimizerState
) -> tuple[ModelParams, OptimizerState]:
    """One update; mutates params and state in place and returns them."""
    for name, p in params.items():
        if name not in grads.tensors or grads[name].shape != p.shape:
            raise ShapeError(f"gradient for {name!r} missing or mis-shaped")
        if name not in state.m or state.m[name].shape != p.shape:
            raise ShapeError(f"optimizer moment for {name!r} missing or mis-shaped")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


def clip_global_norm(grads: ModelParams, max_norm: float) -> float:
    """Scale all gradients so their joint 2-norm is at most max_norm.

    Returns the pre-clip norm.  Keeps LSTM gradient spikes from
    destabilizing the run.
    """
    total = 0.0
    for _, g in grads.items():
        total += float((g.astype(np.float64) ** 2).sum())
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for _, g in grads.items():
            g *= scale
    return norm
