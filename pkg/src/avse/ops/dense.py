"""Pointwise, affine, and normalization operations with VJPs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from avse.errors import ConfigError, ShapeError

_ACTIVATIONS = ("relu", "sigmoid", "tanh")


def linear(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Affine map over the trailing axis: y[..., o] = sum_i x[..., i] w[o, i] + b[o]."""
    if w.ndim != 2:
        raise ShapeError(f"linear weight must be [D_out, D_in], got shape {w.shape}")
    if x.shape[-1] != w.shape[1]:
        raise ShapeError(
            f"input feature size {x.shape[-1]} does not match weight input size {w.shape[1]}"
        )
    if b is not None and b.shape != (w.shape[0],):
        raise ShapeError(f"bias shape {b.shape} does not match {w.shape[0]} output features")
    y = x @ w.T
    if b is not None:
        y = y + b
    return y


def linear_vjp(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray | None,
    gy: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Cotangents of linear: returns (gx, gw, gb)."""
    if gy.shape != x.shape[:-1] + (w.shape[0],):
        raise ShapeError(f"cotangent shape {gy.shape} does not match output")
    gx = gy @ w
    gy_flat = gy.reshape(-1, w.shape[0])
    x_flat = x.reshape(-1, w.shape[1])
    gw = gy_flat.T @ x_flat
    gb = gy_flat.sum(axis=0) if b is not None else None
    return gx, gw, gb


def activation(kind: str, x: np.ndarray) -> np.ndarray:
    """Elementwise nonlinearity; kind is one of relu, sigmoid, tanh."""
    if kind == "relu":
        return np.maximum(x, 0)
    if kind == "sigmoid":
        # Two-branch form avoids overflow in exp for large |x|; exp only
        # ever sees -|x|, so both divisions are safe everywhere and the
        # select keeps each element on its branch's exact expression.
        neg = x < 0
        ex = np.exp(np.where(neg, x, -x))
        return np.where(neg, ex / (1.0 + ex), 1.0 / (1.0 + ex))
    if kind == "tanh":
        return np.tanh(x)
    raise ConfigError(f"unknown activation {kind!r}, expected one of {_ACTIVATIONS}")


def activation_vjp(kind: str, x: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Cotangent of the input of activation(kind, x)."""
    if kind == "relu":
        return gy * (x > 0)
    if kind == "sigmoid":
        y = activation("sigmoid", x)
        return gy * y * (1.0 - y)
    if kind == "tanh":
        y = np.tanh(x)
        return gy * (1.0 - y * y)
    raise ConfigError(f"unknown activation {kind!r}, expected one of {_ACTIVATIONS}")


@dataclass
class GroupNormParams:
    """Per-channel scale and shift for group normalization."""

    gamma: np.ndarray
    beta: np.ndarray


def _group_norm_stats(
    x: np.ndarray, groups: int, eps: float
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (xhat [C, T], inv_std [groups, 1]) for a [C, T] input."""
    c, t = x.shape
    xg = x.reshape(groups, (c // groups) * t)
    mu = xg.mean(axis=1, keepdims=True)
    d = xg - mu
    var = (d * d).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (d * inv).reshape(c, t)
    return xhat, inv


def group_norm(
    x: np.ndarray,
    groups: int,
    gamma: np.ndarray,
    beta: np.ndarray,
    eps: float = 1e-5,
) -> np.ndarray:
    """Normalize [C, T] per channel group, then scale and shift per channel.

    Statistics pool over all positions of all channels in a group, so a
    single group gives layer normalization over the whole tensor.
    """
    if x.ndim != 2:
        raise ShapeError(f"group_norm input must be [C, T], got shape {x.shape}")
    c, _ = x.shape
    if groups < 1 or c % groups != 0:
        raise ConfigError(f"groups={groups} does not divide {c} channels")
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(
            f"gamma/beta shapes {gamma.shape}/{beta.shape} do not match {c} channels"
        )
    xhat, _ = _group_norm_stats(x, groups, eps)
    return gamma[:, None] * xhat + beta[:, None]


def group_norm_vjp(
    x: np.ndarray,
    groups: int,
    gamma: np.ndarray,
    beta: np.ndarray,
    gy: np.ndarray,
    eps: float = 1e-5,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cotangents of group_norm: returns (gx, ggamma, gbeta)."""
    if gy.shape != x.shape:
        raise ShapeError(f"cotangent shape {gy.shape} does not match input {x.shape}")
    c, t = x.shape
    xhat, inv = _group_norm_stats(x, groups, eps)
    ggamma = (gy * xhat).sum(axis=1)
    gbeta = gy.sum(axis=1)
    m = (c // groups) * t
    gxh = (gy * gamma[:, None]).reshape(groups, m)
    xh = xhat.reshape(groups, m)
    mean_g = gxh.mean(axis=1, keepdims=True)
    mean_gx = (gxh * xh).mean(axis=1, keepdims=True)
    gx = (inv * (gxh - mean_g - xh * mean_gx)).reshape(c, t)
    return gx, ggamma, gbeta


def _resize_positions(t_in: int, t_out: int) -> tuple[np.ndarray, np.ndarray]:
    """Source indices and interpolation weights for endpoint-aligned resize."""
    # Multiply before dividing so position t_out-1 lands exactly on t_in-1.
    idx = np.arange(t_out)
    pos = idx * (t_in - 1) / (t_out - 1)
    i0 = np.minimum(np.floor(pos).astype(np.int64), t_in - 2)
    frac = pos - i0
    return i0, frac


def resize_linear_time(x: np.ndarray, t_out: int) -> np.ndarray:
    """Resample [T_in, D] to [t_out, D] by endpoint-aligned linear interpolation.

    Output row j samples source position j * (T_in - 1) / (t_out - 1), so
    the first and last rows of the input are reproduced exactly.  A
    single-row input broadcasts to every output row.
    """
    if x.ndim != 2:
        raise ShapeError(f"resize input must be [T, D], got shape {x.shape}")
    t_in = x.shape[0]
    if t_in < 1:
        raise ShapeError("resize input must have at least one row")
    if t_out < 1:
        raise ConfigError(f"target length must be positive, got {t_out}")
    if t_in == 1 or t_out == 1:
        return np.repeat(x[:1], t_out, axis=0)
    i0, frac = _resize_positions(t_in, t_out)
    frac = frac.astype(x.dtype, copy=False)  # keep the output in the input dtype
    return (1.0 - frac)[:, None] * x[i0] + frac[:, None] * x[i0 + 1]


def resize_linear_time_vjp(x: np.ndarray, t_out: int, gy: np.ndarray) -> np.ndarray:
    """Cotangent of the input of resize_linear_time."""
    t_in = x.shape[0]
    if gy.shape != (t_out, x.shape[1]):
        raise ShapeError(f"cotangent shape {gy.shape} does not match ({t_out}, {x.shape[1]})")
    gx = np.zeros_like(x)
    if t_in == 1 or t_out == 1:
        gx[0] = gy.sum(axis=0) if t_in == 1 else gy[0]
        return gx
    i0, frac = _resize_positions(t_in, t_out)
    frac = frac.astype(x.dtype, copy=False)
    np.add.at(gx, i0, (1.0 - frac)[:, None] * gy)
    np.add.at(gx, i0 + 1, frac[:, None] * gy)
    return gx
