"""Strided 1-D and 3-D convolutions with hand-written VJPs.

Forward passes gather input windows with ``sliding_window_view`` and
contract them against the kernel in one ``tensordot`` call.  Backward
passes reuse the same window view for the weight gradient and scatter
the input gradient with one strided slice-add per kernel offset, so the
loop length is the kernel size, never the signal length.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from avse.errors import InputTooShortError, ShapeError


def _check_bias(b: np.ndarray | None, c_out: int) -> None:
    if b is not None and b.shape != (c_out,):
        raise ShapeError(f"bias shape {b.shape} does not match {c_out} output channels")


def conv1d(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray | None = None,
    stride: int = 1,
    pad: int = 0,
) -> np.ndarray:
    """Cross-correlate ``x`` [C_in, T] with ``w`` [C_out, C_in, K].

    Returns [C_out, T'] with T' = floor((T + 2*pad - K) / stride) + 1.
    """
    if x.ndim != 2:
        raise ShapeError(f"conv1d input must be [C_in, T], got shape {x.shape}")
    if w.ndim != 3:
        raise ShapeError(f"conv1d weight must be [C_out, C_in, K], got shape {w.shape}")
    c_in, t = x.shape
    c_out, c_in_w, k = w.shape
    if c_in_w != c_in:
        raise ShapeError(f"weight expects {c_in_w} input channels, input has {c_in}")
    _check_bias(b, c_out)
    if pad > 0:
        x = np.pad(x, ((0, 0), (pad, pad)))
    if x.shape[1] < k:
        raise InputTooShortError(
            f"input length {t} with pad {pad} is shorter than kernel size {k}"
        )
    windows = sliding_window_view(x, k, axis=1)[:, ::stride, :]
    y = np.tensordot(w, windows, axes=([1, 2], [0, 2]))
    if b is not None:
        y = y + b[:, None]
    return y


def conv1d_vjp(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray | None,
    gy: np.ndarray,
    stride: int = 1,
    pad: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Cotangents of conv1d: returns (gx, gw, gb); gb is None when b is."""
    c_in, t = x.shape
    c_out, _, k = w.shape
    x_pad = np.pad(x, ((0, 0), (pad, pad))) if pad > 0 else x
    windows = sliding_window_view(x_pad, k, axis=1)[:, ::stride, :]
    t_out = windows.shape[1]
    if gy.shape != (c_out, t_out):
        raise ShapeError(f"cotangent shape {gy.shape} does not match output ({c_out}, {t_out})")
    gw = np.tensordot(gy, windows, axes=([1], [1]))
    gb = gy.sum(axis=1) if b is not None else None
    # contrib[i, k, t'] = sum_o gy[o, t'] * w[o, i, k]
    contrib = np.tensordot(w, gy, axes=([0], [0]))
    gx_pad = np.zeros_like(x_pad)
    span = (t_out - 1) * stride + 1
    for kk in range(k):
        gx_pad[:, kk : kk + span : stride] += contrib[:, kk, :]
    gx = gx_pad[:, pad : pad + t] if pad > 0 else gx_pad
    return gx, gw, gb


def conv_transpose1d(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray | None = None,
    stride: int = 1,
) -> np.ndarray:
    """Transposed convolution of ``x`` [C_in, T] with ``w`` [C_in, C_out, K].

    Returns [C_out, L] with L = (T - 1) * stride + K.  Adjoint of the
    matching conv1d in its input argument: for any x, y,
    <conv1d(x; w), y> == <x, conv_transpose1d(y; w-swapped)>.
    """
    if x.ndim != 2:
        raise ShapeError(f"conv_transpose1d input must be [C_in, T], got shape {x.shape}")
    if w.ndim != 3:
        raise ShapeError(
            f"conv_transpose1d weight must be [C_in, C_out, K], got shape {w.shape}"
        )
    c_in, t = x.shape
    c_in_w, c_out, k = w.shape
    if c_in_w != c_in:
        raise ShapeError(f"weight expects {c_in_w} input channels, input has {c_in}")
    if t < 1:
        raise InputTooShortError("conv_transpose1d needs at least one input step")
    _check_bias(b, c_out)
    length = (t - 1) * stride + k
    # contrib[o, k, t] = sum_i x[i, t] * w[i, o, k]
    contrib = np.tensordot(w, x, axes=([0], [0]))
    y = np.zeros((c_out, length), dtype=contrib.dtype)
    span = (t - 1) * stride + 1
    for kk in range(k):
        y[:, kk : kk + span : stride] += contrib[:, kk, :]
    if b is not None:
        y = y + b[:, None]
    return y


def conv_transpose1d_vjp(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray | None,
    gy: np.ndarray,
    stride: int = 1,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Cotangents of conv_transpose1d: returns (gx, gw, gb)."""
    c_in, t = x.shape
    _, c_out, k = w.shape
    length = (t - 1) * stride + k
    if gy.shape != (c_out, length):
        raise ShapeError(f"cotangent shape {gy.shape} does not match output ({c_out}, {length})")
    windows = sliding_window_view(gy, k, axis=1)[:, ::stride, :]  # [C_out, T, K]
    gx = np.tensordot(w, windows, axes=([1, 2], [0, 2]))
    gw = np.tensordot(x, windows, axes=([1], [1]))
    gb = gy.sum(axis=1) if b is not None else None
    return gx, gw, gb


def _as_triple(v: int | tuple[int, int, int]) -> tuple[int, int, int]:
    if isinstance(v, int):
        return (v, v, v)
    return tuple(v)  # type: ignore[return-value]


def conv3d(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray | None = None,
    stride: int | tuple[int, int, int] = 1,
    pad: int | tuple[int, int, int] = 0,
) -> np.ndarray:
    """Cross-correlate ``x`` [C_in, F, H, W] with ``w`` [C_out, C_in, KF, KH, KW].

    ``stride`` and ``pad`` apply per spatial axis (frame, height, width).
    Returns [C_out, F', H', W'] with the usual floor((D + 2p - K)/s) + 1
    extent on each axis.
    """
    if x.ndim != 4:
        raise ShapeError(f"conv3d input must be [C_in, F, H, W], got shape {x.shape}")
    if w.ndim != 5:
        raise ShapeError(
            f"conv3d weight must be [C_out, C_in, KF, KH, KW], got shape {w.shape}"
        )
    c_in = x.shape[0]
    c_out, c_in_w = w.shape[:2]
    kern = w.shape[2:]
    if c_in_w != c_in:
        raise ShapeError(f"weight expects {c_in_w} input channels, input has {c_in}")
    _check_bias(b, c_out)
    strides = _as_triple(stride)
    pads = _as_triple(pad)
    if any(p > 0 for p in pads):
        x = np.pad(x, ((0, 0),) + tuple((p, p) for p in pads))
    for axis in range(3):
        if x.shape[1 + axis] < kern[axis]:
            raise InputTooShortError(
                f"padded extent {x.shape[1 + axis]} on axis {axis} is shorter "
                f"than kernel size {kern[axis]}"
            )
    windows = sliding_window_view(x, kern, axis=(1, 2, 3))
    windows = windows[:, :: strides[0], :: strides[1], :: strides[2]]
    y = np.tensordot(w, windows, axes=([1, 2, 3, 4], [0, 4, 5, 6]))
    if b is not None:
        y = y + b[:, None, None, None]
    return y


def conv3d_vjp(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray | None,
    gy: np.ndarray,
    stride: int | tuple[int, int, int] = 1,
    pad: int | tuple[int, int, int] = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Cotangents of conv3d: returns (gx, gw, gb)."""
    c_out = w.shape[0]
    kern = w.shape[2:]
    strides = _as_triple(stride)
    pads = _as_triple(pad)
    x_pad = (
        np.pad(x, ((0, 0),) + tuple((p, p) for p in pads))
        if any(p > 0 for p in pads)
        else x
    )
    windows = sliding_window_view(x_pad, kern, axis=(1, 2, 3))
    windows = windows[:, :: strides[0], :: strides[1], :: strides[2]]
    out_shape = windows.shape[1:4]
    if gy.shape != (c_out,) + out_shape:
        raise ShapeError(
            f"cotangent shape {gy.shape} does not match output {(c_out,) + out_shape}"
        )
    gw = np.tensordot(gy, windows, axes=([1, 2, 3], [1, 2, 3]))
    gb = gy.sum(axis=(1, 2, 3)) if b is not None else None
    gy_flat = gy.reshape(c_out, -1)
    gx_pad = np.zeros_like(x_pad)
    spans = [(out_shape[a] - 1) * strides[a] + 1 for a in range(3)]
    for ka in range(kern[0]):
        for kb in range(kern[1]):
            for kc in range(kern[2]):
                g = (w[:, :, ka, kb, kc].T @ gy_flat).reshape((x.shape[0],) + out_shape)
                gx_pad[
                    :,
                    ka : ka + spans[0] : strides[0],
                    kb : kb + spans[1] : strides[1],
                    kc : kc + spans[2] : strides[2],
                ] += g
    if any(p > 0 for p in pads):
        sl = tuple(slice(p, p + x.shape[1 + a]) for a, p in enumerate(pads))
        gx = gx_pad[(slice(None),) + sl]
    else:
        gx = gx_pad
    return gx, gw, gb
