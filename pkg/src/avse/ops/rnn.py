"""Bidirectional LSTM layer with a hand-written backward pass.

Weights for each direction are packed as a single [4H, D + H] matrix:
the first D columns multiply the input, the remaining H columns multiply
the recurrent state, and the four H-row blocks hold the input, forget,
cell, and output gates in that order.  States start at zero.  The
backward direction runs the same cell on the time-reversed sequence.

The forward and backward loops are written over a leading batch axis so
that every chunk of the dual-path separator runs through one pair of
BLAS calls per step instead of one Python loop per chunk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from avse.errors import EmptySequenceError, ShapeError
from avse.ops.dense import activation


@dataclass
class LstmParams:
    """Packed weights for both directions of one bidirectional layer."""

    w_fw: np.ndarray  # [4H, D + H]
    b_fw: np.ndarray  # [4H]
    w_bw: np.ndarray  # [4H, D + H]
    b_bw: np.ndarray  # [4H]

    @property
    def hidden_size(self) -> int:
        return self.w_fw.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.w_fw.shape[1] - self.hidden_size

    def check(self) -> None:
        for name, w, b in (("forward", self.w_fw, self.b_fw), ("backward", self.w_bw, self.b_bw)):
            if w.ndim != 2 or w.shape[0] % 4 != 0:
                raise ShapeError(f"{name} weight must be [4H, D+H], got shape {w.shape}")
            if w.shape != self.w_fw.shape:
                raise ShapeError(
                    f"direction weight shapes differ: {self.w_fw.shape} vs {w.shape}"
                )
            if b.shape != (w.shape[0],):
                raise ShapeError(f"{name} bias shape {b.shape} does not match {w.shape[0]} rows")


def _dir_forward(
    x: np.ndarray, w: np.ndarray, b: np.ndarray, keep_cache: bool = True
) -> tuple[np.ndarray, dict | None]:
    """One direction over [B, T, D]; returns ([B, T, H], cache).

    With keep_cache=False the per-step gate and cell records that only
    the backward pass reads are never stored, which keeps inference at a
    small fraction of the training-path memory footprint.
    """
    nb, t, d = x.shape
    h_size = w.shape[0] // 4
    # Contiguous operands in one dtype keep every matmul on the BLAS fast
    # path; mixed-dtype or reversed-view inputs otherwise fall back to a
    # strided loop an order of magnitude slower.  The cast matches NumPy's
    # own promotion, so results are bit-identical.
    ct = np.result_type(x.dtype, w.dtype)
    x = np.ascontiguousarray(x, dtype=ct)
    b = b.astype(ct, copy=False)
    wx = np.ascontiguousarray(w[:, :d], dtype=ct)
    wh = np.ascontiguousarray(w[:, d:], dtype=ct)
    zx = x @ wx.T + b  # input contribution for every step at once
    wh_t = np.ascontiguousarray(wh.T)
    gates = np.empty((nb, t, 4 * h_size), dtype=ct) if keep_cache else None
    cells = np.empty((nb, t, h_size), dtype=ct) if keep_cache else None
    hidden = np.empty((nb, t, h_size), dtype=ct)
    h = np.zeros((nb, h_size), dtype=ct)
    c = np.zeros((nb, h_size), dtype=ct)
    z = np.empty((nb, 4 * h_size), dtype=ct)
    tmp = np.empty((nb, h_size), dtype=ct)
    hs = h_size
    for step in range(t):
        np.matmul(h, wh_t, out=z)
        z += zx[:, step]
        # One sigmoid over the whole slab; the cell quarter of the result
        # is thrown away and replaced by its tanh.
        sg = activation("sigmoid", z)
        gg = np.tanh(z[:, 2 * hs : 3 * hs])
        np.multiply(sg[:, hs : 2 * hs], c, out=c)
        np.multiply(sg[:, :hs], gg, out=tmp)
        c += tmp
        np.tanh(c, out=tmp)
        np.multiply(sg[:, 3 * hs :], tmp, out=h)
        if keep_cache:
            gates[:, step] = sg
            gates[:, step, 2 * hs : 3 * hs] = gg
            cells[:, step] = c
        hidden[:, step] = h
    if not keep_cache:
        return hidden, None
    cache = {"x": x, "w": w, "gates": gates, "cells": cells, "hidden": hidden}
    return hidden, cache


def _dir_backward(cache: dict, gh_seq: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backward through one direction; returns (gx, gw, gb)."""
    x = cache["x"]
    w = cache["w"]
    gates = cache["gates"]
    cells = cache["cells"]
    hidden = cache["hidden"]
    nb, t, d = x.shape
    hs = w.shape[0] // 4
    wh = np.ascontiguousarray(w[:, d:], dtype=x.dtype)
    wx = np.ascontiguousarray(w[:, :d], dtype=x.dtype)
    gh_seq = np.ascontiguousarray(gh_seq, dtype=x.dtype)
    dz_all = np.empty((nb, t, 4 * hs), dtype=x.dtype)
    dh = np.zeros((nb, hs), dtype=x.dtype)
    dc = np.zeros((nb, hs), dtype=x.dtype)
    for step in range(t - 1, -1, -1):
        gi = gates[:, step, :hs]
        gf = gates[:, step, hs : 2 * hs]
        gg = gates[:, step, 2 * hs : 3 * hs]
        go = gates[:, step, 3 * hs :]
        c = cells[:, step]
        c_prev = cells[:, step - 1] if step > 0 else np.zeros_like(c)
        tc = np.tanh(c)
        dh = dh + gh_seq[:, step]
        do = dh * tc
        dc = dc + dh * go * (1.0 - tc * tc)
        di = dc * gg
        dg = dc * gi
        df = dc * c_prev
        dc = dc * gf
        dz = dz_all[:, step]
        dz[:, :hs] = di * gi * (1.0 - gi)
        dz[:, hs : 2 * hs] = df * gf * (1.0 - gf)
        dz[:, 2 * hs : 3 * hs] = dg * (1.0 - gg * gg)
        dz[:, 3 * hs :] = do * go * (1.0 - go)
        dh = dz @ wh
    gx = dz_all @ wx
    h_prev = np.concatenate([np.zeros((nb, 1, hs), dtype=x.dtype), hidden[:, :-1]], axis=1)
    gwx = np.tensordot(dz_all, x, axes=([0, 1], [0, 1]))
    gwh = np.tensordot(dz_all, h_prev, axes=([0, 1], [0, 1]))
    gw = np.concatenate([gwx, gwh], axis=1)
    gb = dz_all.sum(axis=(0, 1))
    return gx, gw, gb


def bilstm_forward_batched(
    x: np.ndarray, params: LstmParams, keep_cache: bool = True
) -> tuple[np.ndarray, dict | None]:
    """Both directions over [B, T, D]; returns ([B, T, 2H], cache)."""
    if x.ndim != 3:
        raise ShapeError(f"batched BiLSTM input must be [B, T, D], got shape {x.shape}")
    if x.shape[1] < 1:
        raise EmptySequenceError("BiLSTM input must have at least one time step")
    params.check()
    if x.shape[2] != params.input_size:
        raise ShapeError(
            f"input feature size {x.shape[2]} does not match weights ({params.input_size})"
        )
    h_fw, cache_fw = _dir_forward(x, params.w_fw, params.b_fw, keep_cache)
    h_bw_rev, cache_bw = _dir_forward(x[:, ::-1], params.w_bw, params.b_bw, keep_cache)
    y = np.concatenate([h_fw, h_bw_rev[:, ::-1]], axis=2)
    if not keep_cache:
        return y, None
    return y, {"fw": cache_fw, "bw": cache_bw, "hidden_size": params.hidden_size}


def bilstm_backward_batched(
    cache: dict, gy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backward through both directions; returns (gx, gw_fw, gb_fw, gw_bw, gb_bw)."""
    hs = cache["hidden_size"]
    gx_fw, gw_fw, gb_fw = _dir_backward(cache["fw"], gy[:, :, :hs])
    gx_bw_rev, gw_bw, gb_bw = _dir_backward(cache["bw"], gy[:, ::-1, hs:])
    gx = gx_fw + gx_bw_rev[:, ::-1]
    return gx, gw_fw, gb_fw, gw_bw, gb_bw


def bilstm_layer(x: np.ndarray, params: LstmParams) -> np.ndarray:
    """Bidirectional LSTM over [T, D]; returns [T, 2H]."""
    if x.ndim != 2:
        raise ShapeError(f"BiLSTM input must be [T, D], got shape {x.shape}")
    y, _ = bilstm_forward_batched(x[None], params, keep_cache=False)
    return y[0]


def bilstm_layer_vjp(
    x: np.ndarray, params: LstmParams, gy: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Cotangents of bilstm_layer: returns (gx, gw_fw, gb_fw, gw_bw, gb_bw)."""
    if gy.shape != (x.shape[0], 2 * params.hidden_size):
        raise ShapeError(
            f"cotangent shape {gy.shape} does not match ({x.shape[0]}, {2 * params.hidden_size})"
        )
    _, cache = bilstm_forward_batched(x[None], params)
    gx, gw_fw, gb_fw, gw_bw, gb_bw = bilstm_backward_batched(cache, gy[None])
    return gx[0], gw_fw, gb_fw, gw_bw, gb_bw
