"""Forward pass of the enhancement network.

Pipeline: strided 1-D encoder over the waveform; 3-D frontend plus
frame-wise residual trunk over the mouth frames; linear-in-time
alignment of the visual embeddings to the audio frame rate; 1x1 fusion
bottleneck; dual-path separator whose units run a BiLSTM within each
time chunk (local) and another across chunks (global); sigmoid mask
head; mask applied to the encoded audio; transposed-convolution decoder.

Each stage comes in a cached flavor, ``*_fwd``, returning the
intermediates the backward pass needs; the public functions discard the
cache.  Gradients live in ``avse.model.grad``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from avse.errors import EmptySequenceError, InputTooShortError, ShapeError
from avse.model.config import ModelConfig
from avse.model.params import ModelParams, _trunk_stages
from avse.ops import (
    activation,
    bilstm_layer,  # noqa: F401  (re-exported for callers composing custom paths)
    conv1d,
    conv3d,
    conv_transpose1d,
    group_norm,
    linear,
    resize_linear_time,
)
from avse.ops.rnn import LstmParams, bilstm_forward_batched


def encode_audio(wave: np.ndarray, params: ModelParams, config: ModelConfig) -> np.ndarray:
    """Waveform [T] -> non-negative feature map [N, T_a]."""
    a, _ = encode_audio_fwd(wave, params, config)
    return a


def encode_audio_fwd(wave, params, config):
    if wave.ndim != 1:
        raise ShapeError(f"waveform must be 1-D, got shape {wave.shape}")
    if wave.shape[0] < config.enc_kernel:
        raise InputTooShortError(
            f"waveform length {wave.shape[0]} is shorter than the encoder "
            f"kernel {config.enc_kernel}"
        )
    pre = conv1d(wave[None], params["enc.w"], params["enc.b"], stride=config.enc_stride)
    return activation("relu", pre), {"wave": wave, "pre": pre}


def _norm_frames(x, groups, gamma, beta):
    """Group-normalize [C, F, H, W] independently per frame.

    All frames go through one group_norm call by treating each frame's
    channel groups as distinct groups of a [F*C, H*W] matrix; the pooled
    elements per group are identical to normalizing frame by frame.
    """
    c, f, h, w = x.shape
    flat = np.ascontiguousarray(x.transpose(1, 0, 2, 3)).reshape(f * c, h * w)
    out = group_norm(flat, f * groups, np.tile(gamma, f), np.tile(beta, f))
    return np.ascontiguousarray(out.reshape(f, c, h, w).transpose(1, 0, 2, 3))


def _trunk_block_fwd(x, params, base, stride, config):
    """One residual block; downsampling blocks carry a projection shortcut."""
    s = stride
    pre1 = conv3d(x, params[f"{base}.conv1.w"], None, stride=(1, s, s), pad=(0, 1, 1))
    n1 = _norm_frames(
        pre1, config.vfn_norm_groups, params[f"{base}.gn1.gamma"], params[f"{base}.gn1.beta"]
    )
    h1 = activation("relu", n1)
    pre2 = conv3d(h1, params[f"{base}.conv2.w"], None, stride=(1, 1, 1), pad=(0, 1, 1))
    n2 = _norm_frames(
        pre2, config.vfn_norm_groups, params[f"{base}.gn2.gamma"], params[f"{base}.gn2.beta"]
    )
    if s != 1:
        pre_sc = conv3d(x, params[f"{base}.proj.w"], None, stride=(1, s, s), pad=0)
        sc = _norm_frames(
            pre_sc,
            config.vfn_norm_groups,
            params[f"{base}.proj_gn.gamma"],
            params[f"{base}.proj_gn.beta"],
        )
    else:
        pre_sc = None
        sc = x
    total = n2 + sc
    out = activation("relu", total)
    cache = {
        "x": x,
        "pre1": pre1,
        "n1": n1,
        "h1": h1,
        "pre2": pre2,
        "pre_sc": pre_sc,
        "total": total,
        "base": base,
        "stride": s,
    }
    return out, cache


def visual_forward(frames: np.ndarray, params: ModelParams, config: ModelConfig) -> np.ndarray:
    """Mouth frames [F, 1, H, W] -> one embedding row per frame [F, D_v]."""
    v, _ = visual_forward_fwd(frames, params, config)
    return v


def visual_forward_fwd(frames, params, config):
    if frames.ndim != 4 or frames.shape[1] != 1:
        raise ShapeError(f"frames must be [F, 1, H, W], got shape {frames.shape}")
    if frames.shape[0] < 1:
        raise EmptySequenceError("frame sequence is empty")
    fr = config.vfn_frontend
    x = frames[:, 0][None]  # [1, F, H, W]
    bias = params["vfn.front.b"] if "vfn.front.b" in params else None
    pre_front = conv3d(x, params["vfn.front.w"], bias, stride=fr.stride, pad=fr.pad)
    h = activation("relu", pre_front)
    blocks = []
    for i, _ in enumerate(_trunk_stages(config)):
        for j in range(config.vfn_blocks_per_stage):
            stride = 2 if j == 0 else 1
            h, cache = _trunk_block_fwd(h, params, f"vfn.trunk.s{i}.b{j}", stride, config)
            blocks.append(cache)
    pooled = h.mean(axis=(2, 3))  # [C, F]
    feats = pooled.T  # [F, C]
    v = linear(feats, params["vfn.proj.w"], params["vfn.proj.b"])
    cache = {
        "frames_x": x,
        "pre_front": pre_front,
        "blocks": blocks,
        "trunk_out_shape": h.shape,
        "feats": feats,
    }
    return v, cache


def fuse(a: np.ndarray, v: np.ndarray, params: ModelParams, config: ModelConfig) -> np.ndarray:
    """Align embeddings to [D_v, T_a], concatenate under the audio channels,
    and mix through the 1x1 bottleneck with ReLU."""
    f, _ = fuse_fwd(a, v, params, config)
    return f


def fuse_fwd(a, v, params, config):
    if a.ndim != 2 or a.shape[0] != config.enc_channels:
        raise ShapeError(f"audio features must be [{config.enc_channels}, T_a], got {a.shape}")
    if a.shape[1] < 1:
        raise ShapeError("audio feature map has no frames")
    if v.ndim != 2 or v.shape[1] != config.visual_embed:
        raise ShapeError(f"embeddings must be [F, {config.visual_embed}], got {v.shape}")
    t_a = a.shape[1]
    vr = resize_linear_time(v, t_a)  # [T_a, D_v]
    cat = np.concatenate([a, vr.T], axis=0)  # audio first, visual after
    pre = conv1d(cat, params["fusion.w"], params["fusion.b"])
    return activation("relu", pre), {"v": v, "t_a": t_a, "cat": cat, "pre": pre}


def segment_time(x: np.ndarray, chunk: int, hop: int) -> np.ndarray:
    """Slice [C, T] into overlapping chunks [Q, chunk, C], zero-padding the tail."""
    if x.ndim != 2:
        raise ShapeError(f"expected [C, T], got shape {x.shape}")
    c, t = x.shape
    if t < 1:
        raise ShapeError("cannot segment an empty time axis")
    q = 1 if t <= chunk else -(-(t - chunk) // hop) + 1
    t_pad = (q - 1) * hop + chunk
    if t_pad > t:
        x = np.pad(x, ((0, 0), (0, t_pad - t)))
    windows = sliding_window_view(x, chunk, axis=1)[:, ::hop]  # [C, Q, chunk]
    return np.ascontiguousarray(windows.transpose(1, 2, 0))


def overlap_add(chunks: np.ndarray, hop: int, t_out: int) -> np.ndarray:
    """Invert segment_time by averaging overlapped positions; exact when all
    chunks agree (counts are 1 or 2 at half-chunk hop, and 2x/2 == x)."""
    if chunks.ndim != 3:
        raise ShapeError(f"expected [Q, chunk, C], got shape {chunks.shape}")
    q, chunk, c = chunks.shape
    t_pad = (q - 1) * hop + chunk
    if t_out > t_pad:
        raise ShapeError(f"target length {t_out} exceeds padded extent {t_pad}")
    acc = np.zeros((c, t_pad), dtype=chunks.dtype)
    counts = np.zeros(t_pad, dtype=chunks.dtype)
    for qi in range(q):
        acc[:, qi * hop : qi * hop + chunk] += chunks[qi].T
        counts[qi * hop : qi * hop + chunk] += 1
    return (acc / counts)[:, :t_out]


def _unit_lstm(params: ModelParams, base: str) -> LstmParams:
    return LstmParams(
        w_fw=params[f"{base}.lstm.w_fw"],
        b_fw=params[f"{base}.lstm.b_fw"],
        w_bw=params[f"{base}.lstm.w_bw"],
        b_bw=params[f"{base}.lstm.b_bw"],
    )


def _gn_chunks_fwd(y, gamma, beta):
    """Layer-normalize chunked features [Q, P, C] over everything per channel."""
    q, p, c = y.shape
    flat = np.ascontiguousarray(y.transpose(2, 0, 1)).reshape(c, q * p)
    out = group_norm(flat, 1, gamma, beta)
    return np.ascontiguousarray(out.reshape(c, q, p).transpose(1, 2, 0)), flat


def _sep_path_fwd(x, params, base, keep_cache=True):
    """One dual-path half: BiLSTM over axis 1 of [B, T, C], projection,
    chunk-wide norm, residual.  Caller transposes to pick the axis."""
    lstm = _unit_lstm(params, base)
    y, lstm_cache = bilstm_forward_batched(x, lstm, keep_cache)
    proj = linear(y, params[f"{base}.proj.w"], params[f"{base}.proj.b"])
    normed, flat = _gn_chunks_fwd(proj, params[f"{base}.gn.gamma"], params[f"{base}.gn.beta"])
    out = x + normed
    if not keep_cache:
        return out, None
    cache = {"x": x, "lstm_cache": lstm_cache, "y": y, "proj": proj, "flat": flat, "base": base}
    return out, cache


def separator_forward(fused: np.ndarray, params: ModelParams, config: ModelConfig) -> np.ndarray:
    """Fused features [C, T_a] -> mask [N, T_a] with entries in [0, 1]."""
    m, _ = separator_forward_fwd(fused, params, config, keep_cache=False)
    return m


def separator_forward_fwd(fused, params, config, keep_cache=True):
    if fused.ndim != 2 or fused.shape[0] != config.fusion_channels:
        raise ShapeError(
            f"separator input must be [{config.fusion_channels}, T_a], got {fused.shape}"
        )
    t_a = fused.shape[1]
    chunks = segment_time(fused, config.chunk_len, config.chunk_hop)  # [Q, P, C]
    units = []
    for u in range(config.sep_units):
        intra_out, intra_cache = _sep_path_fwd(chunks, params, f"sep.u{u}.intra", keep_cache)
        swapped = np.ascontiguousarray(intra_out.transpose(1, 0, 2))  # [P, Q, C]
        inter_out, inter_cache = _sep_path_fwd(swapped, params, f"sep.u{u}.inter", keep_cache)
        chunks = np.ascontiguousarray(inter_out.transpose(1, 0, 2))
        units.append({"intra": intra_cache, "inter": inter_cache})
    mask_in = overlap_add(chunks, config.chunk_hop, t_a)
    pre = conv1d(mask_in, params["mask.w"], params["mask.b"])
    mask = activation("sigmoid", pre)
    if not keep_cache:
        return mask, None
    cache = {"t_a": t_a, "units": units, "chunks": chunks, "mask_in": mask_in, "pre": pre, "mask": mask}
    return mask, cache


def apply_mask(a: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Elementwise gain on the encoded audio."""
    if a.shape != m.shape:
        raise ShapeError(f"feature map {a.shape} and mask {m.shape} differ in shape")
    return a * m


def decode_audio(masked: np.ndarray, params: ModelParams, config: ModelConfig) -> np.ndarray:
    """Masked features [N, T_a] -> waveform [(T_a - 1) * S + K]."""
    if masked.ndim != 2 or masked.shape[0] != config.enc_channels:
        raise ShapeError(
            f"decoder input must be [{config.enc_channels}, T_a], got {masked.shape}"
        )
    out = conv_transpose1d(masked, params["dec.w"], params["dec.b"], stride=config.enc_stride)
    return out[0]


def pad_to_hop(wave: np.ndarray, config: ModelConfig) -> np.ndarray:
    """Right-pad with zeros so the decoder output covers the whole input."""
    t = wave.shape[0]
    if t < config.enc_kernel:
        raise InputTooShortError(
            f"waveform length {t} is shorter than the encoder kernel {config.enc_kernel}"
        )
    rem = (t - config.enc_kernel) % config.enc_stride
    pad = (config.enc_stride - rem) % config.enc_stride
    return np.pad(wave, (0, pad)) if pad else wave


def enhance(
    wave: np.ndarray,
    frames: np.ndarray,
    params: ModelParams,
    config: ModelConfig,
) -> np.ndarray:
    """Full pipeline; output has exactly the input's length."""
    t = wave.shape[0]
    padded = pad_to_hop(wave, config)
    a = encode_audio(padded, params, config)
    v = visual_forward(frames, params, config)
    f = fuse(a, v, params, config)
    m = separator_forward(f, params, config)
    y = decode_audio(apply_mask(a, m), params, config)
    return y[:t]
