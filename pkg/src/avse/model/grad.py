"""Reverse-mode gradients through the whole enhancement pipeline.

``enhance_fwd`` mirrors ``model.network.enhance`` but keeps every
intermediate; ``enhance_bwd`` walks them in reverse, accumulating
cotangents for every named parameter.  The topology is fixed, so the
backward pass is written out stage by stage instead of through a
general tape.
"""

from __future__ import annotations

import numpy as np

from avse.model.config import ModelConfig
from avse.model.params import ModelParams
from avse.model.network import (
    encode_audio_fwd,
    fuse_fwd,
    pad_to_hop,
    separator_forward_fwd,
    visual_forward_fwd,
)
from avse.ops import (
    conv1d_vjp,
    conv3d_vjp,
    conv_transpose1d,
    conv_transpose1d_vjp,
    group_norm_vjp,
    linear_vjp,
    resize_linear_time_vjp,
)
from avse.ops.rnn import bilstm_backward_batched


def enhance_fwd(wave, frames, params: ModelParams, config: ModelConfig):
    """Forward pass retaining intermediates; returns (waveform [T], cache)."""
    t = wave.shape[0]
    padded = pad_to_hop(wave, config)
    a, enc_cache = encode_audio_fwd(padded, params, config)
    v, vis_cache = visual_forward_fwd(frames, params, config)
    f, fuse_cache = fuse_fwd(a, v, params, config)
    m, sep_cache = separator_forward_fwd(f, params, config)
    am = a * m
    dec_out = conv_transpose1d(
        am, params["dec.w"], params["dec.b"], stride=config.enc_stride
    )
    cache = {
        "t": t,
        "a": a,
        "m": m,
        "am": am,
        "enc": enc_cache,
        "vis": vis_cache,
        "fuse": fuse_cache,
        "sep": sep_cache,
        "v": v,
    }
    return dec_out[0][:t], cache


def _norm_frames_bwd(x, groups, gamma, beta, g):
    """Backward of per-frame group normalization on [C, F, H, W].

    Mirrors the forward's frames-as-groups folding; per-channel
    cotangents sum over the frame axis.
    """
    c, f, h, w = x.shape
    flat = np.ascontiguousarray(x.transpose(1, 0, 2, 3)).reshape(f * c, h * w)
    g_flat = np.ascontiguousarray(g.transpose(1, 0, 2, 3)).reshape(f * c, h * w)
    gx_flat, gg, gb = group_norm_vjp(
        flat, f * groups, np.tile(gamma, f), np.tile(beta, f), g_flat
    )
    gx = np.ascontiguousarray(gx_flat.reshape(f, c, h, w).transpose(1, 0, 2, 3))
    return gx, gg.reshape(f, c).sum(axis=0), gb.reshape(f, c).sum(axis=0)


def _trunk_block_bwd(cache, params, config, g_out, grads):
    base = cache["base"]
    s = cache["stride"]
    groups = config.vfn_norm_groups
    g_total = g_out * (cache["total"] > 0)
    g_pre2, ggamma, gbeta = _norm_frames_bwd(
        cache["pre2"], groups, params[f"{base}.gn2.gamma"], params[f"{base}.gn2.beta"], g_total
    )
    grads[f"{base}.gn2.gamma"] += ggamma
    grads[f"{base}.gn2.beta"] += gbeta
    g_h1, gw2, _ = conv3d_vjp(
        cache["h1"], params[f"{base}.conv2.w"], None, g_pre2, stride=(1, 1, 1), pad=(0, 1, 1)
    )
    grads[f"{base}.conv2.w"] += gw2
    g_n1 = g_h1 * (cache["n1"] > 0)
    g_pre1, ggamma, gbeta = _norm_frames_bwd(
        cache["pre1"], groups, params[f"{base}.gn1.gamma"], params[f"{base}.gn1.beta"], g_n1
    )
    grads[f"{base}.gn1.gamma"] += ggamma
    grads[f"{base}.gn1.beta"] += gbeta
    g_x, gw1, _ = conv3d_vjp(
        cache["x"], params[f"{base}.conv1.w"], None, g_pre1, stride=(1, s, s), pad=(0, 1, 1)
    )
    grads[f"{base}.conv1.w"] += gw1
    if s != 1:
        g_pre_sc, ggamma, gbeta = _norm_frames_bwd(
            cache["pre_sc"],
            groups,
            params[f"{base}.proj_gn.gamma"],
            params[f"{base}.proj_gn.beta"],
            g_total,
        )
        grads[f"{base}.proj_gn.gamma"] += ggamma
        grads[f"{base}.proj_gn.beta"] += gbeta
        g_x_sc, gwp, _ = conv3d_vjp(
            cache["x"], params[f"{base}.proj.w"], None, g_pre_sc, stride=(1, s, s), pad=0
        )
        grads[f"{base}.proj.w"] += gwp
        g_x += g_x_sc
    else:
        g_x += g_total
    return g_x


def _visual_bwd(cache, params, config, g_v, grads):
    feats = cache["feats"]
    g_feats, gw, gb = linear_vjp(feats, params["vfn.proj.w"], params["vfn.proj.b"], g_v)
    grads["vfn.proj.w"] += gw
    grads["vfn.proj.b"] += gb
    c, f, h, w = cache["trunk_out_shape"]
    g_h = np.broadcast_to(g_feats.T[:, :, None, None] / (h * w), (c, f, h, w)).copy()
    for block in reversed(cache["blocks"]):
        g_h = _trunk_block_bwd(block, params, config, g_h, grads)
    fr = config.vfn_frontend
    g_pre = g_h * (cache["pre_front"] > 0)
    bias = params["vfn.front.b"] if "vfn.front.b" in params else None
    _, gw, gb = conv3d_vjp(
        cache["frames_x"], params["vfn.front.w"], bias, g_pre, stride=fr.stride, pad=fr.pad
    )
    grads["vfn.front.w"] += gw
    if gb is not None:
        grads["vfn.front.b"] += gb


def _sep_path_bwd(cache, params, g_out, grads):
    base = cache["base"]
    proj = cache["proj"]
    q, p, c = proj.shape
    g_flat = np.ascontiguousarray(g_out.transpose(2, 0, 1)).reshape(c, q * p)
    g_norm_in, ggamma, gbeta = group_norm_vjp(
        cache["flat"], 1, params[f"{base}.gn.gamma"], params[f"{base}.gn.beta"], g_flat
    )
    grads[f"{base}.gn.gamma"] += ggamma
    grads[f"{base}.gn.beta"] += gbeta
    g_proj = g_norm_in.reshape(c, q, p).transpose(1, 2, 0)
    g_y, gw, gb = linear_vjp(
        cache["y"], params[f"{base}.proj.w"], params[f"{base}.proj.b"], g_proj
    )
    grads[f"{base}.proj.w"] += gw
    grads[f"{base}.proj.b"] += gb
    g_x, gw_fw, gb_fw, gw_bw, gb_bw = bilstm_backward_batched(cache["lstm_cache"], g_y)
    grads[f"{base}.lstm.w_fw"] += gw_fw
    grads[f"{base}.lstm.b_fw"] += gb_fw
    grads[f"{base}.lstm.w_bw"] += gw_bw
    grads[f"{base}.lstm.b_bw"] += gb_bw
    # The residual path bypasses the whole unit.
    return g_x + g_out


def _overlap_add_vjp(g, q, chunk, hop):
    c, t_out = g.shape
    t_pad = (q - 1) * hop + chunk
    gp = np.zeros((c, t_pad), dtype=g.dtype)
    gp[:, :t_out] = g
    counts = np.zeros(t_pad, dtype=g.dtype)
    for qi in range(q):
        counts[qi * hop : qi * hop + chunk] += 1
    gp = gp / counts
    g_chunks = np.empty((q, chunk, c), dtype=g.dtype)
    for qi in range(q):
        g_chunks[qi] = gp[:, qi * hop : qi * hop + chunk].T
    return g_chunks


def _segment_vjp(g_chunks, hop, t_out):
    q, chunk, c = g_chunks.shape
    t_pad = (q - 1) * hop + chunk
    gp = np.zeros((c, t_pad), dtype=g_chunks.dtype)
    for qi in range(q):
        gp[:, qi * hop : qi * hop + chunk] += g_chunks[qi].T
    return gp[:, :t_out]


def _separator_bwd(cache, params, config, g_mask, grads):
    mask = cache["mask"]
    g_pre = g_mask * mask * (1.0 - mask)
    g_mask_in, gw, gb = conv1d_vjp(cache["mask_in"], params["mask.w"], params["mask.b"], g_pre)
    grads["mask.w"] += gw
    grads["mask.b"] += gb
    q = cache["chunks"].shape[0]
    g_chunks = _overlap_add_vjp(g_mask_in, q, config.chunk_len, config.chunk_hop)
    for unit in reversed(cache["units"]):
        g_inter_out = np.ascontiguousarray(g_chunks.transpose(1, 0, 2))
        g_swapped = _sep_path_bwd(unit["inter"], params, g_inter_out, grads)
        g_intra_out = np.ascontiguousarray(g_swapped.transpose(1, 0, 2))
        g_chunks = _sep_path_bwd(unit["intra"], params, g_intra_out, grads)
    return _segment_vjp(g_chunks, config.chunk_hop, cache["t_a"])


def _fuse_bwd(cache, params, config, g_f, grads):
    g_pre = g_f * (cache["pre"] > 0)
    g_cat, gw, gb = conv1d_vjp(cache["cat"], params["fusion.w"], params["fusion.b"], g_pre)
    grads["fusion.w"] += gw
    grads["fusion.b"] += gb
    n = config.enc_channels
    g_a = g_cat[:n]
    g_v = resize_linear_time_vjp(cache["v"], cache["t_a"], np.ascontiguousarray(g_cat[n:].T))
    return g_a, g_v


def enhance_bwd(cache, params: ModelParams, config: ModelConfig, g_out) -> ModelParams:
    """Parameter cotangents of <g_out, enhance(wave, frames)>."""
    grads = {name: np.zeros_like(v) for name, v in params.items()}
    am = cache["am"]
    t_pad_frames = am.shape[1]
    t_pad = (t_pad_frames - 1) * config.enc_stride + config.enc_kernel
    g_dec = np.zeros((1, t_pad), dtype=am.dtype)
    g_dec[0, : cache["t"]] = g_out
    g_am, gw, gb = conv_transpose1d_vjp(
        am, params["dec.w"], params["dec.b"], g_dec, stride=config.enc_stride
    )
    grads["dec.w"] += gw
    grads["dec.b"] += gb
    g_a = g_am * cache["m"]
    g_mask = g_am * cache["a"]
    g_f = _separator_bwd(cache["sep"], params, config, g_mask, grads)
    g_a2, g_v = _fuse_bwd(cache["fuse"], params, config, g_f, grads)
    g_a = g_a + g_a2
    _visual_bwd(cache["vis"], params, config, g_v, grads)
    enc_pre = cache["enc"]["pre"]
    g_enc_pre = g_a * (enc_pre > 0)
    _, gw, gb = conv1d_vjp(
        cache["enc"]["wave"][None],
        params["enc.w"],
        params["enc.b"],
        g_enc_pre,
        stride=config.enc_stride,
    )
    grads["enc.w"] += gw
    grads["enc.b"] += gb
    return ModelParams(grads)
