"""Desk-scale training loop.

One scene per step: mix the inputs, run the forward pass, take the
negative-SI-SDR gradient, clip at global norm 5, apply Adam.  Scene
order reshuffles every epoch from a seeded stream, mixtures are built
once up front, and every random choice flows from the single seed, so
the loss trace is bit-reproducible.
"""

from __future__ import annotations

import json
import math

import numpy as np

from avse.errors import DataError, NumericError
from avse.data.manifest import ManifestEntry
from avse.data.mixer import mix_scene
from avse.data.synth import Scene
from avse.data.tensorfile import read_tensor
from avse.data.wavio import load_wav
from avse.metrics.sisdr import si_sdr
from avse.model.config import ModelConfig
from avse.model.grad import enhance_bwd, enhance_fwd
from avse.model.params import init_parameters
from avse.prng import Stream
from avse.training.checkpoint import Checkpoint
from avse.training.loss import si_sdr_loss_vjp
from avse.training.optimizer import adam_step, clip_global_norm, init_optimizer

MAX_GRAD_NORM = 5.0

_SUB_SHUFFLE = 101
_SUB_MIX = 102


def load_scene(entry: ManifestEntry, expected_rate: int) -> Scene:
    """Materialize one manifest entry; validates rates and frame layout."""
    target, rate_t = load_wav(entry.target_path)
    interferer, rate_i = load_wav(entry.interferer_path)
    if rate_t != expected_rate or rate_i != expected_rate:
        raise DataError(
            f"scene {entry.id}: sample rates {rate_t}/{rate_i} Hz do not match "
            f"the configured {expected_rate} Hz"
        )
    frames = read_tensor(entry.frames_path).astype(np.float64)
    if frames.ndim != 4 or frames.shape[1] != 1:
        raise DataError(
            f"scene {entry.id}: frames must be [F, 1, H, W], got {frames.shape}"
        )
    return Scene(
        id=entry.id,
        target=target,
        interferer=interferer,
        frames=frames,
        snr_db=entry.snr_db,
        sample_rate_hz=expected_rate,
    )


def train_scenes(
    config: ModelConfig,
    scenes: list[Scene],
    epochs: int,
    seed: int,
    lr: float = 1e-3,
    log_path=None,
) -> tuple[Checkpoint, list[dict]]:
    """Train on in-memory scenes; returns (checkpoint, per-epoch log records)."""
    if not scenes:
        raise DataError("training needs at least one scene")
    root = Stream(seed)
    mix_stream = root.spawn(_SUB_MIX)
    prepared = []
    for scene in scenes:
        mixture = mix_scene(
            scene.target,
            scene.interferer,
            scene.snr_db,
            seed=int(mix_stream.integers(1, 2**31)[0]),
            sample_rate_hz=scene.sample_rate_hz,
        )
        prepared.append(
            (
                scene.id,
                mixture.astype(np.float32),
                scene.target.astype(np.float32),
                scene.frames.astype(np.float32),
            )
        )
    params = init_parameters(config, seed, dtype=np.float32)
    state = init_optimizer(params, lr=lr)
    shuffle = root.spawn(_SUB_SHUFFLE)
    logs: list[dict] = []
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for epoch in range(epochs):
            order = shuffle.permutation(len(prepared))
            losses = []
            sisdrs = []
            for step, idx in enumerate(order):
                scene_id, mixture, target, frames = prepared[int(idx)]
                out, cache = enhance_fwd(mixture, frames, params, config)
                loss, g_out = si_sdr_loss_vjp(target, out)
                if not math.isfinite(loss):
                    raise NumericError(
                        f"non-finite loss at epoch {epoch}, step {step}, scene {scene_id}"
                    )
                grads = enhance_bwd(cache, params, config, g_out)
                norm = clip_global_norm(grads, MAX_GRAD_NORM)
                if not math.isfinite(norm):
                    raise NumericError(
                        f"non-finite gradient at epoch {epoch}, step {step}, scene {scene_id}"
                    )
                params, state = adam_step(params, grads, state)
                losses.append(loss)
                sisdrs.append(si_sdr(target.astype(np.float64), out.astype(np.float64)))
            record = {
                "epoch": epoch,
                "mean_loss": sum(losses) / len(losses),
                "mean_sisdr": sum(sisdrs) / len(sisdrs),
            }
            logs.append(record)
            if log_fh:
                log_fh.write(json.dumps(record) + "\n")
    finally:
        if log_fh:
            log_fh.close()
    return Checkpoint(config=config, params=params, optimizer=state), logs


def train(
    config: ModelConfig,
    entries: list[ManifestEntry],
    epochs: int,
    seed: int,
    lr: float = 1e-3,
    log_path=None,
) -> tuple[Checkpoint, list[dict]]:
    """Train from manifest entries (files on disk)."""
    scenes = [load_scene(entry, config.sample_rate_hz) for entry in entries]
    return train_scenes(config, scenes, epochs, seed, lr=lr, log_path=log_path)
