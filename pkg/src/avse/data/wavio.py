"""16-bit mono PCM WAV reading and writing.

Reading accepts any RIFF/WAVE file holding PCM, 16-bit, single-channel
audio at any rate, tolerating extra chunks before the payload.  Writing
always produces the canonical 44-byte-header layout.  Samples map to
floats by 1/32768 on load; saving clamps to [-1, 1), scales by 32767,
and rounds half away from zero, so a round trip moves each sample by
less than (0.5 + |x|)/32768.
"""

from __future__ import annotations

import struct

import numpy as np

from avse.errors import CorruptFileError, DataError, UnsupportedFormatError

_PCM = 1


def load_wav(path) -> tuple[np.ndarray, int]:
    """Returns (waveform in [-1, 1), sample rate in Hz)."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CorruptFileError(f"cannot read {path}: {exc}") from exc
    if len(blob) < 12:
        raise CorruptFileError(f"{path}: too short for a RIFF header")
    magic, _, wave_id = struct.unpack("<4sI4s", blob[:12])
    if magic != b"RIFF":
        raise UnsupportedFormatError(f"{path}: magic {magic!r} is not RIFF")
    if wave_id != b"WAVE":
        raise UnsupportedFormatError(f"{path}: form type {wave_id!r} is not WAVE")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(blob):
        chunk_id, size = struct.unpack("<4sI", blob[pos : pos + 8])
        body = blob[pos + 8 : pos + 8 + size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise CorruptFileError(f"{path}: fmt chunk truncated")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif chunk_id == b"data":
            if len(body) < size:
                raise CorruptFileError(
                    f"{path}: data chunk claims {size} bytes, file holds {len(body)}"
                )
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt is None:
        raise CorruptFileError(f"{path}: no fmt chunk")
    if data is None:
        raise CorruptFileError(f"{path}: no data chunk")
    audio_format, channels, rate, _, _, bits = fmt
    if audio_format != _PCM:
        raise UnsupportedFormatError(f"{path}: audio format {audio_format} is not PCM")
    if channels != 1:
        raise UnsupportedFormatError(f"{path}: {channels} channels, only mono is supported")
    if bits != 16:
        raise UnsupportedFormatError(f"{path}: {bits} bits per sample, only 16 is supported")
    if len(data) % 2 != 0:
        raise CorruptFileError(f"{path}: odd data size {len(data)} for 16-bit samples")
    samples = np.frombuffer(data, dtype="<i2").astype(np.float64)
    return samples / 32768.0, rate


def save_wav(path, wave: np.ndarray, sample_rate_hz: int) -> None:
    """Write a canonical PCM16 mono RIFF file (44-byte header + 2T bytes)."""
    wave = np.asarray(wave, dtype=np.float64)
    if wave.ndim != 1:
        raise UnsupportedFormatError(f"waveform must be 1-D, got shape {wave.shape}")
    if not np.isfinite(wave).all():
        raise DataError("waveform contains non-finite samples")
    scaled = np.clip(wave, -1.0, 1.0) * 32767.0
    # round half away from zero, unlike numpy's round-half-even
    quantized = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    pcm = np.clip(quantized, -32768, 32767).astype("<i2")
    payload = pcm.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        _PCM,
        1,
        sample_rate_hz,
        sample_rate_hz * 2,
        2,
        16,
        b"data",
        len(payload),
    )
    with open(path, "wb") as fh:
        fh.write(header + payload)
