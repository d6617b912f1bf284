"""Short-time objective intelligibility.

Standard pipeline with all constants pinned: resample both signals to
10 kHz; drop frames whose reference energy sits more than 40 dB below
the loudest reference frame; take Hann-windowed 256-sample frames at
hop 128 with 512-point spectra; collapse to 15 one-third-octave band
envelopes starting at 150 Hz; slide a 30-frame segment window; per
segment and band, scale the degraded envelope to the clean energy, clip
it at (1 + 10^(15/20)) times the clean envelope (the -15 dB
signal-to-distortion floor), and correlate; the score is the mean
correlation over all segments and bands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from avse.errors import InsufficientSignalError, ShapeError
from avse.metrics.resample import resample

FS = 10000  # analysis rate, Hz
FRAME_LEN = 256
HOP = 128
NFFT = 512
NUM_BANDS = 15
FIRST_CENTER_HZ = 150.0
SEGMENT_FRAMES = 30
DYN_RANGE_DB = 40.0
BETA_DB = -15.0  # clip threshold: 1 + 10^(-BETA/20)

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class BandDefinition:
    """One analysis band: center frequency and half-open FFT bin range."""

    center_hz: float
    lo_bin: int
    hi_bin: int


def _hann(n: int) -> np.ndarray:
    # Periodic-style Hann without zero endpoints; pairs at half-overlap sum to 1.
    return np.hanning(n + 2)[1:-1]


def third_octave_bands(
    fs: int = FS, nfft: int = NFFT, num_bands: int = NUM_BANDS, first_hz: float = FIRST_CENTER_HZ
) -> list[BandDefinition]:
    """Band edges snapped to the nearest FFT bin; contiguous and disjoint."""
    f = np.linspace(0, fs, nfft + 1)[: nfft // 2 + 1]
    bands = []
    for k in range(num_bands):
        center = first_hz * 2.0 ** (k / 3.0)
        lo = int(np.argmin(np.square(f - center * 2.0 ** (-1.0 / 6.0))))
        hi = int(np.argmin(np.square(f - center * 2.0 ** (1.0 / 6.0))))
        bands.append(BandDefinition(center, lo, hi))
    return bands


def _frame(x: np.ndarray, window: np.ndarray) -> np.ndarray:
    """Windowed frames [M, FRAME_LEN]; the tail that does not fill a frame is dropped."""
    starts = range(0, len(x) - FRAME_LEN + 1, HOP)
    return np.array([window * x[s : s + FRAME_LEN] for s in starts])


def _remove_silent_frames(ref: np.ndarray, est: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop frame pairs where the reference is quiet; overlap-add the rest.

    Selection depends only on the reference, so both signals lose the
    same frames and stay aligned.
    """
    w = _hann(FRAME_LEN)
    ref_frames = _frame(ref, w)
    est_frames = _frame(est, w)
    if len(ref_frames) == 0:
        raise InsufficientSignalError(
            f"signal of {len(ref)} samples is shorter than one {FRAME_LEN}-sample frame"
        )
    energies_db = 20.0 * np.log10(np.linalg.norm(ref_frames, axis=1) + _EPS)
    keep = energies_db > energies_db.max() - DYN_RANGE_DB
    ref_frames = ref_frames[keep]
    est_frames = est_frames[keep]
    n_out = (len(ref_frames) - 1) * HOP + FRAME_LEN
    ref_out = np.zeros(n_out)
    est_out = np.zeros(n_out)
    for i in range(len(ref_frames)):
        ref_out[i * HOP : i * HOP + FRAME_LEN] += ref_frames[i]
        est_out[i * HOP : i * HOP + FRAME_LEN] += est_frames[i]
    return ref_out, est_out


def _band_envelopes(x: np.ndarray, bands: list[BandDefinition]) -> np.ndarray:
    """Third-octave envelope matrix [NUM_BANDS, M] from a waveform."""
    w = _hann(FRAME_LEN)
    frames = _frame(x, w)
    spec = np.fft.rfft(frames, n=NFFT, axis=1)  # [M, NFFT/2+1]
    power = np.square(np.abs(spec))
    env = np.empty((len(bands), len(frames)))
    for j, band in enumerate(bands):
        env[j] = np.sqrt(power[:, band.lo_bin : band.hi_bin].sum(axis=1))
    return env


def stoi(ref: np.ndarray, est: np.ndarray, fs_hz: int) -> float:
    """Intelligibility score of ``est`` against clean ``ref``; near 1 is best."""
    ref = np.asarray(ref, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    if ref.shape != est.shape or ref.ndim != 1:
        raise ShapeError(f"signals must be equal-length 1-D, got {ref.shape} and {est.shape}")
    if fs_hz != FS:
        ref = resample(ref, fs_hz, FS)
        est = resample(est, fs_hz, FS)
    ref, est = _remove_silent_frames(ref, est)
    bands = third_octave_bands()
    x = _band_envelopes(ref, bands)  # clean
    y = _band_envelopes(est, bands)  # degraded
    m = x.shape[1]
    if m < SEGMENT_FRAMES:
        raise InsufficientSignalError(
            f"only {m} analysis frames after silence removal; need {SEGMENT_FRAMES}"
        )
    clip = 1.0 + 10.0 ** (-BETA_DB / 20.0)
    total = 0.0
    count = 0
    for seg_end in range(SEGMENT_FRAMES, m + 1):
        xs = x[:, seg_end - SEGMENT_FRAMES : seg_end]
        ys = y[:, seg_end - SEGMENT_FRAMES : seg_end]
        alpha = np.sqrt((xs * xs).sum(axis=1) / ((ys * ys).sum(axis=1) + _EPS))
        ys_scaled = ys * alpha[:, None]
        ys_clipped = np.minimum(ys_scaled, clip * xs)
        xn = xs - xs.mean(axis=1, keepdims=True)
        yn = ys_clipped - ys_clipped.mean(axis=1, keepdims=True)
        xn = xn / (np.linalg.norm(xn, axis=1, keepdims=True) + _EPS)
        yn = yn / (np.linalg.norm(yn, axis=1, keepdims=True) + _EPS)
        total += float((xn * yn).sum())
        count += xs.shape[0]
    return total / count
