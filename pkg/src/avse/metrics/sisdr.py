"""Scale-invariant signal-to-distortion ratio."""

from __future__ import annotations

import math

import numpy as np

from avse.errors import DegenerateSignalError, ShapeError

# Reported values are clamped to [-60, +60] dB: +60 when the residual is
# negligible, -60 when the projected target is (estimate orthogonal to or
# independent of the reference).
SI_SDR_CAP_DB = 60.0
_RESIDUAL_CAP_RATIO = 1e-12


def si_sdr(ref: np.ndarray, est: np.ndarray) -> float:
    """SI-SDR of ``est`` against ``ref`` in dB.

    Both signals are mean-removed; the estimate is projected onto the
    reference (alpha = <est,ref>/<ref,ref>) and the ratio of projected
    energy to residual energy is reported in dB.  The result is
    invariant under nonzero scaling of the estimate.
    """
    if ref.shape != est.shape or ref.ndim != 1:
        raise ShapeError(f"signals must be equal-length 1-D, got {ref.shape} and {est.shape}")
    ref = np.asarray(ref, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    ref = ref - ref.mean()
    est = est - est.mean()
    ref_energy = float(ref @ ref)
    if ref_energy <= 0.0:
        raise DegenerateSignalError("reference has zero energy after mean removal")
    alpha = float(est @ ref) / ref_energy
    target = alpha * ref
    target_energy = float(target @ target)
    residual = est - target
    residual_energy = float(residual @ residual)
    if residual_energy <= _RESIDUAL_CAP_RATIO * target_energy:
        return SI_SDR_CAP_DB
    if target_energy <= 0.0:
        return -SI_SDR_CAP_DB
    return min(
        SI_SDR_CAP_DB,
        max(-SI_SDR_CAP_DB, 10.0 * math.log10(target_energy / residual_energy)),
    )
