"""Shared test utilities: finite differences and relative error."""

import numpy as np

from avse.prng import Stream

FD_STEP = 1e-5


def rel_err(numeric, analytic) -> float:
    """Worst symmetric relative error between two gradient arrays."""
    numeric = np.asarray(numeric, dtype=np.float64)
    analytic = np.asarray(analytic, dtype=np.float64)
    denom = np.abs(numeric) + np.abs(analytic)
    mask = denom > 1e-10
    if not mask.any():
        return 0.0
    return float((np.abs(numeric - analytic)[mask] / denom[mask]).max())


def fd_grad(f, x, step=FD_STEP) -> np.ndarray:
    """Central finite differences of scalar f at every entry of x (64-bit)."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        mi = it.multi_index
        orig = x[mi]
        x[mi] = orig + step
        fp = f(x)
        x[mi] = orig - step
        fm = f(x)
        x[mi] = orig
        g[mi] = (fp - fm) / (2 * step)
    return g


def randn(stream: Stream, shape) -> np.ndarray:
    """Deterministic standard-normal tensor from a seeded stream."""
    n = int(np.prod(shape))
    return stream.normal(n).reshape(shape)
