"""Centered modulo folding: the self-reset ADC nonlinearity.

The fold maps any real x into the half-open interval [-lam, lam) by removing
the unique multiple of 2*lam; values already inside the interval pass through
bit-exactly, which makes re-folding idempotent.
"""

import math
from dataclasses import dataclass

import numpy as np

from .splines import SplineModel, oversample

__all__ = ["ModuloSampleVector", "modulo_fold", "modulo_sample", "residual"]


def modulo_fold(x, lam: float):
    """Fold x into [-lam, lam): 2*lam*(frac(x/(2*lam) + 1/2) - 1/2).

    x may be a scalar or ndarray and must be finite.  The boundary is
    half-open: modulo_fold(lam, lam) == -lam.  Inputs already inside the
    interval are returned unchanged (no float round-trip), so applying the
    fold twice gives exactly the same values.
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"saturation threshold must be positive, got {lam}")
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot fold non-finite values")
    scalar = x.ndim == 0
    x1 = np.atleast_1d(x)
    u = x1 / (2.0 * lam) + 0.5
    folded = 2.0 * lam * (u - np.floor(u) - 0.5)
    out = np.where((x1 >= -lam) & (x1 < lam), x1, folded)
    return float(out[0]) if scalar else out


@dataclass
class ModuloSampleVector:
    """Folded samples y_k in [-lam, lam) taken at period T."""

    values: np.ndarray
    lam: float
    period_T: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"saturation threshold must be positive, got {self.lam}")
        if not (self.period_T > 0 and math.isfinite(self.period_T)):
            raise ValueError(f"sampling period must be positive, got {self.period_T}")

    def __len__(self):
        return len(self.values)


def modulo_sample(model: SplineModel, T: float, lam: float) -> ModuloSampleVector:
    """Oversample the spline model at period T and fold each sample."""
    raw = oversample(model, T)
    return ModuloSampleVector(values=modulo_fold(raw, lam), lam=lam, period_T=T)


def residual(raw, folded, lam: float) -> np.ndarray:
    """Element-wise raw - folded; every entry is a multiple of 2*lam."""
    raw = np.asarray(raw, dtype=np.float64)
    folded = np.asarray(folded, dtype=np.float64)
    if raw.shape != folded.shape:
        raise ValueError(f"shape mismatch: {raw.shape} vs {folded.shape}")
    return raw - folded
