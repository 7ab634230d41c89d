"""Shared generators and independent oracles for the test suite."""

import math

import numpy as np

from uno.modulo import ModuloSampleVector
from uno.onebit import DitherPlan, generate_dithers, quantize
from uno.splines import SplineModel


def series_favard(n: int, tol: float = 1e-13) -> float:
    """Independent series oracle for the Bohr-Favard constant.

    Sums (4/pi) * sum_j ((-1)^j/(2j+1))^(n+1) without any zeta shortcuts:
    alternating orders go through repeated averaging of partial sums (Euler
    transform), monotone orders through direct summation plus an
    Euler-Maclaurin tail.
    """
    p = n + 1
    if n % 2 == 0:
        # Alternating: partial sums, then repeated pairwise averaging.
        terms = np.array([(-1.0) ** j / (2 * j + 1) ** p for j in range(200)])
        sums = np.cumsum(terms)
        while len(sums) > 1:
            sums = 0.5 * (sums[:-1] + sums[1:])
        total = float(sums[0])
    else:
        J = 200_000
        j = np.arange(J)
        total = float(np.sum((2.0 * j + 1.0) ** -p))
        x = 2.0 * J + 1.0
        # integral + midpoint + first derivative correction of the tail
        total += x ** (1 - p) / (2 * (p - 1)) + 0.5 * x**-p + p / 6.0 * x ** (-p - 1)
    return 4.0 / math.pi * total


def brute_force_intervals(bits: np.ndarray, gamma: np.ndarray, lam: float):
    """Per-coordinate feasible interval by scanning every constraint."""
    n, m = bits.shape
    lo = np.full(n, -lam)
    hi = np.full(n, lam)
    for k in range(n):
        for l in range(m):
            if bits[k, l] > 0:
                lo[k] = max(lo[k], gamma[k, l])
            else:
                hi[k] = min(hi[k], gamma[k, l])
    return lo, hi


def brute_force_violation(bits: np.ndarray, gamma: np.ndarray, y: np.ndarray) -> float:
    worst = 0.0
    n, m = bits.shape
    for k in range(n):
        for l in range(m):
            worst = max(worst, bits[k, l] * (gamma[k, l] - y[k]))
    return worst


def make_capture(y_values, m, seed, lam=1.0, period=1.0):
    y = ModuloSampleVector(np.asarray(y_values, dtype=float), lam, period)
    plan = DitherPlan(n=len(y.values), m=m, lam=lam, seed=seed)
    return quantize(y, generate_dithers(plan), plan=plan)


def smooth_full_span_model(rng, n_knots=32, low=0.2, high=254.8, h=1.0) -> SplineModel:
    """Cubic spline whose coefficients (hence the signal) stay in [0, 255]
    and whose value range is pinned near both ends by short plateaus.

    Building the model from coefficients keeps the signal inside the
    coefficient hull (basis functions are a partition of unity), so range
    anchoring resolves the fold multiple uniquely.
    """
    c = rng.uniform(low, high, n_knots)
    spots = rng.choice(n_knots - 6, size=2, replace=False)
    c[spots[0]:spots[0] + 6] = high
    c[spots[1]:spots[1] + 6] = low
    return SplineModel(order_N=3, dilation_h=h, coefficients=c)


def sine_test_image(width=256, height=144):
    """Smooth synthetic grayscale test image; every row sweeps [0.5, 254.5]
    within any 64-pixel window (at least one full period), close enough to
    the range ends that the anchoring multiple is unique."""
    r = np.arange(height)[:, None]
    c = np.arange(width)[None, :]
    freq = 4.0 + 4.0 * r / max(height - 1, 1)
    phase = 2.0 * np.pi * r / 7.0
    return 127.5 + 127.0 * np.sin(2.0 * np.pi * c * freq / width + phase)
