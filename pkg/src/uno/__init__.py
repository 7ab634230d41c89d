"""Unlimited one-bit (UNO) acquisition and recovery toolkit.

A numpy-based simulator for the full pipeline: B-spline signal models,
centered modulo folding, dithered one-bit quantization, randomized-Kaczmarz
recovery of the folded samples, and finite-difference unwrapping back to the
original signal.  A rate calculator evaluates the sufficient sampling
conditions for the whole scheme.

Modules
-------
rate_theory : Favard constants, sampling-rate bounds, error budgets.
splines     : B-spline interpolation models and oversampling.
modulo      : centered modulo folding of sample vectors.
onebit      : dither generation, sign quantization, capture file format.
rka         : randomized Kaczmarz solver for the one-bit constraint system.
unwrap      : difference/anti-difference recovery of folded samples.
imaging     : row-wise HDR image encode/decode and experiment harness.
cli         : the ``uno`` command-line front end.
"""

from . import imaging, modulo, onebit, rate_theory, rka, splines, unwrap

__all__ = [
    "rate_theory",
    "splines",
    "modulo",
    "onebit",
    "rka",
    "unwrap",
    "imaging",
]
