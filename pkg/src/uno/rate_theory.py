"""Sampling-rate bounds for recovering spline signals from folded one-bit data.

Everything here is closed-form: Bohr-Favard constants, the excess ratio
between two of them, the sufficient sampling-period bounds for recovery from
modulo samples (with and without the one-bit stage), the bound on high-order
finite differences of the samples, and the per-sample noise budget that the
one-bit reconstruction must meet.  All functions are pure and thread-safe.
"""

import math
from dataclasses import dataclass

from scipy.special import zeta

__all__ = [
    "RateCertificate",
    "favard_constant",
    "excess_ratio",
    "uno_rate_bound",
    "classic_rate_bound",
    "difference_bound",
    "error_budget",
    "certify",
]


def favard_constant(n: int) -> float:
    """Bohr-Favard constant K_n = (4/pi) * sum_{j>=0} ((-1)^j/(2j+1))^(n+1).

    Evaluated in closed form through the Hurwitz zeta function, which sums
    the series exactly:

    * n even  -> alternating series, equal to (4/pi) * 4^-(n+1) *
      (zeta(n+1, 1/4) - zeta(n+1, 3/4)); K_0 = 1 exactly.
    * n odd   -> all-positive series, equal to (4/pi) * 2^-(n+1) *
      zeta(n+1, 1/2).

    Absolute error is at machine precision (well under 1e-12).  K_0 = 1,
    K_1 = pi/2, K_2 = pi^2/8, K_3 = pi^3/24, and K_n -> 4/pi as n grows.
    """
    if not isinstance(n, (int,)) or isinstance(n, bool):
        raise TypeError(f"spline order must be an integer, got {n!r}")
    if n < 0:
        raise ValueError(f"spline order must be >= 0, got {n}")
    if n == 0:
        # Alternating harmonic-type series sums to pi/4; the prefactor 4/pi
        # makes the constant exactly 1.
        return 1.0
    p = n + 1
    if n % 2 == 0:
        tail = (zeta(p, 0.25) - zeta(p, 0.75)) / 4.0**p
    else:
        tail = zeta(p, 0.5) / 2.0**p
    return 4.0 / math.pi * float(tail)


def excess_ratio(l: int, N: int) -> float:
    """Ratio K_{N-l} / K_N of Favard constants for difference order l."""
    _check_order_pair(l, N)
    return favard_constant(N - l) / favard_constant(N)


def uno_rate_bound(lam: float, beta_g: float, h: float, l: int, N: int) -> float:
    """Largest sampling period (exclusive) under which one-bit modulo
    recovery of an order-N spline signal is guaranteed.

    Returns (h / (pi*e)) * (lam / (2 * beta_g * K_{N-l}/K_N)) ** (1/l).
    """
    _check_positive(lam=lam, beta_g=beta_g, h=h)
    _check_order_pair(l, N)
    ratio = lam / (2.0 * beta_g * excess_ratio(l, N))
    return h / (math.pi * math.e) * ratio ** (1.0 / l)


def classic_rate_bound(lam: float, beta_g: float, h: float, l: int, N: int) -> float:
    """Sampling-period bound when the modulo samples themselves are stored.

    Identical to :func:`uno_rate_bound` except the saturation threshold is
    not halved: (h / (pi*e)) * (lam / (beta_g * K_{N-l}/K_N)) ** (1/l).
    """
    _check_positive(lam=lam, beta_g=beta_g, h=h)
    _check_order_pair(l, N)
    ratio = lam / (beta_g * excess_ratio(l, N))
    return h / (math.pi * math.e) * ratio ** (1.0 / l)


def difference_bound(T: float, h: float, l: int, N: int, g_inf: float) -> float:
    """Upper bound on the sup-norm of the order-l finite difference of
    samples g(kT) of an order-N spline with knot spacing h.

    Returns (T*pi*e/h)^l * (K_{N-l}/K_N) * g_inf.  ``g_inf`` is the
    amplitude bound of the signal and may be zero.
    """
    _check_positive(T=T, h=h)
    if g_inf < 0:
        raise ValueError(f"amplitude bound must be >= 0, got {g_inf}")
    _check_order_pair(l, N)
    return (T * math.pi * math.e / h) ** l * excess_ratio(l, N) * g_inf


def error_budget(lam: float, l: int) -> float:
    """Per-sample noise budget lam / 2^(l+1) for order-l unwrapping.

    If the recovered modulo samples are within this sup-norm distance of the
    true ones, order-l differences of the noise stay within lam/2 and the
    unwrapping stage still succeeds.
    """
    _check_positive(lam=lam)
    if l < 1:
        raise ValueError(f"difference order must be >= 1, got {l}")
    return lam / 2.0 ** (l + 1)


@dataclass(frozen=True)
class RateCertificate:
    """Evaluation of the sampling-rate condition for one parameter set.

    ``satisfied`` is True iff T is strictly below ``t_max_uno``; equality
    does not count.  ``t_max_uno`` is always ``t_max_classic / 2**(1/l)``.
    """

    lam: float
    beta_g: float
    h: float
    l: int
    N: int
    T: float
    t_max_uno: float
    t_max_classic: float
    error_budget: float
    satisfied: bool

    def to_dict(self) -> dict:
        return {
            "t_max_uno": self.t_max_uno,
            "t_max_classic": self.t_max_classic,
            "error_budget": self.error_budget,
            "satisfied": self.satisfied,
        }


def certify(lam: float, beta_g: float, h: float, l: int, N: int, T: float) -> RateCertificate:
    """Bundle all bounds for (lam, beta_g, h, l, N, T) into one certificate."""
    _check_positive(T=T)
    t_uno = uno_rate_bound(lam, beta_g, h, l, N)
    t_classic = classic_rate_bound(lam, beta_g, h, l, N)
    return RateCertificate(
        lam=lam,
        beta_g=beta_g,
        h=h,
        l=l,
        N=N,
        T=T,
        t_max_uno=t_uno,
        t_max_classic=t_classic,
        error_budget=error_budget(lam, l),
        satisfied=bool(T < t_uno),
    )


def _check_order_pair(l, N) -> None:
    for name, value in (("l", l), ("N", N)):
        if not isinstance(value, int) or isinstance(value, bool):
            raise TypeError(f"{name} must be an integer, got {value!r}")
    if l < 1:
        raise ValueError(f"difference order l must be >= 1, got {l}")
    if l > N:
        raise ValueError(f"difference order l={l} exceeds spline order N={N}")


def _check_positive(**kwargs) -> None:
    for name, value in kwargs.items():
        if not math.isfinite(value) or value <= 0:
            raise ValueError(f"{name} must be positive and finite, got {value}")
