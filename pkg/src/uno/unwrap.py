"""Recover unfolded samples from (possibly noisy) modulo samples.

The folding residual eps = gamma - y is a vector of 2*lam multiples, and the
order-l difference of the modulo samples reveals Delta^l eps exactly once the
difference is re-folded (the noise rides on both sides and cancels).  The
residual is therefore integrated back stage by stage in integer lattice
units, with each stage's unknown integration constant fixed by rounding a
windowed drift estimate to the lattice; the amplitude bound of the signal is
what makes the window estimate valid.  The final constant stays free: the
output matches the true samples up to one global 2*lam multiple, which range
anchoring can remove when the target value range is known.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .modulo import ModuloSampleVector, modulo_fold

__all__ = [
    "UnwrapDiagnostics",
    "UnwrapResult",
    "forward_difference",
    "anti_difference",
    "unwrap",
    "anchor_to_range",
]

# A folded difference this close to the boundary means the order-l
# differences likely left the fundamental interval: the recovery budget was
# blown and the lattice residual is untrustworthy.
_BUDGET_FLAG_FRACTION = 1.0 - 1.0 / 64.0


def forward_difference(v, order: int = 1) -> np.ndarray:
    """Order-``order`` forward difference; output shrinks by ``order``."""
    v = np.asarray(v, dtype=np.float64)
    if order < 1:
        raise ValueError(f"difference order must be >= 1, got {order}")
    if len(v) <= order:
        raise ValueError(f"vector of length {len(v)} too short for order {order}")
    return np.diff(v, n=order)


def anti_difference(d, order: int, initial_values) -> np.ndarray:
    """Exact right inverse of :func:`forward_difference`.

    ``initial_values[s]`` is the leading sample of the order-s difference of
    the output, s = 0 .. order-1; cumulative sums restore one order at a
    time, innermost first.
    """
    d = np.asarray(d, dtype=np.float64)
    initial_values = np.asarray(initial_values, dtype=np.float64)
    if order < 1:
        raise ValueError(f"difference order must be >= 1, got {order}")
    if initial_values.shape != (order,):
        raise ValueError(
            f"need exactly {order} initial values, got shape {initial_values.shape}"
        )
    out = d
    for s in range(order - 1, -1, -1):
        out = np.concatenate(([initial_values[s]], initial_values[s] + np.cumsum(out)))
    return out


@dataclass
class UnwrapDiagnostics:
    folded_diff_max: float
    diff_budget: float
    budget_violated: bool
    constant_fixing: str
    window: int
    reduced_confidence: bool = False
    anchoring: str = "none"
    anchor_ambiguous: bool = False
    anchor_failed: bool = False
    noise_bound_measured: float | None = None


@dataclass
class UnwrapResult:
    gamma_hat: np.ndarray
    lam: float
    offset_multiple: int
    diagnostics: UnwrapDiagnostics
    order: int = field(default=2)


def unwrap(y_tilde: ModuloSampleVector, l: int = 2, beta_g: float = 1.0) -> UnwrapResult:
    """Reconstruct samples gamma_k from modulo samples, up to one global
    2*lam multiple.

    ``l`` is the difference order (matched to the sampling-rate condition the
    caller chose, never auto-selected) and ``beta_g`` the amplitude bound of
    the underlying signal.  Noise on the input passes through entry-wise to
    the output.  A budget violation (folded differences crowding the
    interval boundary) is reported in the diagnostics, not raised.
    """
    vals = y_tilde.values
    lam = y_tilde.lam
    if l < 1:
        raise ValueError(f"difference order must be >= 1, got {l}")
    if len(vals) < l + 1:
        raise ValueError(f"need more than {l} samples for order-{l} unwrapping")
    if not (beta_g > 0 and math.isfinite(beta_g)):
        raise ValueError(f"amplitude bound must be positive, got {beta_g}")

    d = forward_difference(vals, l)
    folded = modulo_fold(d, lam)
    folded_max = float(np.max(np.abs(folded))) if len(folded) else 0.0

    # Residual differences in integer lattice units (multiples of 2*lam).
    # The rounding removes all accumulated float error because the true
    # value is exactly on the lattice.
    q = np.rint((folded - d) / (2.0 * lam))

    window = 6 * math.ceil(beta_g / lam)
    reduced = len(vals) < window + l
    for stage in range(l):
        cand = np.concatenate(([0.0], np.cumsum(q)))
        if stage < l - 1:
            # The true stage sequence is still a difference of the bounded
            # residual, so its mean over the window stays below half a
            # lattice step and pins the integration constant.
            w_eff = min(window, len(cand))
            q = cand + np.rint(-np.mean(cand[:w_eff]))
        else:
            # Final stage: the constant is the global multiple the theorem
            # leaves unresolved; convention is eps_hat[0] = 0.
            q = cand

    gamma_hat = vals + 2.0 * lam * q
    diag = UnwrapDiagnostics(
        folded_diff_max=folded_max,
        diff_budget=lam / 2.0,
        budget_violated=bool(folded_max >= _BUDGET_FLAG_FRACTION * lam),
        constant_fixing="window-mean" if not reduced else "window-mean-short-row",
        window=window,
        reduced_confidence=reduced,
    )
    return UnwrapResult(gamma_hat=gamma_hat, lam=lam, offset_multiple=0,
                        diagnostics=diag, order=l)


def anchor_to_range(result: UnwrapResult, lo: float, hi: float) -> np.ndarray:
    """Shift the recovery by the 2*lam multiple that puts the most entries
    inside [lo, hi].

    Ties prefer the smaller |multiple|.  When no shift places any entry in
    range the best effort is returned and the failure flagged; when several
    shifts achieve the minimum the ambiguity is flagged (value ranges much
    wider than 2*lam cannot pin the multiple for low-span rows).
    """
    if not (hi > lo):
        raise ValueError(f"empty anchor range [{lo}, {hi}]")
    g = result.gamma_hat
    lam = result.lam
    step = 2.0 * lam
    m_lo = math.floor((lo - float(np.max(g))) / step) - 1
    m_hi = math.ceil((hi - float(np.min(g))) / step) + 1
    candidates = np.arange(m_lo, m_hi + 1)

    srt = np.sort(g)
    n = len(g)
    below = np.searchsorted(srt, lo - step * candidates, side="left")
    above = n - np.searchsorted(srt, hi - step * candidates, side="right")
    outside = below + above

    best = int(np.min(outside))
    tied = candidates[outside == best]
    chosen = int(tied[np.lexsort((tied, np.abs(tied)))[0]])

    result.gamma_hat = g + step * chosen
    result.offset_multiple = chosen
    result.diagnostics.anchoring = "range"
    result.diagnostics.anchor_failed = best >= n
    result.diagnostics.anchor_ambiguous = len(tied) > 1
    return result.gamma_hat
