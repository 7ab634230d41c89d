"""Randomized Kaczmarz solver for the one-bit sign-constraint system.

The capture's constraints are r * y_k >= r * tau, one per (sample, threshold
sequence) pair.  Every constraint row touches a single coordinate and has
unit norm, so the norm-weighted row sampling distribution is uniform over
the n*m pairs and each projection updates one entry of the iterate.  The
solver records violation and (optionally) squared-error telemetry so the
convergence behaviour can be checked against its theoretical envelope.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .onebit import OneBitCapture, feasible_intervals, violation

__all__ = [
    "SolverConfig",
    "SolveTrace",
    "TraceRecord",
    "EnvelopeReport",
    "projection_coefficient",
    "kaczmarz_step",
    "solve",
    "theoretical_rate",
    "proposition1_envelope",
]


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 1_000_000
    feasibility_tol: float = 1e-9
    trace_stride: int = 10_000
    rng_seed: int = 0
    init: str = "midpoint_of_interval"  # or "zero"
    collect_histogram: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.trace_stride < 1:
            raise ValueError("trace_stride must be >= 1")
        if self.feasibility_tol < 0:
            raise ValueError("feasibility_tol must be >= 0")
        if self.init not in ("zero", "midpoint_of_interval"):
            raise ValueError(f"unknown init mode {self.init!r}")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    violation: float
    sqerr_to_reference: float | None = None


@dataclass
class SolveTrace:
    """Telemetry of one solve: per-record violation and squared error."""

    iterations_run: int = 0
    recorded: list = field(default_factory=list)
    selected_row_histogram: np.ndarray | None = None
    n: int = 0
    init_to_solution_sq: float = 0.0
    converged: bool = False

    def iterations(self) -> np.ndarray:
        return np.array([r.iteration for r in self.recorded], dtype=np.int64)

    def violations(self) -> np.ndarray:
        return np.array([r.violation for r in self.recorded])

    def sqerrs(self) -> np.ndarray:
        return np.array(
            [math.nan if r.sqerr_to_reference is None else r.sqerr_to_reference
             for r in self.recorded]
        )


def projection_coefficient(residual: float, equality: bool = False) -> float:
    """Step size for one Kaczmarz projection given residual b_j - c_j @ y.

    Inequality rows project only when violated (positive part); equality rows
    always project.  The one-bit system contains inequality rows only; the
    equality branch exists for generic systems and unit tests.
    """
    return residual if equality else max(residual, 0.0)


def kaczmarz_step(y: np.ndarray, c_row: np.ndarray, b: float, equality: bool = False) -> np.ndarray:
    """Generic dense projection y + beta/||c||^2 * c for one constraint row."""
    nrm = float(np.dot(c_row, c_row))
    if nrm == 0.0:
        raise ValueError("constraint row is all zero")
    beta = projection_coefficient(b - float(np.dot(c_row, y)), equality)
    return y + (beta / nrm) * c_row


def _initial_iterate(capture: OneBitCapture, mode: str) -> np.ndarray:
    if mode == "zero":
        return np.zeros(capture.n)
    lo, hi = feasible_intervals(capture)
    return 0.5 * (lo + hi)


def solve(capture: OneBitCapture, config: SolverConfig,
          reference: np.ndarray | None = None) -> tuple[np.ndarray, SolveTrace]:
    """Run randomized Kaczmarz on the capture's constraints.

    Each iteration draws one (sample, sequence) pair uniformly at random and
    projects the corresponding coordinate onto its half-line when violated.
    The max violation is checked once per epoch (n*m iterations); the solve
    stops when it drops to ``feasibility_tol`` or the iteration budget runs
    out, in which case ``trace.converged`` is False.

    Returns the final iterate and the trace.  ``reference`` (e.g. the true
    sample vector in simulations) adds squared-error-to-reference telemetry
    to every record.
    """
    if capture.n == 0 or capture.m == 0:
        raise ValueError("capture holds no constraints")
    if reference is not None:
        reference = np.asarray(reference, dtype=np.float64)
        if reference.shape != (capture.n,):
            raise ValueError("reference length does not match capture")

    n, m = capture.n, capture.m
    gamma = capture.thresholds()
    bits = capture.bits
    flat_r = flat_b = None  # materialized only if the loop actually runs

    y_arr = _initial_iterate(capture, config.init)
    y0 = y_arr.copy()
    y = y_arr.tolist()

    trace = SolveTrace(n=n)
    hist = np.zeros(n * m, dtype=np.int64) if config.collect_histogram else None
    rng = np.random.default_rng(config.rng_seed)
    epoch = n * m
    tol = config.feasibility_tol
    stride = config.trace_stride
    iters = 0

    def current() -> np.ndarray:
        return np.asarray(y)

    def record(i: int) -> float:
        v = violation(capture, current())
        sq = None
        if reference is not None:
            sq = float(np.sum((current() - reference) ** 2))
        trace.recorded.append(TraceRecord(iteration=i, violation=v, sqerr_to_reference=sq))
        return v

    last_violation = record(0)
    m_int = m
    if last_violation > tol:
        flat_r = bits.ravel().astype(np.float64).tolist()
        flat_b = (bits * gamma).ravel().tolist()
        while iters < config.max_iterations:
            next_record = (iters // stride + 1) * stride
            next_check = (iters // epoch + 1) * epoch
            stop_at = min(next_record, next_check, config.max_iterations)
            chunk = rng.integers(0, epoch, size=stop_at - iters)
            if hist is not None:
                hist += np.bincount(chunk, minlength=epoch)
            for j in chunk.tolist():
                k = j // m_int
                resid = flat_b[j] - flat_r[j] * y[k]
                if resid > 0.0:
                    y[k] += resid * flat_r[j]
            iters = stop_at
            due_record = iters == next_record
            due_check = iters == next_check or iters == config.max_iterations
            if due_record or due_check:
                last_violation = record(iters) if due_record else violation(capture, current())
                if due_check and last_violation <= tol:
                    break

    final = current()
    if not trace.recorded or trace.recorded[-1].iteration != iters:
        last_violation = record(iters)
    trace.iterations_run = iters
    trace.converged = bool(last_violation <= tol)
    trace.init_to_solution_sq = float(np.sum((final - y0) ** 2))
    trace.selected_row_histogram = hist
    return final, trace


def theoretical_rate(m: int) -> float:
    """Per-iteration convergence factor q = 1/m in the (1 - q)^i envelope."""
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise ValueError(f"number of threshold sequences must be >= 1, got {m!r}")
    return 1.0 / m


@dataclass
class EnvelopeReport:
    iterations: np.ndarray
    empirical_mean: np.ndarray
    envelope: np.ndarray
    frac_exceeded: float
    passed: bool
    slack: float


def proposition1_envelope(traces: list[SolveTrace], m: int, rho: float,
                          slack: float = 0.05,
                          iterations_grid: np.ndarray | None = None) -> EnvelopeReport:
    """Check mean squared error against (1 - 1/m)^i * D0 + rho^2.

    Errors are expressed per coordinate (squared error divided by n), which
    makes ``rho`` directly comparable to the per-sample noise budget; D0 is
    the per-coordinate mean of ||y0 - y_solution||^2 over the trace set.
    Traces that converged before the end of the grid are extended with their
    final value; the extension is exact because a feasible iterate never
    moves again.  The check passes when the empirical mean exceeds the
    envelope at fewer than ``slack`` of the compared iterations.
    """
    if not traces:
        raise ValueError("need at least one trace")
    q = theoretical_rate(m)
    grids = []
    for t in traces:
        if any(r.sqerr_to_reference is None for r in t.recorded):
            raise ValueError("every trace must record squared error to a reference")
        grids.append(t.iterations())
    grid = max(grids, key=len) if iterations_grid is None else \
        np.asarray(iterations_grid, dtype=np.int64)

    curves = np.empty((len(traces), len(grid)))
    for row, t in enumerate(traces):
        its = t.iterations()
        sqs = t.sqerrs() / t.n
        curves[row] = np.interp(grid, its, sqs)  # constant extension past the end
    empirical = curves.mean(axis=0)

    d0 = float(np.mean([t.init_to_solution_sq / t.n for t in traces]))
    envelope = (1.0 - q) ** grid.astype(np.float64) * d0 + rho**2

    exceeded = empirical > envelope
    frac = float(np.mean(exceeded))
    return EnvelopeReport(
        iterations=grid,
        empirical_mean=empirical,
        envelope=envelope,
        frac_exceeded=frac,
        passed=bool(frac < slack),
        slack=slack,
    )
