import numpy as np
import pytest

from helpers import brute_force_intervals, make_capture
from uno.modulo import ModuloSampleVector
from uno.onebit import DitherPlan, OneBitCapture, feasible_intervals, quantize, violation
from uno.rka import (SolverConfig, kaczmarz_step, projection_coefficient,
                     proposition1_envelope, solve, theoretical_rate)


def capture_from_constraints(signs, taus, lam=1.0):
    """Single-coordinate capture built from explicit sign/threshold pairs."""
    signs = np.asarray(signs)
    taus = np.asarray(taus, dtype=float)
    y_probe = np.zeros(1)
    gamma = taus.reshape(1, -1)
    bits = signs.reshape(1, -1).astype(np.int8)
    cap = quantize(ModuloSampleVector(y_probe, lam, 1.0), gamma)
    cap.bits = bits  # override with the handcrafted signs
    return cap


def test_projection_coefficient_branches():
    assert projection_coefficient(0.5) == 0.5
    assert projection_coefficient(-0.5) == 0.0
    assert projection_coefficient(-0.5, equality=True) == -0.5


def test_kaczmarz_step_inequality_and_equality():
    c = np.array([3.0, 4.0])
    stepped = kaczmarz_step(np.zeros(2), c, 10.0)
    assert np.allclose(stepped, [1.2, 1.6])
    assert np.dot(c, stepped) == pytest.approx(10.0)
    # satisfied inequality row leaves the iterate alone
    assert np.array_equal(kaczmarz_step(np.array([10.0, 10.0]), c, 10.0),
                          [10.0, 10.0])
    # the equality branch projects from both sides
    eq = kaczmarz_step(np.array([10.0, 10.0]), c, 10.0, equality=True)
    assert np.dot(c, eq) == pytest.approx(10.0)


def test_already_feasible_start_returns_midpoint_unchanged():
    rng = np.random.default_rng(0)
    y = rng.uniform(-1, 1, 25)
    cap = make_capture(y, m=15, seed=2)
    lo, hi = feasible_intervals(cap)
    midpoint = 0.5 * (lo + hi)
    got, trace = solve(cap, SolverConfig(rng_seed=1))
    assert np.array_equal(got, midpoint)
    assert trace.iterations_run == 0
    assert trace.converged
    assert trace.recorded[0].violation == 0.0


def test_one_dimensional_hand_case():
    # constraints: y >= 0.3 and y <= 0.6, start at zero
    cap = capture_from_constraints([1, -1], [0.3, 0.6])
    config = SolverConfig(max_iterations=50, feasibility_tol=1e-12,
                          trace_stride=1, rng_seed=0, init="zero")
    y_hat, trace = solve(cap, config)
    assert trace.converged
    assert 0.3 <= y_hat[0] <= 0.6
    # the first projection of the lower constraint lands exactly on 0.3
    assert y_hat[0] == 0.3


def test_two_coordinate_toy_lands_in_interval_oracle():
    y_star = np.array([0.2, -0.4])
    cap = make_capture(y_star, m=100, seed=7)
    config = SolverConfig(max_iterations=10_000, feasibility_tol=1e-9,
                          trace_stride=1000, rng_seed=3, init="zero")
    y_hat, trace = solve(cap, config)
    assert trace.converged
    lo, hi = brute_force_intervals(cap.bits, cap.thresholds(), 1.0)
    assert np.all(y_hat >= lo - 1e-12) and np.all(y_hat <= hi + 1e-12)


def test_single_coordinate_update_per_iteration():
    rng = np.random.default_rng(5)
    y = rng.uniform(-1, 1, 10)
    cap = make_capture(y, m=5, seed=9)
    config = SolverConfig(max_iterations=1, feasibility_tol=0.0,
                          trace_stride=1, rng_seed=4, init="zero")
    y_hat, _ = solve(cap, config)
    assert np.count_nonzero(y_hat) <= 1


def test_iterates_stay_inside_hypercube():
    rng = np.random.default_rng(6)
    y = rng.uniform(-1, 1, 40)
    cap = make_capture(y, m=10, seed=1)
    config = SolverConfig(max_iterations=5000, feasibility_tol=1e-9,
                          trace_stride=100, rng_seed=8, init="zero")
    y_hat, _ = solve(cap, config)
    assert np.all(np.abs(y_hat) <= 1.0)


def test_solver_determinism():
    rng = np.random.default_rng(7)
    y = rng.uniform(-1, 1, 30)
    cap = make_capture(y, m=12, seed=21)
    config = SolverConfig(max_iterations=20_000, feasibility_tol=1e-9,
                          trace_stride=500, rng_seed=77, init="zero")
    a, ta = solve(cap, config, reference=y)
    b, tb = solve(cap, config, reference=y)
    assert np.array_equal(a, b)
    assert ta.recorded == tb.recorded
    assert ta.iterations_run == tb.iterations_run


def test_non_convergence_is_reported():
    rng = np.random.default_rng(8)
    y = rng.uniform(0.5, 0.9, 50)  # zero start violates all lower constraints
    cap = make_capture(y, m=10, seed=3)
    config = SolverConfig(max_iterations=5, feasibility_tol=1e-12,
                          trace_stride=1, rng_seed=0, init="zero")
    _, trace = solve(cap, config)
    assert not trace.converged
    assert trace.iterations_run == 5


def test_histogram_counts_every_draw():
    rng = np.random.default_rng(9)
    y = rng.uniform(-1, 1, 6)
    cap = make_capture(y, m=4, seed=5)
    config = SolverConfig(max_iterations=300, feasibility_tol=0.0,
                          trace_stride=50, rng_seed=2, init="zero",
                          collect_histogram=True)
    _, trace = solve(cap, config)
    assert trace.selected_row_histogram.sum() == trace.iterations_run


def test_theoretical_rate():
    assert theoretical_rate(1) == 1.0
    assert theoretical_rate(25) == 0.04
    assert (1 - theoretical_rate(25)) ** 100 == pytest.approx(0.0169, abs=2e-4)
    with pytest.raises(ValueError):
        theoretical_rate(0)


def test_empirical_decay_to_converged_point():
    rng = np.random.default_rng(10)
    y = rng.uniform(-1, 1, 50)
    cap = make_capture(y, m=10, seed=17)
    slopes = []
    for seed in range(20):
        config = SolverConfig(max_iterations=4000, feasibility_tol=1e-12,
                              trace_stride=200, rng_seed=seed, init="zero")
        y_inf, _ = solve(cap, config)
        _, trace = solve(cap, config, reference=y_inf)
        sq = trace.sqerrs()
        its = trace.iterations()
        keep = sq > 0
        if keep.sum() >= 3:
            slope = np.polyfit(its[keep], np.log(sq[keep]), 1)[0]
            slopes.append(slope)
    assert np.mean(slopes) < 0


def test_envelope_on_already_feasible_trace():
    rng = np.random.default_rng(11)
    y = rng.uniform(-1, 1, 20)
    cap = make_capture(y, m=30, seed=23)
    config = SolverConfig(max_iterations=100, feasibility_tol=1e-9,
                          trace_stride=10, rng_seed=0)  # midpoint: feasible at once
    _, trace = solve(cap, config, reference=y)
    report = proposition1_envelope([trace], m=30, rho=0.125)
    assert report.envelope[0] >= report.empirical_mean[0]
    assert report.passed


def test_envelope_requires_reference():
    rng = np.random.default_rng(12)
    y = rng.uniform(-1, 1, 10)
    cap = make_capture(y, m=5, seed=2)
    _, trace = solve(cap, SolverConfig(rng_seed=0))
    with pytest.raises(ValueError):
        proposition1_envelope([trace], m=5, rho=0.1)
    with pytest.raises(ValueError):
        proposition1_envelope([], m=5, rho=0.1)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(trace_stride=0)
    with pytest.raises(ValueError):
        SolverConfig(feasibility_tol=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(init="warm")


def test_empty_capture_rejected():
    with pytest.raises(ValueError):
        DitherPlan(n=1, m=0, lam=1.0, seed=0)
