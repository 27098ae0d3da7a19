import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gcans.estimator import (
    AllocationStrategy,
    VQEProblem,
    allocate_uniform,
    allocate_wds,
    allocate_wrs,
    estimate_expectation,
    exact_gradient,
    ievaluate,
)
from gcans.pauli import Observable, one_norm, tfim
from gcans.statevector import (
    build_ansatz,
    energy,
    exact_pauli_expectation,
    prepare_state,
)


def finite_difference(circ, obs, theta, step=1e-5):
    grad = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = step
        grad[i] = (energy(circ, obs, theta + e) - energy(circ, obs, theta - e)) / (2 * step)
    return grad


# --- allocation ---------------------------------------------------------------

def test_wds_examples():
    assert list(allocate_wds([0.5, 0.3, 0.2], 10)) == [5, 3, 2]
    assert list(allocate_wds([0.5, 0.5], 3)) == [2, 1]
    assert list(allocate_wds([1.0], 17)) == [17]
    assert list(allocate_wds([-0.2, 0.6, 0.2], 4)) == [1, 3, 0]


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=12).filter(lambda c: any(abs(x) > 1e-3 for x in c)),
       st.integers(1, 10**6))
def test_wds_conserves_shots(coeffs, s_tot):
    shots = allocate_wds(coeffs, s_tot)
    assert shots.sum() == s_tot
    assert np.all(shots >= 0)


def test_allocation_errors():
    with pytest.raises(ValueError):
        allocate_wds([0.0, 0.0], 10)
    with pytest.raises(ValueError):
        allocate_wrs([0.0], 10, np.random.default_rng(0))
    with pytest.raises(ValueError):
        allocate_wds([1.0], 0)


def test_uniform_split():
    assert list(allocate_uniform([1, 2, 3], 10)) == [4, 3, 3]


def test_wrs_mean_within_three_sigma():
    rng = np.random.default_rng(0)
    c = np.array([0.5, -0.3, 0.2])
    p = np.abs(c) / np.abs(c).sum()
    draws = np.array([allocate_wrs(c, 50, rng) for _ in range(10**4)])
    assert np.all(draws.sum(axis=1) == 50)
    sem = np.sqrt(50 * p * (1 - p) / 10**4)
    assert np.all(np.abs(draws.mean(axis=0) - 50 * p) < 3 * sem)


def test_wrs_single_term_and_single_shot():
    rng = np.random.default_rng(1)
    assert list(allocate_wrs([2.0], 123, rng)) == [123]
    for _ in range(20):
        assert allocate_wrs([1.0, 2.0, 3.0], 1, rng).sum() == 1


# --- expectation estimates ----------------------------------------------------

def test_estimate_eigenstate_exact():
    zero = np.array([1, 0], dtype=complex)
    mean, values = estimate_expectation(zero, Observable([(1.0, "Z")]), 77, rng=np.random.default_rng(0))
    assert mean == 1.0
    assert values.size == 77


def test_estimate_tfim_concentration():
    # per-shot variance <= one_norm**2 = 16, so the std of the mean is <= 0.004
    h = tfim(2, 1.5)
    zero = np.array([1, 0, 0, 0], dtype=complex)
    mean, _ = estimate_expectation(zero, h, 10**6, rng=np.random.default_rng(2))
    assert abs(mean - 1.0) < 0.02


def wrs_single_shot_variance(psi, obs):
    """Enumerate (term, outcome) pairs of one WRS shot."""
    c = obs.coefficients
    norm = np.abs(c).sum()
    first = second = 0.0
    for k, m in itertools.product(range(len(c)), (1, -1)):
        p_term = abs(c[k]) / norm
        p_out = 0.5 * (1 + m * exact_pauli_expectation(psi, obs.strings[k]))
        v = norm * np.sign(c[k]) * m
        first += p_term * p_out * v
        second += p_term * p_out * v * v
    return first, second - first**2


def test_wrs_estimator_mean_and_variance_match_enumeration():
    obs = Observable([(0.7, "ZI"), (-0.4, "XX"), (0.25, "IY"), (0.1, "II")])
    psi = prepare_state(build_ansatz(2, 2), np.random.default_rng(4).uniform(0, 6, 8))
    mean_ref, var_ref = wrs_single_shot_variance(psi, obs)
    rng = np.random.default_rng(9)
    s, reps = 20, 20000
    means = np.array([estimate_expectation(psi, obs, s, rng=rng)[0] for _ in range(reps)])
    assert abs(means.mean() - mean_ref) < 4 * np.sqrt(var_ref / s / reps)
    # sample variance of a mean of reps draws: relative std ~ sqrt(2 / reps) ~ 1%
    assert means.var(ddof=1) == pytest.approx(var_ref / s, rel=0.05)


def test_deterministic_strategies_are_unbiased_and_reject_starvation():
    obs = Observable([(0.7, "ZI"), (-0.4, "XX"), (0.25, "IY")])
    psi = prepare_state(build_ansatz(2, 2), np.random.default_rng(4).uniform(0, 6, 8))
    exact = sum(c * exact_pauli_expectation(psi, p) for c, p in obs.terms)
    rng = np.random.default_rng(1)
    for strategy in ("weighted_deterministic", "uniform_deterministic"):
        means = [estimate_expectation(psi, obs, 30, strategy, rng)[0] for _ in range(4000)]
        assert abs(np.mean(means) - exact) < 4 * np.std(means) / np.sqrt(4000)
    with pytest.raises(ValueError, match="zero shots"):
        estimate_expectation(psi, obs, 2, "weighted_deterministic", rng)


# --- gradients ----------------------------------------------------------------

@pytest.mark.parametrize("seed", range(6))
def test_exact_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    circ = build_ansatz(3, 2)
    obs = Observable([(c, s) for c, s in zip(rng.normal(size=4), ["ZZI", "XIY", "IXX", "YZI"])])
    theta = rng.uniform(0, 2 * np.pi, circ.parameter_count)
    assert np.max(np.abs(exact_gradient(circ, obs, theta) - finite_difference(circ, obs, theta))) < 1e-6


def test_single_qubit_gradient_is_minus_sine():
    circ = build_ansatz(1, 1)
    obs = Observable([(1.0, "Z")])
    for ty in np.linspace(-3, 3, 7):
        g = exact_gradient(circ, obs, np.array([ty, 0.3]))
        assert g[0] == pytest.approx(-np.sin(ty), abs=1e-14)
        assert g[1] == pytest.approx(0.0, abs=1e-14)


def test_gradient_at_zero_is_bounded():
    h = tfim(4, 1.5)
    g = exact_gradient(build_ansatz(4, 6), h, np.zeros(48))
    assert np.all(np.isfinite(g))
    assert np.all(np.abs(g) <= one_norm(h))


def test_ievaluate_rejects_small_shot_counts():
    circ = build_ansatz(1, 1)
    obs = Observable([(1.0, "Z")])
    with pytest.raises(ValueError):
        ievaluate(circ, obs, np.zeros(2), [1, 5], rng=np.random.default_rng(0))
    with pytest.raises(ValueError):
        ievaluate(circ, obs, np.zeros(2), [5, 5, 5], rng=np.random.default_rng(0))


@pytest.mark.parametrize("sampling", ["counts", "shots"])
def test_ievaluate_unbiased_at_critical_point(sampling):
    circ = build_ansatz(1, 1)
    obs = Observable([(1.0, "Z"), (0.5, "X")])
    # f = cos(ty) + 0.5 sin(ty) cos(tz); stationary at tz = pi/2, ty = 0
    theta = np.array([0.0, np.pi / 2])
    assert np.allclose(exact_gradient(circ, obs, theta), 0.0, atol=1e-14)
    rng = np.random.default_rng(3)
    gs = np.array([ievaluate(circ, obs, theta, [10, 10], rng=rng, sampling=sampling).g for _ in range(4000)])
    sem = gs.std(axis=0, ddof=1) / np.sqrt(len(gs))
    assert np.all(np.abs(gs.mean(axis=0)) < 4 * sem)


def test_ievaluate_bounds_and_shot_accounting():
    h = tfim(2, 1.5)
    circ = build_ansatz(2, 2)
    rng = np.random.default_rng(0)
    theta = rng.uniform(0, 6, 8)
    for sampling in ("counts", "shots"):
        est = ievaluate(circ, h, theta, np.arange(2, 10), rng=rng, sampling=sampling)
        assert np.all(np.abs(est.g) <= one_norm(h) + 1e-12)
        assert np.all(est.sigma_hat >= 0)
        assert est.shots_spent == 2 * sum(range(2, 10))


def test_counts_and_shots_modes_agree_in_distribution():
    h = tfim(2, 1.5)
    circ = build_ansatz(2, 1)
    theta = np.random.default_rng(8).uniform(0, 6, 4)
    shots = np.array([3, 5, 8, 13])
    reps = 4000
    stats = {}
    for mode in ("counts", "shots"):
        rng = np.random.default_rng(21)
        est = [ievaluate(circ, h, theta, shots, rng=rng, sampling=mode) for _ in range(reps)]
        g = np.array([e.g for e in est])
        sig = np.array([e.sigma_hat for e in est])
        stats[mode] = (g.mean(0), g.std(0), sig.mean(0), sig.std(0))
    g_c, sd_c, s_c, ssd_c = stats["counts"]
    g_s, sd_s, s_s, ssd_s = stats["shots"]
    assert np.all(np.abs(g_c - g_s) < 4 * np.sqrt((sd_c**2 + sd_s**2) / reps))
    assert np.all(np.abs(s_c - s_s) < 4 * np.sqrt((ssd_c**2 + ssd_s**2) / reps))


def test_ievaluate_variance_law():
    # Var[g_i] = Var[X_i] / s_i, with Var[X_i] taken from the mean sample variance
    h = tfim(2, 1.5)
    circ = build_ansatz(2, 2)
    theta = np.random.default_rng(1).uniform(0, 6, 8)
    rng = np.random.default_rng(2)
    s, reps = 6, 1000
    est = [ievaluate(circ, h, theta, np.full(8, s), rng=rng) for _ in range(reps)]
    g = np.array([e.g for e in est])
    sample_vars = np.array([e.sigma_hat**2 for e in est])
    predicted = sample_vars.mean(axis=0) / s
    emp = g.var(axis=0, ddof=1)
    centered = g - g.mean(axis=0)
    se_emp = np.sqrt(((centered**4).mean(axis=0) - emp**2) / reps)
    se_pred = sample_vars.std(axis=0, ddof=1) / s / np.sqrt(reps)
    assert np.all(np.abs(emp - predicted) < 3 * np.hypot(se_emp, se_pred))


def test_ievaluate_deterministic_strategy():
    h = tfim(2, 1.5)
    circ = build_ansatz(2, 1)
    theta = np.random.default_rng(3).uniform(0, 6, 4)
    exact = exact_gradient(circ, h, theta)
    rng = np.random.default_rng(4)
    gs = np.array([ievaluate(circ, h, theta, np.full(4, 40), "weighted_deterministic", rng).g
                   for _ in range(2000)])
    sem = gs.std(axis=0, ddof=1) / np.sqrt(len(gs))
    assert np.all(np.abs(gs.mean(axis=0) - exact) < 4 * sem)


def test_ievaluate_deterministic_for_fixed_seed():
    h = tfim(3, 1.5)
    circ = build_ansatz(3, 2)
    theta = np.linspace(0, 1, 12)
    a = ievaluate(circ, h, theta, np.full(12, 9), rng=np.random.default_rng(5))
    b = ievaluate(circ, h, theta, np.full(12, 9), rng=np.random.default_rng(5))
    assert np.array_equal(a.g, b.g) and np.array_equal(a.sigma_hat, b.sigma_hat)


def test_vqe_problem_interface():
    prob = VQEProblem(build_ansatz(2, 2), tfim(2, 1.5))
    assert prob.dimension == 8
    assert prob.lipschitz == 8 * 4.0
    assert prob.pauli_terms == 3
    assert prob.strategy is AllocationStrategy.WEIGHTED_RANDOM
    with pytest.raises(ValueError):
        VQEProblem(build_ansatz(3, 2), tfim(2, 1.5))
    noiseless = VQEProblem(build_ansatz(2, 2), tfim(2, 1.5), noiseless=True)
    theta = np.ones(8)
    est = noiseless.gradient_estimate(theta, np.full(8, 2), None)
    assert np.array_equal(est.g, exact_gradient(noiseless.circuit, noiseless.observable, theta))
