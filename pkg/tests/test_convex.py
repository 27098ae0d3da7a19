import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcans.convex import (
    NoisyGradientOracle,
    QuadraticProblem,
    check_descent_step,
    check_pl_inequality,
    contraction_check,
    fit_geometric_rate,
    idealized_gcans_shots,
    noise_contribution,
    run_idealized_gcans,
)


def test_idealized_shots_examples():
    quad = QuadraticProblem.isotropic(1, noise_std=1.0)
    # grad = 1 at theta = 1; L = alpha = 1 gives factor 2
    assert idealized_gcans_shots(quad, [1.0], 1.0 - 1e-15) == pytest.approx([2.0])
    two = QuadraticProblem(np.eye(2), np.zeros(2), [2.0, 1.0])
    s = idealized_gcans_shots(two, [0.6, 0.8], 0.5)
    assert s[0] / s[1] == pytest.approx(2.0)
    assert s == pytest.approx((2 * 0.5 / 1.5) * np.array([2.0, 1.0]) * 3.0)


@given(st.floats(0.1, 10))
def test_idealized_shots_scale_with_noise_squared(t):
    base = QuadraticProblem(np.eye(3), np.zeros(3), [1.0, 0.5, 2.0])
    scaled = QuadraticProblem(np.eye(3), np.zeros(3), t * base.noise_std)
    theta = [0.3, -1.0, 0.2]
    ratio = idealized_gcans_shots(scaled, theta, 0.5) / idealized_gcans_shots(base, theta, 0.5)
    assert ratio == pytest.approx(np.full(3, t * t), rel=1e-12)


def test_idealized_shots_undefined_at_optimum():
    with pytest.raises(ValueError):
        idealized_gcans_shots(QuadraticProblem.isotropic(2), [0.0, 0.0], 0.5)


@settings(max_examples=50)
@given(st.lists(st.floats(0.1, 5), min_size=1, max_size=6), st.floats(0.05, 0.95), st.integers(0, 10**6))
def test_noise_contribution_closed_form(sigma, alpha, seed):
    d = len(sigma)
    rng = np.random.default_rng(seed)
    quad = QuadraticProblem.random(d, rng, condition=3.0, noise_std=np.array(sigma))
    alpha = alpha / quad.L
    theta = quad.optimum + rng.standard_normal(d)
    grad = quad.gradient(theta)
    expected = (2 - quad.L * alpha) / (2 * quad.L * alpha) * float(grad @ grad)
    assert noise_contribution(quad, theta, alpha) == pytest.approx(expected, rel=1e-10)


def test_noiseless_isotropic_rate_is_exact():
    quad = QuadraticProblem.isotropic(4, noise_std=0.0)
    gaps = run_idealized_gcans(quad, 0.5, 20, 3, np.random.default_rng(0))
    assert fit_geometric_rate(gaps) == pytest.approx(0.25, rel=1e-10)


def test_gaps_shape_and_shared_start():
    quad = QuadraticProblem.isotropic(3, noise_std=1.0)
    gaps = run_idealized_gcans(quad, 0.5, 7, 11, np.random.default_rng(2))
    assert gaps.shape == (11, 8)
    assert np.all(gaps[:, 0] == gaps[0, 0])
    assert np.all(gaps >= 0)


def test_alpha_out_of_range():
    quad = QuadraticProblem(np.diag([1.0, 4.0]), np.zeros(2), 1.0)
    for alpha in (0.0, 0.25, 0.3, -0.1):
        with pytest.raises(ValueError):
            run_idealized_gcans(quad, alpha, 5, 2, np.random.default_rng(0))


def test_isotropic_expected_contraction():
    # E[gap+] = ((1 - a)^2 + a (2 - a) / 2) gap = 0.625 gap for a = 1/2
    quad = QuadraticProblem.isotropic(5, noise_std=1.0)
    gaps = run_idealized_gcans(quad, 0.5, 12, 4000, np.random.default_rng(1))
    assert fit_geometric_rate(gaps) == pytest.approx(0.625, abs=0.02)
    assert fit_geometric_rate(gaps) <= 1 - 0.5 * quad.mu / 2
    assert np.all(contraction_check(gaps, 0.75))


def test_pl_inequality():
    quad = QuadraticProblem.isotropic(3)
    pts = np.random.default_rng(0).standard_normal((50, 3))
    lhs = 2 * quad.mu * quad.values(pts)
    rhs = np.sum(pts**2, axis=1)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert check_pl_inequality(quad, pts)
    rnd = QuadraticProblem.random(5, np.random.default_rng(1), condition=50.0)
    assert check_pl_inequality(rnd, np.random.default_rng(2).standard_normal((200, 5)))


def test_descent_check_passes_at_random_points():
    rng = np.random.default_rng(5)
    quad = QuadraticProblem.random(4, rng, condition=8.0)
    for _ in range(5):
        theta = quad.optimum + rng.standard_normal(4)
        res = check_descent_step(quad, theta, 0.9 / quad.L, 20_000, rng)
        assert res and res.mean_change <= 0


def test_descent_step_mean_matches_closed_form():
    # A = I, alpha = 1/2, ||g||^2 = 2: E[df] = -alpha ||g||^2 + alpha^2 / 2 (||g||^2 + 3) = -0.375
    quad = QuadraticProblem.isotropic(2, noise_std=1.0)
    res = check_descent_step(quad, [1.0, 1.0], 0.5, 200_000, np.random.default_rng(0))
    assert res.bound == pytest.approx(-0.25)
    assert abs(res.mean_change + 0.375) < 4 * res.stderr
    assert res.passed


def test_oracle_variance():
    quad = QuadraticProblem(np.eye(2), np.zeros(2), [2.0, 0.0])
    samples = NoisyGradientOracle(quad)(np.zeros((200_000, 2)), [4.0, 1.0], np.random.default_rng(0))
    assert samples[:, 0].var() == pytest.approx(1.0, rel=0.02)
    assert np.all(samples[:, 1] == 0)


def test_fit_geometric_rate():
    assert fit_geometric_rate(np.ones(10)) == pytest.approx(1.0)
    assert fit_geometric_rate(0.3 ** np.arange(8)) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        fit_geometric_rate([1.0, 0.0])
    with pytest.raises(ValueError):
        fit_geometric_rate([1.0])


def test_problem_validation():
    with pytest.raises(ValueError):
        QuadraticProblem(np.diag([1.0, -1.0]), np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        QuadraticProblem(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        QuadraticProblem(np.eye(2), np.zeros(2), -1.0)
