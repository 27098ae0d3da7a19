"""Strongly convex quadratic testbed for the idealized gCANS rule.

``f(theta) = 0.5 (theta - theta*)^T A (theta - theta*)`` with additive
Gaussian gradient noise of variance ``sigma_i**2 / s_i``; shot counts may be
fractional. With the true gradient and true sigma in the shot rule, the
expected one-step decrease is at least ``alpha / 4 * ||grad f||**2`` and the
expected gap contracts by ``1 - alpha * mu / 2`` per step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import GradientEstimate


@dataclass
class QuadraticProblem:
    A: np.ndarray
    optimum: np.ndarray
    noise_std: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.optimum = np.asarray(self.optimum, dtype=float)
        d = self.optimum.size
        self.noise_std = np.broadcast_to(np.asarray(self.noise_std, dtype=float), (d,)).copy()
        if self.A.shape != (d, d) or not np.allclose(self.A, self.A.T):
            raise ValueError("A must be a symmetric d x d matrix")
        eig = np.linalg.eigvalsh(self.A)
        if eig[0] <= 0:
            raise ValueError("A must be positive definite")
        if np.any(self.noise_std < 0):
            raise ValueError("noise std must be non-negative")
        self.mu = float(eig[0])
        self.L = float(eig[-1])

    @classmethod
    def isotropic(cls, d: int, noise_std=1.0, scale: float = 1.0) -> "QuadraticProblem":
        return cls(scale * np.eye(d), np.zeros(d), noise_std)

    @classmethod
    def random(cls, d: int, rng: np.random.Generator, condition: float = 10.0, noise_std=None):
        """Random rotation of a spectrum spread log-uniformly over [1, condition]."""
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        spectrum = np.geomspace(1.0, condition, d)
        A = (q * spectrum) @ q.T
        A = 0.5 * (A + A.T)
        sigma = rng.uniform(0.5, 2.0, d) if noise_std is None else noise_std
        return cls(A, rng.standard_normal(d), sigma)

    @property
    def dimension(self) -> int:
        return self.optimum.size

    @property
    def lipschitz(self) -> float:
        return self.L

    @property
    def optimal_value(self) -> float:
        return 0.0

    def initial_point(self, rng: np.random.Generator) -> np.ndarray:
        return self.optimum + rng.standard_normal(self.dimension)

    def energy(self, theta) -> float:
        delta = np.asarray(theta, dtype=float) - self.optimum
        return float(0.5 * delta @ self.A @ delta)

    def values(self, thetas) -> np.ndarray:
        """f for each row of ``thetas``."""
        delta = np.atleast_2d(thetas) - self.optimum
        return 0.5 * np.einsum("ti,ij,tj->t", delta, self.A, delta)

    def gradient(self, theta) -> np.ndarray:
        return (np.asarray(theta, dtype=float) - self.optimum) @ self.A

    def gradient_estimate(self, theta, shots, rng) -> GradientEstimate:
        """Noisy oracle in the optimizer interface; ``sigma_hat`` is the true sigma."""
        shots = np.asarray(shots, dtype=float)
        grad = self.gradient(theta)
        noise = self.noise_std / np.sqrt(shots) * rng.standard_normal(grad.shape)
        return GradientEstimate(grad + noise, self.noise_std.copy(), shots)


class NoisyGradientOracle:
    """Unbiased gradient samples with per-component variance ``sigma_i**2 / s_i``."""

    def __init__(self, problem: QuadraticProblem):
        self.problem = problem

    def __call__(self, thetas, shots, rng: np.random.Generator) -> np.ndarray:
        thetas = np.atleast_2d(thetas)
        shots = np.broadcast_to(np.asarray(shots, dtype=float), thetas.shape)
        grads = (thetas - self.problem.optimum) @ self.problem.A
        sigma = self.problem.noise_std
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(sigma > 0, sigma / np.sqrt(shots), 0.0)
        return grads + scale * rng.standard_normal(grads.shape)


def _check_rate(problem: QuadraticProblem, alpha: float):
    limit = min(1.0 / problem.L, 2.0 / problem.mu)
    if not 0.0 < alpha < limit:
        raise ValueError(f"alpha must lie in (0, {limit:g}) for this problem, got {alpha:g}")


def idealized_gcans_shots(problem: QuadraticProblem, theta, alpha: float) -> np.ndarray:
    """Real-valued gCANS counts from the true gradient and true sigma; rows of
    ``theta`` are handled independently."""
    theta = np.asarray(theta, dtype=float)
    grads = np.atleast_2d(problem.gradient(theta))
    norm_sq = np.einsum("ti,ti->t", grads, grads)
    if np.any(norm_sq == 0.0):
        raise ValueError("gradient vanishes; the idealized shot rule is undefined at the optimum")
    sigma = problem.noise_std
    factor = 2.0 * problem.L * alpha / (2.0 - problem.L * alpha)
    shots = factor * sigma[None, :] * sigma.sum() / norm_sq[:, None]
    return shots[0] if theta.ndim == 1 else shots


def noise_contribution(problem: QuadraticProblem, theta, alpha: float) -> float:
    """``sum_i sigma_i**2 / s_i`` under idealized shots (components with
    sigma_i = 0 contribute nothing)."""
    shots = idealized_gcans_shots(problem, theta, alpha)
    sigma = problem.noise_std
    mask = sigma > 0
    return float(np.sum(sigma[mask] ** 2 / shots[mask]))


def _sgd_step(problem, oracle, thetas, alpha, rng):
    """One idealized-gCANS SGD step for every row; rows already at the optimum stay put."""
    grads = (thetas - problem.optimum) @ problem.A
    moving = np.einsum("ti,ti->t", grads, grads) > 0.0
    out = thetas.copy()
    if np.any(moving):
        shots = idealized_gcans_shots(problem, thetas[moving], alpha)
        out[moving] = thetas[moving] - alpha * oracle(thetas[moving], shots, rng)
    return out


def run_idealized_gcans(
    problem: QuadraticProblem,
    alpha: float,
    iterations: int,
    trials: int,
    rng: np.random.Generator,
    theta0=None,
) -> np.ndarray:
    """Optimality gaps ``f(theta_k) - f*`` for k = 0..iterations; shape (trials, iterations + 1).

    All trials start from ``theta0`` (default: one standard-normal offset
    from the optimum, shared by every trial).
    """
    _check_rate(problem, alpha)
    if theta0 is None:
        theta0 = problem.initial_point(rng)
    oracle = NoisyGradientOracle(problem)
    thetas = np.tile(np.asarray(theta0, dtype=float), (trials, 1))
    gaps = np.empty((trials, iterations + 1))
    gaps[:, 0] = problem.values(thetas)
    for k in range(iterations):
        thetas = _sgd_step(problem, oracle, thetas, alpha, rng)
        gaps[:, k + 1] = problem.values(thetas)
    return gaps - problem.optimal_value


def fit_geometric_rate(gaps) -> float:
    """exp of the least-squares slope of log(mean gap) against k."""
    gaps = np.asarray(gaps, dtype=float)
    mean = gaps.mean(axis=0) if gaps.ndim == 2 else gaps
    if mean.size < 2:
        raise ValueError("need at least two iterates to fit a rate")
    if np.any(mean <= 0):
        raise ValueError("mean gap is non-positive; truncate the converged tail first")
    k = np.arange(mean.size)
    slope = np.polyfit(k, np.log(mean), 1)[0]
    return float(np.exp(slope))


def contraction_check(gaps, rate: float, n_sigma: float = 3.0) -> np.ndarray:
    """Per step, whether ``E[gap_{k+1}] <= rate * E[gap_k]`` holds within
    ``n_sigma`` standard errors of the paired trial differences."""
    gaps = np.asarray(gaps, dtype=float)
    diff = gaps[:, 1:] - rate * gaps[:, :-1]
    stderr = diff.std(axis=0, ddof=1) / np.sqrt(gaps.shape[0])
    return diff.mean(axis=0) <= n_sigma * stderr


def check_pl_inequality(problem: QuadraticProblem, points, rtol: float = 1e-9) -> bool:
    """``2 mu (f - f*) <= ||grad f||**2`` at every row of ``points``."""
    points = np.atleast_2d(points)
    lhs = 2.0 * problem.mu * (problem.values(points) - problem.optimal_value)
    grads = (points - problem.optimum) @ problem.A
    rhs = np.einsum("ti,ti->t", grads, grads)
    return bool(np.all(lhs <= rhs + rtol * np.maximum(np.abs(rhs), 1e-300)))


@dataclass
class DescentCheck:
    passed: bool
    mean_change: float
    bound: float
    stderr: float

    def __bool__(self) -> bool:
        return self.passed


def check_descent_step(
    problem: QuadraticProblem,
    theta,
    alpha: float,
    trials: int,
    rng: np.random.Generator,
    n_sigma: float = 3.0,
) -> DescentCheck:
    """Monte Carlo test of ``E[f(theta+)] - f(theta) <= -alpha/4 ||grad f(theta)||**2``
    for one idealized-gCANS step."""
    _check_rate(problem, alpha)
    theta = np.asarray(theta, dtype=float)
    grad = problem.gradient(theta)
    bound = -0.25 * alpha * float(grad @ grad)
    if not np.any(grad):
        return DescentCheck(True, 0.0, 0.0, 0.0)
    oracle = NoisyGradientOracle(problem)
    thetas = np.tile(theta, (trials, 1))
    shots = idealized_gcans_shots(problem, theta, alpha)
    after = thetas - alpha * oracle(thetas, shots, rng)
    change = problem.values(after) - problem.energy(theta)
    mean = float(change.mean())
    stderr = float(change.std(ddof=1) / np.sqrt(trials))
    return DescentCheck(mean <= bound + n_sigma * stderr, mean, bound, stderr)
