"""Shot-frugal SGD optimizers: gCANS, iCANS, Adam and SGD with a geometric
shot schedule (SGD-DS).

All four drive a *problem* object exposing ``dimension``, ``lipschitz``,
``initial_point(rng)``, ``energy(theta)`` and
``gradient_estimate(theta, shots, rng) -> GradientEstimate``; both
:class:`gcans.estimator.VQEProblem` and :class:`gcans.convex.QuadraticProblem`
qualify. Every iteration is charged ``2 * sum(shots)`` against the budget and
the loop runs while the cumulative count is below it, so the last iteration
may overshoot.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .estimator import GradientEstimate

OPTIMIZERS = ("gcans", "icans", "adam", "sgd_ds")

# ceiling on a single component's shot count; keeps sums inside int64
MAX_SHOTS = 2**50


@dataclass(frozen=True)
class OptimizerConfig:
    """Hyperparameters for every optimizer; fields irrelevant to one are ignored.

    The learning rate is ``learning_rate`` if given, else ``lr_scale / L``.
    ``lipschitz`` overrides the problem's own bound.
    """

    budget: int = 2_000_000
    learning_rate: Optional[float] = None
    lr_scale: float = 0.5
    lipschitz: Optional[float] = None
    mu: float = 0.99
    s_min: int = 2
    bias: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    adam_shots: int = 2500
    s0: int = 500
    ratio: float = 1.0025
    max_iterations: Optional[int] = None
    record_theta: bool = False

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("shot budget must be positive")
        if self.s_min < 2:
            raise ValueError("s_min must be >= 2 (a sample std needs two samples)")
        if not 0.0 <= self.mu < 1.0:
            raise ValueError("mu must lie in [0, 1)")
        if self.s0 < 2:
            raise ValueError("s0 must be >= 2")
        if self.ratio < 1.0:
            raise ValueError("common ratio r must be >= 1")
        if self.adam_shots < 2:
            raise ValueError("adam_shots must be >= 2")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.lr_scale <= 0:
            raise ValueError("lr_scale must be positive")
        if self.lipschitz is not None and self.learning_rate is not None:
            if self.lipschitz * self.learning_rate >= 2.0:
                raise ValueError("learning rate must satisfy alpha < 2/L")

    @classmethod
    def from_dict(cls, values: dict) -> "OptimizerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown optimizer config keys: {sorted(unknown)}")
        return cls(**values)

    def resolve(self, problem) -> tuple[float, float]:
        """(alpha, L) for ``problem``."""
        lip = float(self.lipschitz if self.lipschitz is not None else problem.lipschitz)
        alpha = self.learning_rate if self.learning_rate is not None else self.lr_scale / lip
        return float(alpha), lip


def _check_cans_rate(alpha: float, lip: float):
    if not 0.0 < alpha * lip < 2.0:
        raise ValueError(
            f"learning rate {alpha:g} violates 0 < alpha < 2/L = {2.0 / lip:g}"
        )


@dataclass
class OptimizerState:
    theta: np.ndarray
    shots: np.ndarray
    chi_raw: np.ndarray
    xi_raw: np.ndarray
    chi: np.ndarray
    xi: np.ndarray
    k: int = 0
    s_tot: int = 0

    @classmethod
    def initial(cls, theta, s_min: int) -> "OptimizerState":
        theta = np.array(theta, dtype=float)
        d = theta.size
        zeros = np.zeros(d)
        return cls(theta, np.full(d, s_min, dtype=np.int64), zeros.copy(), zeros.copy(),
                   zeros.copy(), zeros.copy())


def update_running_averages(state: OptimizerState, estimate: GradientEstimate, mu: float):
    """Raw EMAs of g and sigma_hat, then bias correction by ``1 - mu**(k+1)``."""
    state.chi_raw = mu * state.chi_raw + (1.0 - mu) * estimate.g
    state.xi_raw = mu * state.xi_raw + (1.0 - mu) * estimate.sigma_hat
    correction = 1.0 - mu ** (state.k + 1)
    state.chi = state.chi_raw / correction
    state.xi = state.xi_raw / correction


def _ceil_shots(x: np.ndarray, s_min: int) -> np.ndarray:
    x = np.where(np.isfinite(x), x, MAX_SHOTS)
    return np.maximum(s_min, np.ceil(np.minimum(x, MAX_SHOTS))).astype(np.int64)


def gcans_allocation(xi, chi, lipschitz: float, alpha: float) -> np.ndarray:
    """Real-valued gCANS shot counts before rounding."""
    xi = np.asarray(xi, dtype=float)
    chi = np.asarray(chi, dtype=float)
    factor = 2.0 * lipschitz * alpha / (2.0 - lipschitz * alpha)
    return factor * xi * xi.sum() / np.dot(chi, chi)


def shots_rule_gcans(xi, chi, lipschitz: float, alpha: float, s_min: int = 2) -> np.ndarray:
    chi = np.asarray(chi, dtype=float)
    if not np.dot(chi, chi) > 0.0:
        return np.full(chi.size, s_min, dtype=np.int64)
    return _ceil_shots(gcans_allocation(xi, chi, lipschitz, alpha), s_min)


def shots_rule_icans(
    xi, chi, lipschitz: float, alpha: float, bias: float, mu: float, k: int, s_min: int = 2
) -> np.ndarray:
    """Per-component iCANS counts, clipped to the count of the component with
    the largest expected gain per shot."""
    xi = np.asarray(xi, dtype=float)
    chi = np.asarray(chi, dtype=float)
    factor = 2.0 * lipschitz * alpha / (2.0 - lipschitz * alpha)
    chi_sq = chi**2
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = factor * (xi**2 + bias * mu**k) / chi_sq
    raw = np.where(chi_sq > 0.0, raw, s_min)
    shots = _ceil_shots(raw, s_min)
    gain = (alpha - 0.5 * lipschitz * alpha**2) * chi_sq - 0.5 * lipschitz * alpha**2 * xi**2 / shots
    s_max = shots[int(np.argmax(gain / shots))]
    return np.minimum(shots, s_max)


def expected_gain(alpha: float, lipschitz: float, grad_norm_sq: float, sigma_sq, shots) -> float:
    """Expected lower bound on the one-step decrease for per-component noise
    variance ``sigma_sq / shots``."""
    shots = np.asarray(shots, dtype=float)
    if np.any(shots < 1):
        raise ValueError("shot counts must be >= 1")
    return float(
        (alpha - 0.5 * lipschitz * alpha**2) * grad_norm_sq
        - 0.5 * lipschitz * alpha**2 * np.sum(np.asarray(sigma_sq, dtype=float) / shots)
    )


def sgd_ds_shots(s0: int, ratio: float, k: int) -> int:
    """``floor(s0 * r**k)`` in exact rational arithmetic; ``r`` is taken at
    its shortest decimal representation (1.0025 means 401/400)."""
    r = Fraction(repr(float(ratio))) if not isinstance(ratio, Fraction) else ratio
    return int(math.floor(s0 * r**k))


@dataclass
class IterationRecord:
    k: int
    cumulative_shots: int
    energy: float
    grad_norm: float
    shots: np.ndarray
    theta: Optional[np.ndarray] = None

    @property
    def shots_this_iteration(self) -> int:
        return 2 * int(self.shots.sum())


CSV_COLUMNS = (
    "k",
    "cumulative_shots",
    "exact_energy",
    "estimated_grad_norm",
    "shots_this_iteration",
    "min_s",
    "max_s",
)


@dataclass
class OptimizationTrace:
    optimizer: str
    theta0: np.ndarray
    initial_energy: float
    records: list = field(default_factory=list)
    final_theta: Optional[np.ndarray] = None
    best_theta: Optional[np.ndarray] = None
    best_energy: float = math.inf

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def total_shots(self) -> int:
        return self.records[-1].cumulative_shots if self.records else 0

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def cumulative_shots(self) -> np.ndarray:
        return np.array([r.cumulative_shots for r in self.records], dtype=np.int64)

    @property
    def final_energy(self) -> float:
        return self.records[-1].energy if self.records else self.initial_energy

    def first_reaching(self, target_energy: float) -> Optional[IterationRecord]:
        """First record whose exact energy is at or below ``target_energy``."""
        for rec in self.records:
            if rec.energy <= target_energy:
                return rec
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.records:
            writer.writerow([
                r.k,
                r.cumulative_shots,
                repr(float(r.energy)),
                repr(float(r.grad_norm)),
                r.shots_this_iteration,
                int(r.shots.min()),
                int(r.shots.max()),
            ])
        return buf.getvalue()


def _minimum_cost(optimizer: str, config: OptimizerConfig, d: int) -> int:
    per_component = {
        "gcans": config.s_min,
        "icans": config.s_min,
        "adam": config.adam_shots,
        "sgd_ds": config.s0,
    }[optimizer]
    return 2 * d * per_component


def _drive(
    name: str,
    problem,
    config: OptimizerConfig,
    rng: np.random.Generator,
    initial_shots: np.ndarray,
    step: Callable[[int, np.ndarray, GradientEstimate], tuple[np.ndarray, np.ndarray]],
    theta0,
) -> OptimizationTrace:
    d = problem.dimension
    if config.budget < _minimum_cost(name, config, d):
        raise ValueError(
            f"budget {config.budget} is below the cost of one {name} iteration "
            f"({_minimum_cost(name, config, d)} shots)"
        )
    theta = problem.initial_point(rng) if theta0 is None else np.array(theta0, dtype=float)
    if theta.shape != (d,):
        raise ValueError(f"initial point must have shape ({d},)")
    e0 = problem.energy(theta)
    trace = OptimizationTrace(name, theta.copy(), e0, best_theta=theta.copy(), best_energy=e0)
    shots = initial_shots
    s_tot = 0
    k = 0
    while s_tot < config.budget:
        if config.max_iterations is not None and k >= config.max_iterations:
            break
        estimate = problem.gradient_estimate(theta, shots, rng)
        s_tot += 2 * int(shots.sum())
        theta, next_shots = step(k, theta, estimate)
        e = problem.energy(theta)
        trace.records.append(IterationRecord(
            k, s_tot, e, float(np.linalg.norm(estimate.g)), shots.copy(),
            theta.copy() if config.record_theta else None,
        ))
        if e < trace.best_energy:
            trace.best_energy, trace.best_theta = e, theta.copy()
        shots = next_shots
        k += 1
    trace.final_theta = theta.copy()
    return trace


def run_gcans(problem, config: OptimizerConfig, rng: np.random.Generator, theta0=None) -> OptimizationTrace:
    alpha, lip = config.resolve(problem)
    _check_cans_rate(alpha, lip)
    d = problem.dimension
    state = OptimizerState.initial(np.zeros(d), config.s_min)

    def step(k, theta, est):
        state.k = k
        update_running_averages(state, est, config.mu)
        theta = theta - alpha * est.g
        return theta, shots_rule_gcans(state.xi, state.chi, lip, alpha, config.s_min)

    return _drive("gcans", problem, config, rng, state.shots, step, theta0)


def run_icans(problem, config: OptimizerConfig, rng: np.random.Generator, theta0=None) -> OptimizationTrace:
    alpha, lip = config.resolve(problem)
    _check_cans_rate(alpha, lip)
    d = problem.dimension
    state = OptimizerState.initial(np.zeros(d), config.s_min)

    def step(k, theta, est):
        state.k = k
        update_running_averages(state, est, config.mu)
        theta = theta - alpha * est.g
        shots = shots_rule_icans(
            state.xi, state.chi, lip, alpha, config.bias, config.mu, k, config.s_min
        )
        return theta, shots

    return _drive("icans", problem, config, rng, state.shots, step, theta0)


def run_adam(problem, config: OptimizerConfig, rng: np.random.Generator, theta0=None) -> OptimizationTrace:
    alpha, _ = config.resolve(problem)
    d = problem.dimension
    m = np.zeros(d)
    v = np.zeros(d)
    fixed = np.full(d, config.adam_shots, dtype=np.int64)
    b1, b2 = config.beta1, config.beta2

    def step(k, theta, est):
        nonlocal m, v
        m = b1 * m + (1.0 - b1) * est.g
        v = b2 * v + (1.0 - b2) * est.g**2
        m_hat = m / (1.0 - b1 ** (k + 1))
        v_hat = v / (1.0 - b2 ** (k + 1))
        return theta - alpha * m_hat / (np.sqrt(v_hat) + config.eps), fixed

    return _drive("adam", problem, config, rng, fixed, step, theta0)


def run_sgd_ds(problem, config: OptimizerConfig, rng: np.random.Generator, theta0=None) -> OptimizationTrace:
    alpha, _ = config.resolve(problem)
    d = problem.dimension
    ratio = Fraction(repr(float(config.ratio)))

    def schedule(k):
        return np.full(d, sgd_ds_shots(config.s0, ratio, k), dtype=np.int64)

    def step(k, theta, est):
        return theta - alpha * est.g, schedule(k + 1)

    return _drive("sgd_ds", problem, config, rng, schedule(0), step, theta0)


RUNNERS = {
    "gcans": run_gcans,
    "icans": run_icans,
    "adam": run_adam,
    "sgd_ds": run_sgd_ds,
}


def run_optimizer(name: str, problem, config: OptimizerConfig, rng, theta0=None) -> OptimizationTrace:
    try:
        runner = RUNNERS[name]
    except KeyError:
        raise ValueError(f"unknown optimizer {name!r}; choose from {OPTIMIZERS}") from None
    return runner(problem, config, rng, theta0)


def with_overrides(config: OptimizerConfig, **changes) -> OptimizerConfig:
    return replace(config, **changes)
