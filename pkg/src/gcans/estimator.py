"""Shot allocation over Pauli terms and the parameter-shift gradient estimator.

Weighted random sampling (WRS) assigns each shot to term ``k`` with
probability ``|c_k| / ||c||_1`` and records ``||c||_1 * sgn(c_k) * m`` for the
+/-1 outcome ``m``. That single-shot value is unbiased for ``<A>`` and is
itself a two-point variable: ``+||c||_1`` with probability
``(1 + <A> / ||c||_1) / 2``. ``ievaluate`` exploits this in its default
``sampling="counts"`` mode, drawing the paired-difference counts directly so
the cost of an estimate does not grow with the number of shots.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .pauli import Observable, lipschitz_bound, one_norm
from .statevector import (
    AnsatzCircuit,
    expectations,
    pauli_expectations,
    prepare_state,
    prepare_states,
)

SHIFT = np.pi / 2


class AllocationStrategy(str, Enum):
    UNIFORM_DETERMINISTIC = "uniform_deterministic"
    WEIGHTED_DETERMINISTIC = "weighted_deterministic"
    WEIGHTED_RANDOM = "weighted_random"


WRS = AllocationStrategy.WEIGHTED_RANDOM


@dataclass
class GradientEstimate:
    g: np.ndarray
    sigma_hat: np.ndarray  # single-shot std of the paired samples X_i (not of g_i)
    shots: np.ndarray

    @property
    def shots_spent(self) -> int:
        """Both shifted circuits get ``shots[i]`` shots each."""
        return 2 * int(np.sum(self.shots))


def _weights(coefficients) -> np.ndarray:
    w = np.abs(np.asarray(coefficients, dtype=float))
    if w.ndim != 1 or w.size == 0 or not np.any(w > 0):
        raise ValueError("need at least one non-zero coefficient")
    return w


def allocate_uniform(coefficients, s_tot: int) -> np.ndarray:
    """Even split; the ``s_tot % K`` leftover shots go to the lowest indices."""
    w = _weights(coefficients)
    if s_tot < 1:
        raise ValueError("s_tot must be >= 1")
    base, extra = divmod(int(s_tot), w.size)
    shots = np.full(w.size, base, dtype=np.int64)
    shots[:extra] += 1
    return shots


def allocate_wds(coefficients, s_tot: int) -> np.ndarray:
    """Floor of the |c|-proportional share, then one leftover shot each to
    the largest-|c| terms (ties to the lower index)."""
    w = _weights(coefficients)
    if s_tot < 1:
        raise ValueError("s_tot must be >= 1")
    shots = np.floor(s_tot * w / w.sum()).astype(np.int64)
    residual = int(s_tot - shots.sum())
    order = np.argsort(-w, kind="stable")
    shots[order[:residual]] += 1
    return shots


def allocate_wrs(coefficients, s_tot: int, rng: np.random.Generator) -> np.ndarray:
    w = _weights(coefficients)
    if s_tot < 1:
        raise ValueError("s_tot must be >= 1")
    return rng.multinomial(int(s_tot), w / w.sum()).astype(np.int64)


def allocate(coefficients, s_tot, strategy, rng=None) -> np.ndarray:
    strategy = AllocationStrategy(strategy)
    if strategy is WRS:
        return allocate_wrs(coefficients, s_tot, rng)
    if strategy is AllocationStrategy.WEIGHTED_DETERMINISTIC:
        return allocate_wds(coefficients, s_tot)
    return allocate_uniform(coefficients, s_tot)


def _sample_terms(term_exp, coeffs, s_tot, strategy, rng):
    """Per-shot values from known per-term expectations.

    Returns ``(values, counts, term_means)``. For WRS the shot order is a
    random permutation of the multinomial assignment, so the values are
    i.i.d. For deterministic strategies each value of term ``k`` is
    ``c_k * m * s_tot / s_k``; their plain mean is the stratified estimator.
    """
    strategy = AllocationStrategy(strategy)
    counts = allocate(coeffs, s_tot, strategy, rng)
    if strategy is not WRS and np.any(counts == 0):
        starved = np.flatnonzero(counts == 0).tolist()
        raise ValueError(
            f"{strategy.value} gives zero shots to terms {starved}; "
            "the estimate would be biased (increase s_tot or use weighted_random)"
        )
    terms = np.repeat(np.arange(len(coeffs)), counts)
    if strategy is WRS:
        terms = rng.permutation(terms)
    prob_plus = np.clip(0.5 * (1.0 + term_exp[terms]), 0.0, 1.0)
    outcomes = np.where(rng.random(terms.size) < prob_plus, 1.0, -1.0)
    if strategy is WRS:
        values = one_norm_of(coeffs) * np.sign(coeffs[terms]) * outcomes
    else:
        values = coeffs[terms] * outcomes * (s_tot / counts[terms])
    sums = np.bincount(terms, weights=outcomes, minlength=len(coeffs))
    with np.errstate(invalid="ignore", divide="ignore"):
        term_means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return values, counts, term_means


def one_norm_of(coeffs) -> float:
    return float(np.sum(np.abs(coeffs)))


def estimate_expectation(psi, obs: Observable, s_tot: int, strategy=WRS, rng=None):
    """Shot-based estimate of ``<A>``; returns ``(mean, per_shot_values)``."""
    if s_tot < 1:
        raise ValueError("s_tot must be >= 1")
    term_exp = pauli_expectations(np.asarray(psi)[None, :], obs)[0]
    values, _, _ = _sample_terms(term_exp, obs.coefficients, s_tot, strategy, rng)
    return float(values.mean()), values


def _validate_shots(shots, d) -> np.ndarray:
    shots = np.asarray(shots)
    if shots.shape != (d,):
        raise ValueError(f"need {d} shot counts, got shape {shots.shape}")
    if np.any(shots < 2):
        raise ValueError("every component needs at least 2 shots for a sample std")
    return shots.astype(np.int64)


def shifted_energies(circ: AnsatzCircuit, obs: Observable, theta) -> tuple[np.ndarray, np.ndarray]:
    """Exact f(theta + pi/2 e_i) and f(theta - pi/2 e_i) for every i."""
    theta = np.asarray(theta, dtype=float)
    d = circ.parameter_count
    if theta.shape != (d,):
        raise ValueError(f"expected {d} parameters, got shape {theta.shape}")
    shift = SHIFT * np.eye(d)
    states = prepare_states(circ, np.vstack([theta + shift, theta - shift]))
    f = expectations(states, obs)
    return f[:d], f[d:]


def exact_gradient(circ: AnsatzCircuit, obs: Observable, theta) -> np.ndarray:
    f_plus, f_minus = shifted_energies(circ, obs, theta)
    return 0.5 * (f_plus - f_minus)


def _wrs_counts(f_plus, f_minus, norm, shots, rng) -> GradientEstimate:
    q_plus = np.clip(0.5 * (1.0 + f_plus / norm), 0.0, 1.0)
    q_minus = np.clip(0.5 * (1.0 + f_minus / norm), 0.0, 1.0)
    # X = norm * (a - b) / 2 with a, b = +/-1 independent: X in {+norm, -norm, 0}
    p_up = q_plus * (1.0 - q_minus)
    p_down = (1.0 - q_plus) * q_minus
    pvals = np.stack([p_up, p_down, np.clip(1.0 - p_up - p_down, 0.0, 1.0)], axis=1)
    pvals /= pvals.sum(axis=1, keepdims=True)
    draws = rng.multinomial(shots, pvals)
    n_up, n_down = draws[:, 0].astype(float), draws[:, 1].astype(float)
    s = shots.astype(float)
    g = norm * (n_up - n_down) / s
    var = (norm**2 * (n_up + n_down) - s * g**2) / (s - 1.0)
    return GradientEstimate(g, np.sqrt(np.maximum(var, 0.0)), shots)


def ievaluate(
    circ: AnsatzCircuit,
    obs: Observable,
    theta,
    shots,
    strategy=WRS,
    rng: np.random.Generator | None = None,
    sampling: str = "counts",
) -> GradientEstimate:
    """Parameter-shift gradient estimate with ``shots[i]`` shots on each of the
    two shifted circuits of component ``i``.

    With WRS the j-th shot at ``theta + pi/2 e_i`` is paired with the j-th
    shot at ``theta - pi/2 e_i`` into ``X_ij = (A+_ij - A-_ij) / 2``; ``g_i``
    is their mean and ``sigma_hat_i`` their unbiased sample std.
    ``sampling="shots"`` materialises every shot; ``"counts"`` draws the same
    distribution through sufficient statistics.

    Deterministic strategies estimate both energies by stratified term means;
    ``sigma_hat_i`` is then ``sqrt(shots_i * Var_hat(g_i))`` so that
    ``sigma_hat**2 / shots`` is still the variance estimate of ``g``.
    """
    rng = np.random.default_rng() if rng is None else rng
    strategy = AllocationStrategy(strategy)
    d = circ.parameter_count
    shots = _validate_shots(shots, d)
    theta = np.asarray(theta, dtype=float)
    norm = one_norm(obs)

    if strategy is WRS and sampling == "counts":
        f_plus, f_minus = shifted_energies(circ, obs, theta)
        return _wrs_counts(f_plus, f_minus, norm, shots, rng)
    if sampling not in ("counts", "shots"):
        raise ValueError(f"unknown sampling mode {sampling!r}")

    shift = SHIFT * np.eye(d)
    states = prepare_states(circ, np.vstack([theta + shift, theta - shift]))
    term_exp = pauli_expectations(states, obs)
    coeffs = obs.coefficients
    g = np.empty(d)
    sigma = np.empty(d)
    for i in range(d):
        s = int(shots[i])
        plus, n_plus, m_plus = _sample_terms(term_exp[i], coeffs, s, strategy, rng)
        minus, n_minus, m_minus = _sample_terms(term_exp[d + i], coeffs, s, strategy, rng)
        if strategy is WRS:
            x = 0.5 * (plus - minus)
            g[i] = x.mean()
            sigma[i] = x.std(ddof=1)
        else:
            g[i] = 0.5 * (plus.mean() - minus.mean())
            var_plus = np.sum(coeffs**2 * (1.0 - m_plus**2) / n_plus)
            var_minus = np.sum(coeffs**2 * (1.0 - m_minus**2) / n_minus)
            sigma[i] = np.sqrt(s * 0.25 * (var_plus + var_minus))
    return GradientEstimate(g, sigma, shots)


@dataclass
class VQEProblem:
    """Energy landscape of ``obs`` over the ansatz, with shot-noisy gradients.

    ``noiseless=True`` substitutes the exact gradient (sigma_hat = 0); the
    shot ledger is still charged.
    """

    circuit: AnsatzCircuit
    observable: Observable
    strategy: AllocationStrategy = WRS
    sampling: str = "counts"
    noiseless: bool = False

    def __post_init__(self):
        if self.circuit.n != self.observable.n:
            raise ValueError("circuit and observable act on different qubit counts")
        self.strategy = AllocationStrategy(self.strategy)

    @property
    def dimension(self) -> int:
        return self.circuit.parameter_count

    @property
    def lipschitz(self) -> float:
        return lipschitz_bound(self.observable, self.dimension)

    @property
    def pauli_terms(self) -> int:
        return len(self.observable)

    def initial_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 2.0 * np.pi, self.dimension)

    def energy(self, theta) -> float:
        psi = prepare_state(self.circuit, theta)
        return float(expectations(psi[None, :], self.observable)[0])

    def gradient(self, theta) -> np.ndarray:
        return exact_gradient(self.circuit, self.observable, theta)

    def gradient_estimate(self, theta, shots, rng) -> GradientEstimate:
        if self.noiseless:
            shots = _validate_shots(shots, self.dimension)
            return GradientEstimate(self.gradient(theta), np.zeros(self.dimension), shots)
        return ievaluate(
            self.circuit, self.observable, theta, shots, self.strategy, rng, self.sampling
        )
