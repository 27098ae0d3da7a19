"""Statevector simulation of the hardware-efficient SU(2) 2-local ansatz.

States are plain complex numpy arrays of length ``2**n``; batches have shape
``(B, 2**n)``. Qubit 0 is the most significant bit of the basis index, so
letter ``q`` of a Pauli string acts on bit ``n - 1 - q`` of the index.

Rotations follow ``R_Y(t) = exp(-i t Y / 2)`` and ``R_Z(t) = exp(-i t Z / 2)``,
which makes the pi/2 parameter-shift rule exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli import Observable, PauliString

MAX_DENSE_QUBITS = 12


@dataclass(frozen=True)
class AnsatzCircuit:
    """Depth-``depth`` block circuit: every block applies R_Y then R_Z on each
    qubit; every block but the last is followed by a CNOT ladder
    (control q, target q + 1).

    Parameter order is block-major, qubit-minor, Y before Z: the R_Y angle of
    qubit ``q`` in block ``b`` is ``theta[2 * n * b + 2 * q]`` and its R_Z
    angle the next entry.
    """

    n: int
    depth: int

    def __post_init__(self):
        if self.n < 1 or self.depth < 1:
            raise ValueError("ansatz needs n >= 1 and depth >= 1")

    @property
    def parameter_count(self) -> int:
        return 2 * self.n * self.depth

    @property
    def cnot_count(self) -> int:
        return (self.depth - 1) * (self.n - 1)

    def gates(self) -> list[tuple]:
        """Gate list as ``("ry"|"rz", qubit, param_index)`` and ``("cx", control, target)``."""
        ops = []
        for b in range(self.depth):
            for q in range(self.n):
                ops.append(("ry", q, 2 * self.n * b + 2 * q))
                ops.append(("rz", q, 2 * self.n * b + 2 * q + 1))
            if b < self.depth - 1:
                ops.extend(("cx", q, q + 1) for q in range(self.n - 1))
        return ops


def build_ansatz(n: int, depth: int) -> AnsatzCircuit:
    return AnsatzCircuit(n, depth)


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def prepare_states(circ: AnsatzCircuit, thetas) -> np.ndarray:
    """Apply U(theta) to |0...0> for every row of ``thetas`` (shape (B, d))."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[1] != circ.parameter_count:
        raise ValueError(
            f"expected {circ.parameter_count} parameters, got {thetas.shape[1]}"
        )
    batch, n = thetas.shape[0], circ.n
    psi = np.zeros((batch, 2**n), dtype=complex)
    psi[:, 0] = 1.0
    half = 0.5 * thetas
    cos, sin = np.cos(half), np.sin(half)
    phase = np.exp(-1j * half)
    for op in circ.gates():
        kind, q = op[0], op[1]
        view = psi.reshape(batch, 2**q, 2, 2 ** (n - q - 1))
        if kind == "ry":
            c = cos[:, op[2], None, None]
            s = sin[:, op[2], None, None]
            a0 = view[:, :, 0, :].copy()
            a1 = view[:, :, 1, :]
            view[:, :, 0, :] = c * a0 - s * a1
            view[:, :, 1, :] = s * a0 + c * a1
        elif kind == "rz":
            p = phase[:, op[2], None, None]
            view[:, :, 0, :] *= p
            view[:, :, 1, :] *= p.conj()
        else:
            t = op[2]
            # control = 1 half; swap the target bit inside it
            sub = view[:, :, 1, :].reshape(batch, 2**q, 2 ** (t - q - 1), 2, 2 ** (n - t - 1))
            sub[:, :, :, [0, 1], :] = sub[:, :, :, [1, 0], :]
            view[:, :, 1, :] = sub.reshape(batch, 2**q, 2 ** (n - q - 1))
    return psi


def prepare_state(circ: AnsatzCircuit, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.shape[0] != circ.parameter_count:
        raise ValueError(
            f"expected {circ.parameter_count} parameters, got shape {theta.shape}"
        )
    return prepare_states(circ, theta[None, :])[0]


@lru_cache(maxsize=4096)
def _pauli_action(letters: str) -> tuple[np.ndarray, np.ndarray]:
    """(perm, phase) with ``P|b> = phase[b] |perm[b]>``."""
    n = len(letters)
    idx = np.arange(2**n)
    flip = 0
    phase = np.ones(2**n, dtype=complex)
    for q, letter in enumerate(letters):
        bit = n - 1 - q
        b = (idx >> bit) & 1
        sign = 1 - 2 * b
        if letter == "X":
            flip |= 1 << bit
        elif letter == "Y":
            flip |= 1 << bit
            phase = phase * (1j * sign)
        elif letter == "Z":
            phase = phase * sign
    perm = idx ^ flip
    perm.setflags(write=False)
    phase.setflags(write=False)
    return perm, phase


def _check_dim(states: np.ndarray, n: int):
    if states.shape[-1] != 2**n:
        raise ValueError(f"state dimension {states.shape[-1]} does not match {n} qubits")


def pauli_expectations(states, obs: Observable) -> np.ndarray:
    """<P_k> for every state row and every term of ``obs``; shape (B, K)."""
    states = np.atleast_2d(states)
    _check_dim(states, obs.n)
    out = np.empty((states.shape[0], len(obs)))
    for k, (_, p) in enumerate(obs.terms):
        perm, phase = _pauli_action(p.letters)
        # <psi|P|psi> = sum_b conj(psi[perm b]) phase[b] psi[b]
        out[:, k] = np.einsum("bi,bi->b", states[:, perm].conj(), states * phase).real
    return out


def exact_pauli_expectation(psi, p: PauliString) -> float:
    psi = np.asarray(psi)
    _check_dim(psi, p.n)
    perm, phase = _pauli_action(p.letters)
    return float(np.vdot(psi[perm], phase * psi).real)


def expectations(states, obs: Observable) -> np.ndarray:
    return pauli_expectations(states, obs) @ obs.coefficients


def exact_expectation(psi, obs: Observable) -> float:
    psi = np.asarray(psi)
    if psi.ndim != 1:
        raise ValueError("expected a single statevector")
    return float(expectations(psi[None, :], obs)[0])


def energy(circ: AnsatzCircuit, obs: Observable, theta) -> float:
    return exact_expectation(prepare_state(circ, theta), obs)


def sample_pauli(psi, p: PauliString, shots: int, rng: np.random.Generator) -> np.ndarray:
    """``shots`` i.i.d. +/-1 outcomes of measuring ``p`` on ``psi``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    prob_plus = min(1.0, max(0.0, 0.5 * (1.0 + exact_pauli_expectation(psi, p))))
    return np.where(rng.random(shots) < prob_plus, 1, -1).astype(np.int8)


def observable_matrix(obs: Observable) -> np.ndarray:
    if obs.n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense matrix limited to {MAX_DENSE_QUBITS} qubits, got {obs.n}")
    dim = 2**obs.n
    has_y = any("Y" in p.letters for _, p in obs.terms)
    mat = np.zeros((dim, dim), dtype=complex if has_y else float)
    cols = np.arange(dim)
    for c, p in obs.terms:
        perm, phase = _pauli_action(p.letters)
        mat[perm, cols] += c * (phase if has_y else phase.real)
    return mat


def ground_energy_dense(obs: Observable) -> float:
    return float(np.linalg.eigvalsh(observable_matrix(obs))[0])
