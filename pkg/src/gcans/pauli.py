"""Pauli strings, Pauli-sum observables, the transverse-field Ising model and a
plain-text Hamiltonian file format.

File format: one term per line, ``<coefficient> <letters>``, whitespace
separated, ``#`` starts a comment. Letter ``i`` of a string acts on qubit ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

PAULI_LETTERS = frozenset("IXYZ")


@dataclass(frozen=True)
class PauliString:
    letters: str

    def __post_init__(self):
        if not self.letters:
            raise ValueError("Pauli string must act on at least one qubit")
        bad = set(self.letters) - PAULI_LETTERS
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {self.letters!r}")

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    def __str__(self) -> str:
        return self.letters


TermLike = Union[PauliString, str]


class Observable:
    """Real-weighted sum of Pauli strings, ``A = sum_k c_k P_k``.

    Duplicate strings are merged (first appearance fixes the order) and
    terms whose merged coefficient is exactly zero are dropped.
    """

    __slots__ = ("n", "terms")

    def __init__(self, terms: Iterable[tuple[float, TermLike]]):
        merged: dict[str, float] = {}
        n = None
        for coeff, string in terms:
            p = string if isinstance(string, PauliString) else PauliString(str(string))
            if n is None:
                n = p.n
            elif p.n != n:
                raise ValueError(
                    f"inconsistent Pauli string lengths: {p.letters!r} has {p.n} qubits, expected {n}"
                )
            c = float(coeff)
            if not np.isfinite(c):
                raise ValueError(f"non-finite coefficient for {p.letters!r}")
            merged[p.letters] = merged.get(p.letters, 0.0) + c
        if n is None:
            raise ValueError("observable needs at least one term")
        kept = tuple((c, PauliString(s)) for s, c in merged.items() if c != 0.0)
        if not kept:
            raise ValueError("all coefficients cancel; observable is zero")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", kept)

    def __setattr__(self, name, value):
        raise AttributeError("Observable is immutable")

    def __reduce__(self):
        return Observable, ([(c, p.letters) for c, p in self.terms],)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def strings(self) -> list[PauliString]:
        return [p for _, p in self.terms]

    def __len__(self) -> int:
        return len(self.terms)

    def __mul__(self, scale: float) -> "Observable":
        return Observable((scale * c, p) for c, p in self.terms)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Observable):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, self.terms))

    def __repr__(self) -> str:
        body = " ".join(f"{c:+g}*{p}" for c, p in self.terms[:6])
        more = " ..." if len(self.terms) > 6 else ""
        return f"Observable(n={self.n}, {len(self.terms)} terms: {body}{more})"


def one_norm(obs: Observable) -> float:
    """Sum of absolute Pauli coefficients; bounds |<A>| for every state."""
    return float(np.sum(np.abs(obs.coefficients)))


def lipschitz_bound(obs: Observable, d: int) -> float:
    """Gradient Lipschitz bound ``d * one_norm`` for a d-parameter rotation ansatz."""
    if d < 1:
        raise ValueError("parameter count must be >= 1")
    return d * one_norm(obs)


def tfim(n: int, g: float = 1.5, boundary: str = "open") -> Observable:
    """H = sum_<ij> Z_i Z_j + g sum_i X_i on a chain of n sites."""
    if n < 2:
        raise ValueError("TFIM needs at least 2 sites")
    if boundary not in ("open", "periodic"):
        raise ValueError(f"boundary must be 'open' or 'periodic', got {boundary!r}")

    def string(ops: dict[int, str]) -> str:
        return "".join(ops.get(q, "I") for q in range(n))

    bonds = [(i, i + 1) for i in range(n - 1)]
    if boundary == "periodic":
        # for n == 2 the wrap-around bond coincides with (0, 1) and merges into it
        bonds.append((n - 1, 0))
    terms: list[tuple[float, str]] = [(1.0, string({i: "Z", j: "Z"})) for i, j in bonds]
    if g != 0.0:
        terms += [(g, string({i: "X"})) for i in range(n)]
    return Observable(terms)


def parse_observable(text: str) -> Observable:
    terms = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<coefficient> <letters>', got {raw!r}")
        try:
            coeff = float(parts[0])
        except ValueError:
            raise ValueError(f"line {lineno}: bad coefficient {parts[0]!r}") from None
        letters = parts[1].upper()
        try:
            p = PauliString(letters)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if width is None:
            width = p.n
        elif p.n != width:
            raise ValueError(
                f"line {lineno}: inconsistent string lengths ({p.n} vs {width})"
            )
        terms.append((coeff, p))
    if not terms:
        raise ValueError("empty Hamiltonian: no terms found")
    return Observable(terms)


def serialize_observable(obs: Observable) -> str:
    return "".join(f"{c:.17g} {p.letters}\n" for c, p in obs.terms)


def load_observable(path) -> Observable:
    with open(path, encoding="utf-8") as fh:
        return parse_observable(fh.read())


def observable_from_dict(terms: dict[str, float]) -> Observable:
    return Observable((c, s) for s, c in terms.items())
