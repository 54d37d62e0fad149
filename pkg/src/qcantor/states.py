"""States of the CAR algebra as depth-bounded coherent sequences of density matrices."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable

from gmpy2 import mpq

from . import linalg
from .errors import DepthError, MeasureError
from .linalg import (
    ComplexMatrix,
    DensityMatrix,
    identity,
    partial_trace,
    rational,
    tensor,
)


class CoherentState:
    """A state given by its restrictions ``rho|n`` for ``n <= max_depth``.

    ``generator(n)`` must return the density matrix on n qubits; results are
    memoised under a lock, so a state may be shared between threads.
    """

    def __init__(self, generator: Callable[[int], ComplexMatrix], max_depth: int, label: str = ""):
        self._generator = generator
        self.max_depth = int(max_depth)
        self.label = label
        self._cache: dict[int, ComplexMatrix] = {}
        self._lock = threading.RLock()

    def __call__(self, n: int) -> ComplexMatrix:
        return self.restrict(n)

    def restrict(self, n: int) -> ComplexMatrix:
        """``rho|n`` as a density matrix on n qubits."""
        if n < 0 or n > self.max_depth:
            raise DepthError(f"depth {n} outside [0, {self.max_depth}] for state {self.label!r}")
        with self._lock:
            m = self._cache.get(n)
            if m is None:
                m = self._generator(n)
                if m.n_qubits != n:
                    raise DepthError(f"generator returned {m.n_qubits} qubits at depth {n}")
                self._cache[n] = m
        return m

    def __repr__(self):
        return f"CoherentState({self.label!r}, max_depth={self.max_depth})"


@dataclass(frozen=True)
class ClassicalSequence:
    """An infinite bit sequence, known on ``[0, max_depth)``."""

    bits: Callable[[int], int]
    max_depth: int

    @classmethod
    def periodic(cls, pattern: str, max_depth: int) -> "ClassicalSequence":
        if not pattern or set(pattern) - {"0", "1"}:
            raise ValueError(f"bad bit pattern {pattern!r}")
        return cls(lambda i: int(pattern[i % len(pattern)]), max_depth)

    @classmethod
    def from_prefix(cls, prefix: str) -> "ClassicalSequence":
        return cls(lambda i: int(prefix[i]), len(prefix))

    def prefix(self, n: int) -> str:
        if n > self.max_depth:
            raise DepthError(f"sequence known only up to {self.max_depth} bits")
        return "".join(str(self.bits(i)) for i in range(n))


@dataclass(frozen=True)
class MeasureState:
    """A probability measure on Cantor space via prefix probabilities.

    ``prefix_prob(sigma)`` is the measure of the cylinder of ``sigma``;
    values must be exact rationals.
    """

    prefix_prob: Callable[[str], object]
    label: str = field(default="measure")

    def __call__(self, sigma: str) -> mpq:
        return rational(self.prefix_prob(sigma))


def uniform_measure() -> MeasureState:
    return MeasureState(lambda s: mpq(1, 1 << len(s)), "uniform")


def bernoulli_measure(p1) -> MeasureState:
    """Product measure where each bit is 1 with probability ``p1``."""
    p1 = rational(p1)
    p0 = 1 - p1

    def prob(s: str):
        ones = s.count("1")
        return p1 ** ones * p0 ** (len(s) - ones)

    return MeasureState(prob, f"bernoulli({p1})")


def dirac_measure(z: ClassicalSequence) -> MeasureState:
    return MeasureState(lambda s: mpq(1) if s == z.prefix(len(s)) else mpq(0), "dirac")


# ---------------------------------------------------------------------------
# constructors


def from_bits(z: ClassicalSequence, max_depth: int | None = None) -> CoherentState:
    """The pure basis state ``|Z|n><Z|n|`` at every depth."""
    depth = z.max_depth if max_depth is None else min(max_depth, z.max_depth)
    return CoherentState(lambda n: linalg.basis_projector(z.prefix(n)), depth, "bits")


def from_measure(mu: MeasureState, max_depth: int) -> CoherentState:
    """Diagonal state with ``mu(sigma)`` at ``(sigma, sigma)``.

    The measure conditions are checked at every queried depth:
    ``mu(empty) = 1`` and ``mu(sigma) = mu(sigma 0) + mu(sigma 1)``.
    """

    def gen(n: int) -> ComplexMatrix:
        if mu("") != 1:
            raise MeasureError(f"mu(empty) = {mu('')}, not 1")
        values = [None] * (1 << n)
        for idx in range(1 << n):
            s = linalg.index_string(idx, n)
            v = mu(s)
            if v < 0 or v > 1:
                raise MeasureError(f"mu({s!r}) = {v} outside [0, 1]")
            values[idx] = v
        if n > 0:
            half = 1 << (n - 1)
            for idx in range(half):
                parent = linalg.index_string(idx, n - 1)
                # sigma0 has index idx, sigma1 has index idx + 2^(n-1)
                if values[idx] + values[idx + half] != mu(parent):
                    raise MeasureError(f"mu({parent!r}) != mu({parent}0) + mu({parent}1)")
        return linalg.diagonal(values)

    return CoherentState(gen, max_depth, mu.label)


def iid_state(sigma1: ComplexMatrix, max_depth: int, label: str = "iid") -> CoherentState:
    """Product state ``sigma1^{(x)n}``."""
    DensityMatrix(sigma1)
    if sigma1.n_qubits != 1:
        raise ValueError("iid_state needs a one-qubit density matrix")
    state: CoherentState

    def gen(n: int) -> ComplexMatrix:
        if n == 0:
            return identity(0, sigma1.backend)
        return tensor(state.restrict(n - 1), sigma1)

    state = CoherentState(gen, max_depth, label)
    return state


def tracial_state(max_depth: int) -> CoherentState:
    return iid_state(linalg.diagonal([mpq(1, 2), mpq(1, 2)]), max_depth, "tracial")


def epr_matrix() -> ComplexMatrix:
    """``beta = (|00> + |11>)(<00| + <11|) / 2``; exact since the entries are 1/2."""
    half = mpq(1, 2)
    re = linalg._ozeros(4)
    for i in (0, 3):
        for j in (0, 3):
            re[i, j] = half
    return ComplexMatrix(re=re)


def epr_chain(max_depth: int) -> CoherentState:
    """``rho_{2n} = beta^{(x)n}``, ``rho_{2n+1} = rho_{2n} (x) I/2``."""
    beta = epr_matrix()
    mixed = linalg.diagonal([mpq(1, 2), mpq(1, 2)])
    state: CoherentState

    def gen(n: int) -> ComplexMatrix:
        if n == 0:
            return identity(0)
        if n % 2:
            return tensor(state.restrict(n - 1), mixed)
        if n == 2:
            return beta
        return tensor(state.restrict(n - 2), beta)

    state = CoherentState(gen, max_depth, "epr")
    return state


def matrix_sequence(matrices, label: str = "matrix_sequence") -> CoherentState:
    """State given by explicit matrices for depths ``0 .. len(matrices) - 1``."""
    mats = list(matrices)
    for n, m in enumerate(mats):
        if m.n_qubits != n:
            raise ValueError(f"matrix {n} acts on {m.n_qubits} qubits")
    return CoherentState(lambda n: mats[n], len(mats) - 1, label)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(rho: CoherentState, p: ComplexMatrix):
    """``rho(p) = Tr(rho|n p)`` for ``p`` in ``M_n``; mpq when both are exact."""
    n = p.n_qubits
    if n > rho.max_depth:
        raise DepthError(f"operator on {n} qubits exceeds state depth {rho.max_depth}")
    return linalg.trace_product(rho.restrict(n), p)


@dataclass
class CoherenceReport:
    """Per-level deviations ``max |T_n(rho_{n+1}) - rho_n|`` for ``n < depth``."""

    label: str
    depth: int
    deviations: list[float]
    base_ok: bool

    @property
    def max_deviation(self) -> float:
        return max(self.deviations, default=0.0)

    def flagged(self, tol: float = linalg.TOL_EIG) -> list[int]:
        return [n for n, d in enumerate(self.deviations) if d > tol]

    def ok(self, tol: float = linalg.TOL_EIG) -> bool:
        return self.base_ok and not self.flagged(tol)

    def to_json(self) -> dict:
        return {"label": self.label, "depth": self.depth, "base_ok": self.base_ok,
                "deviations": self.deviations, "max_deviation": self.max_deviation}


def check_coherence(rho: CoherentState, depth: int) -> CoherenceReport:
    """Compare ``partial_trace(rho|n+1)`` with ``rho|n`` at every ``n < depth``."""
    if depth > rho.max_depth:
        raise DepthError(f"depth {depth} exceeds state depth {rho.max_depth}")
    base = rho.restrict(0)
    one = identity(0, base.backend)
    base_ok = base.equals(one, linalg.TOL_EIG)
    devs = []
    for n in range(depth):
        devs.append(partial_trace(rho.restrict(n + 1)).max_abs_diff(rho.restrict(n)))
    return CoherenceReport(rho.label, depth, devs, base_ok)


def bit_average(z: ClassicalSequence, n: int) -> mpq:
    return mpq(z.prefix(n).count("1"), n)
