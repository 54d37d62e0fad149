"""Quantum Sigma_1 sets, quantum Martin-Löf and Solovay tests.

A quantum Sigma_1 set is an increasing sequence of projections
``p_i in M_i``.  To keep matrices small, ``projection(i)`` may return a
projection on fewer than ``i`` qubits; it stands for its lift
``p (x) I`` to ``M_i``.  Tracial values and state evaluations are invariant
under lifting, so nothing is lost.  Use :meth:`QuantumSigma1Set.at_depth`
for the fully embedded matrix.

Every supremum over an infinite sequence is reported only as its value at
a finite depth, which is a lower bound.  Verdicts are therefore always
"up to depth D".
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Sequence

from gmpy2 import mpq

from . import linalg
from .classical import ClassicalMLTest, union_at_length
from .errors import DepthError, MassBoundError, MonotonicityError
from .linalg import (
    TOL_EIG,
    ComplexMatrix,
    SpecialProjection,
    diagonal_projection,
    is_rational,
    lift,
    projection_join,
    projection_leq,
    string_index,
    tracial_value,
)
from .states import CoherentState, evaluate


def _zero_projection() -> SpecialProjection:
    return SpecialProjection(linalg.zeros(0), validate=False)


class QuantumSigma1Set:
    """Increasing sequence of special projections, known up to ``max_depth``."""

    def __init__(self, projections: Callable[[int], ComplexMatrix], max_depth: int, label: str = ""):
        self._fn = projections
        self.max_depth = int(max_depth)
        self.label = label
        self._cache: dict[int, ComplexMatrix] = {}
        self._lock = threading.RLock()

    def projection(self, i: int) -> ComplexMatrix:
        """``p_i``, possibly stored on fewer than ``i`` qubits."""
        if i < 0 or i > self.max_depth:
            raise DepthError(f"depth {i} outside [0, {self.max_depth}] for {self.label!r}")
        with self._lock:
            p = self._cache.get(i)
            if p is None:
                p = self._fn(i)
                if p.n_qubits > i:
                    raise DepthError(f"p_{i} acts on {p.n_qubits} > {i} qubits")
                self._cache[i] = p
        return p

    def at_depth(self, i: int) -> ComplexMatrix:
        return lift(self.projection(i), i)

    def mass(self, i: int):
        return tracial_value(self.projection(i))

    def monotonicity_violations(self, depth: int, tol: float = TOL_EIG) -> list[int]:
        """Indices ``i < depth`` where ``p_i <= p_{i+1}`` fails."""
        return [i for i in range(min(depth, self.max_depth))
                if not projection_leq(self.projection(i), self.projection(i + 1), tol)]

    def validate(self, depth: int, tol: float = TOL_EIG) -> None:
        for i in range(depth + 1):
            linalg.check_projection(self.projection(i), tol)
        bad = self.monotonicity_violations(depth, tol)
        if bad:
            raise MonotonicityError(f"{self.label!r}: p_i <= p_(i+1) fails at i = {bad}")

    @classmethod
    def zero(cls, max_depth: int) -> "QuantumSigma1Set":
        return cls(lambda i: _zero_projection(), max_depth, "zero")

    @classmethod
    def full(cls, max_depth: int) -> "QuantumSigma1Set":
        return cls(lambda i: SpecialProjection(linalg.identity(0), validate=False), max_depth, "full")

    @classmethod
    def from_matrices(cls, mats: Sequence[ComplexMatrix], max_depth: int, label: str = "") -> "QuantumSigma1Set":
        """Explicit projections ``p_0 .. p_m``; later depths reuse ``p_m`` (lifted)."""
        mats = list(mats)
        if not mats:
            return cls.zero(max_depth)
        return cls(lambda i: mats[min(i, len(mats) - 1)], max_depth, label)

    def __repr__(self):
        return f"QuantumSigma1Set({self.label!r}, max_depth={self.max_depth})"


class _LevelCache:
    def __init__(self, fn):
        self._fn = fn
        self._cache = {}
        self._lock = threading.Lock()

    def __call__(self, r):
        with self._lock:
            if r not in self._cache:
                self._cache[r] = self._fn(r)
            return self._cache[r]


class QMLTest:
    """Sequence of quantum Sigma_1 sets ``G_r`` with ``tau(G_r) <= 2**-r``."""

    kind = "qml"

    def __init__(self, levels: Callable[[int], QuantumSigma1Set], max_levels: int, label: str = ""):
        self._levels = _LevelCache(levels)
        self.max_levels = int(max_levels)
        self.label = label

    def level(self, r: int) -> QuantumSigma1Set:
        if r < 0 or r >= self.max_levels:
            raise DepthError(f"level {r} outside [0, {self.max_levels}) for {self.label!r}")
        return self._levels(r)

    @property
    def max_depth(self) -> int:
        return min((self.level(r).max_depth for r in range(self.max_levels)), default=0)

    def bound(self, r: int) -> mpq:
        return mpq(1, 1 << r)

    def mass_violations(self, depth: int) -> list[tuple[int, int]]:
        """``(r, i)`` pairs with ``tau(p^r_i) > 2**-r`` for ``i <= depth``.

        Exact projections are compared exactly; float ones with ``TOL_EIG`` slack.
        """
        bad = []
        for r in range(self.max_levels):
            g = self.level(r)
            for i in range(min(depth, g.max_depth) + 1):
                m = g.mass(i)
                slack = 0 if is_rational(m) else TOL_EIG
                if m > self.bound(r) + slack:
                    bad.append((r, i))
        return bad

    def check_mass(self, depth: int) -> None:
        bad = self.mass_violations(depth)
        if bad:
            raise MassBoundError(f"{self.label!r}: mass bound fails at (r, i) = {bad[:5]}")


class SolovayTest(QMLTest):
    """Quantum Sigma_1 sets with ``sum_r tau(G_r) <= declared_mass_bound``."""

    kind = "solovay"

    def __init__(self, levels, max_levels: int, declared_mass_bound, label: str = ""):
        super().__init__(levels, max_levels, label)
        self.declared_mass_bound = linalg.rational(declared_mass_bound)

    def total_mass(self, depth: int):
        return sum((self.level(r).mass(min(depth, self.level(r).max_depth)) for r in range(self.max_levels)),
                   mpq(0))

    def mass_violations(self, depth: int) -> list[tuple[int, int]]:
        total = self.total_mass(depth)
        slack = 0 if is_rational(total) else TOL_EIG
        return [] if total <= self.declared_mass_bound + slack else [(-1, depth)]


class StrongSolovayTest:
    """Single projections ``p_r in M_{n_r}`` with ``n_r`` strictly increasing."""

    kind = "strong_solovay"

    def __init__(self, items: Callable[[int], tuple[int, ComplexMatrix]], max_levels: int,
                 declared_mass_bound, label: str = ""):
        self._items = _LevelCache(items)
        self.max_levels = int(max_levels)
        self.declared_mass_bound = linalg.rational(declared_mass_bound)
        self.label = label

    def item(self, r: int) -> tuple[int, ComplexMatrix]:
        if r < 0 or r >= self.max_levels:
            raise DepthError(f"level {r} outside [0, {self.max_levels})")
        n, p = self._items(r)
        if p.n_qubits != n:
            raise DepthError(f"p_{r} acts on {p.n_qubits} qubits, expected n_r = {n}")
        return n, p

    def validate(self) -> None:
        grid = [self.item(r)[0] for r in range(self.max_levels)]
        if any(a >= b for a, b in zip(grid, grid[1:])):
            raise MonotonicityError(f"n_r not strictly increasing: {grid}")
        for r in range(self.max_levels):
            linalg.check_projection(self.item(r)[1])
        total = sum((tracial_value(self.item(r)[1]) for r in range(self.max_levels)), mpq(0))
        slack = 0 if is_rational(total) else TOL_EIG
        if total > self.declared_mass_bound + slack:
            raise MassBoundError(f"sum of tau(p_r) = {total} exceeds {self.declared_mass_bound}")

    def as_solovay(self, max_depth: int) -> SolovayTest:
        """``G_r = <0, ..., 0, p_r, p_r (x) I, ...>`` starting at depth ``n_r``."""

        def level(r):
            n, p = self.item(r)
            return QuantumSigma1Set(lambda i: p if i >= n else _zero_projection(), max_depth, f"p_{r}")

        return SolovayTest(level, self.max_levels, self.declared_mass_bound, self.label)


# ---------------------------------------------------------------------------
# operations


def sigma1_mass(g: QuantumSigma1Set, depth: int):
    """``tau(p_depth)``: a lower bound for ``tau(G)``, checked nondecreasing in depth."""
    m = g.mass(depth)
    if depth > 0:
        prev = g.mass(depth - 1)
        slack = 0 if is_rational(m) and is_rational(prev) else TOL_EIG
        if m + slack < prev:
            raise MonotonicityError(f"tau(p_{depth}) = {m} < tau(p_{depth - 1}) = {prev}")
    return m


def _join_lifted(p: ComplexMatrix, q: ComplexMatrix) -> SpecialProjection:
    n = max(p.n_qubits, q.n_qubits)
    return projection_join(lift(p, n), lift(q, n))


def sigma1_join(g: QuantumSigma1Set, h: QuantumSigma1Set) -> QuantumSigma1Set:
    """Level-wise join ``<p_k v q_k>``."""
    return QuantumSigma1Set(lambda i: _join_lifted(g.projection(i), h.projection(i)),
                            min(g.max_depth, h.max_depth), f"({g.label} v {h.label})")


def evaluate_test(rho: CoherentState, test: QMLTest, depth: int) -> list:
    """``[rho(p^r_depth) for r < max_levels]``, each a lower bound for ``rho(G_r)``."""
    if depth > rho.max_depth:
        raise DepthError(f"depth {depth} exceeds state depth {rho.max_depth}")
    if isinstance(test, StrongSolovayTest):
        test = test.as_solovay(depth)
    return [evaluate(rho, test.level(r).projection(depth)) for r in range(test.max_levels)]


@dataclass(frozen=True)
class Verdict:
    """Depth-relative outcome of evaluating a state on a test."""

    fails: bool
    delta: float
    semantics: str
    witness: int | None = None
    tie: bool = False
    exceed_count: int = 0
    depth: int | None = None
    # smallest observed level value; the infimum-style pass notion reads this
    min_value: float | None = None

    def describe(self) -> str:
        where = "" if self.depth is None else f" up to depth {self.depth}"
        if self.fails:
            return f"fails at order {self.delta}{where}"
        if self.witness is None:
            return f"passes at order {self.delta}{where}"
        return f"passes witnessed at r={self.witness}"

    def to_json(self) -> dict:
        return {"fails": self.fails, "delta": self.delta, "semantics": self.semantics,
                "witness": self.witness, "tie": self.tie, "exceed_count": self.exceed_count,
                "depth": self.depth, "min_value": self.min_value, "text": self.describe()}


def verdict(values: Sequence, delta, semantics: str = "ml", threshold: int | None = None,
            depth: int | None = None) -> Verdict:
    """Decide fail/pass at order ``delta`` from finitely many level values.

    ``semantics="ml"``: fails iff every value exceeds delta.  A passing
    verdict names the first level whose value is strictly below delta; only
    if none is, the first level equal to delta is named with ``tie=True``.

    ``semantics="solovay"``: fails iff at least ``threshold`` values exceed delta.
    """
    if not values:
        raise ValueError("no level values to judge")
    d = float(delta)
    if not 0 < d < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    exceed = [v > delta for v in values]
    count = sum(exceed)
    lo = float(min(values))
    if semantics == "ml":
        if all(exceed):
            return Verdict(True, d, "ml", exceed_count=count, depth=depth, min_value=lo)
        below = [r for r, v in enumerate(values) if v < delta]
        if below:
            return Verdict(False, d, "ml", below[0], exceed_count=count, depth=depth, min_value=lo)
        return Verdict(False, d, "ml", exceed.index(False), tie=True, exceed_count=count, depth=depth,
                       min_value=lo)
    if semantics == "solovay":
        if threshold is None:
            threshold = len(values)
        fails = count >= threshold
        witness = None if fails else next((r for r, e in enumerate(exceed) if not e), None)
        return Verdict(fails, d, "solovay", witness, exceed_count=count, depth=depth, min_value=lo)
    raise ValueError(f"unknown semantics {semantics!r}")


def universal_combine(tests: Sequence[QMLTest], n: int, k: int) -> SpecialProjection:
    """``q^n_k``: join of ``p^e_{e+n+1, k}`` over listed tests with ``e + n + 1 <= k``."""
    if k < n + 1:
        return _zero_projection()
    terms = []
    for e, t in enumerate(tests):
        r = e + n + 1
        if r > k:
            break
        if r >= t.max_levels:
            raise DepthError(f"test {e} ({t.label!r}) has no level {r}")
        g = t.level(r)
        if k > g.max_depth:
            raise DepthError(f"test {e} level {r} known only to depth {g.max_depth} < {k}")
        terms.append(g.projection(k))
    out = _zero_projection()
    for p in terms:
        out = _join_lifted(out, p)
    return out


def universal_test(tests: Sequence[QMLTest], max_levels: int, max_depth: int) -> QMLTest:
    """``R_n = <q^n_k>_k`` built from an explicit finite list of tests."""
    tests = list(tests)

    def level(n):
        return QuantumSigma1Set(lambda k: universal_combine(tests, n, k), max_depth, f"R_{n}")

    return QMLTest(level, max_levels, "universal")


def classical_to_quantum(test: ClassicalMLTest, max_depth: int, check_bounds: bool = True) -> QMLTest:
    """View a classical test as a quantum one with diagonal projections.

    Level r at depth i projects onto the strings of length i that extend a
    stage with ``k <= i``; its tracial value is the uniform measure of that
    clopen set.  The bound ``2**-r`` (or the level's own bound) is checked
    exactly on the full union.
    """
    if check_bounds:
        for lv in test.levels:
            bound = lv.bound if lv.bound is not None else mpq(1, 1 << lv.r)
            if lv.measure() > bound:
                raise MassBoundError(f"level {lv.r} has measure {lv.measure()} > {bound}")

    def level(r):
        lv = test.level(r)

        def proj(i):
            stages = [(k, s) for k, s in lv.stages if k <= i]
            if not stages:
                return _zero_projection()
            native = max(k for k, _ in stages)
            strings = union_at_length(stages, native)
            return diagonal_projection(native, [string_index(s) for s in strings])

        return QuantumSigma1Set(proj, max_depth, f"classical V_{r}")

    return QMLTest(level, len(test.levels), "classical")


def lln_projection(n: int, i: int) -> SpecialProjection:
    """``S_{n,i}``: projection onto basis strings with bit i equal to 1."""
    return diagonal_projection(n, [x for x in range(1 << n) if (x >> i) & 1])


def lln_statistic(rho: CoherentState, n: int):
    """``(1/n) sum_{i<n} rho(S_{n,i})``.

    All ``S_{n,i}`` are diagonal, so the sum only reads the diagonal of
    ``rho|n``: each basis string contributes its number of ones.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > rho.max_depth:
        raise DepthError(f"depth {n} exceeds state depth {rho.max_depth}")
    diag = rho.restrict(n).diagonal_real()
    total = sum(diag[x] * bin(x).count("1") for x in range(1 << n))
    if rho.restrict(n).is_exact:
        return mpq(total) / n
    return float(total) / n
