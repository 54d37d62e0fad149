"""From quantum tests failed by bit sequences to classical Martin-Löf tests.

For a projection ``p`` in ``M_k`` and a threshold ``delta`` the selected
strings are ``S = {eta : <eta|p|eta> >= delta}``.  Counting gives
``|S| 2**-k <= tau(p) / delta``, and selections commute with lifting, so
the clopen sets obtained from an increasing sequence ``p_k`` increase too.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from gmpy2 import mpq

from . import linalg
from .classical import ClassicalLevel, ClassicalMLTest, clopen_measure, covers, extend_strings
from .errors import DepthError, MassBoundError
from .linalg import TOL_EIG, ComplexMatrix, embed, index_string, rational
from .qtests import QMLTest


@dataclass(frozen=True)
class StringSelection:
    k: int
    strings: frozenset[str]
    delta: object
    near_ties: tuple[str, ...] = field(default=())

    @property
    def measure(self) -> mpq:
        return clopen_measure(self.k, self.strings)


def _threshold(delta):
    """Exact rational when possible (ints, ``"p/q"`` strings, mpq), else float."""
    try:
        return rational(delta)
    except (linalg.BackendError, ValueError):
        return float(delta)


def select_strings(p: ComplexMatrix, delta, tol: float = TOL_EIG) -> StringSelection:
    """All ``eta`` in ``{0,1}^k`` with ``Tr(|eta><eta| p) >= delta`` (inclusive).

    Exact projections are compared exactly against a rational ``delta``.
    For float projections a string counts when its value is at least
    ``delta - tol``; values within ``tol`` of ``delta`` are listed in
    ``near_ties``.
    """
    thr = _threshold(delta)
    d = float(thr)
    if not 0 < d < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    k = p.n_qubits
    diag = p.diagonal_real()
    chosen, ties = [], []
    exact_compare = p.is_exact and linalg.is_rational(thr)
    for idx in range(1 << k):
        v = diag[idx]
        if exact_compare:
            hit = v >= thr
        else:
            v = float(v)
            hit = v >= d - tol
            if abs(v - d) <= tol:
                ties.append(index_string(idx, k))
        if hit:
            chosen.append(index_string(idx, k))
    return StringSelection(k, frozenset(chosen), delta, tuple(ties))


def check_lifting(p: ComplexMatrix, delta) -> bool:
    """Whether the selection of ``p (x) I_2`` is exactly ``{eta a : eta selected by p}``."""
    lifted = select_strings(embed(p), delta).strings
    base = select_strings(p, delta).strings
    return lifted == frozenset(eta + a for eta in base for a in "01")


def derive_classical_test(test: QMLTest, delta, depth: int, check_bounds: bool = True) -> ClassicalMLTest:
    """Classical test whose level r is the union of ``[[S^k_{p^r_k, delta}]]`` for ``k <= depth``.

    Stages are emitted on the same ``(r, k)`` grid as the quantum test, with
    strings of length k.  The projection at depth k may be stored on fewer
    qubits; its selection is then extended bitwise, which by the lifting
    property equals the selection of the lifted matrix.  The uniform measure
    of every level is compared exactly with ``2**-r / delta``.
    """
    d = _threshold(delta)
    levels = []
    for r in range(test.max_levels):
        g = test.level(r)
        if depth > g.max_depth:
            raise DepthError(f"level {r} known only to depth {g.max_depth}")
        stages = []
        for k in range(depth + 1):
            sel = select_strings(g.projection(k), delta)
            stages.append((k, extend_strings(sel.strings, k)))
        bound = mpq(1, 1 << r) / d if linalg.is_rational(d) else None
        lv = ClassicalLevel(r, stages, bound)
        if check_bounds:
            m = lv.measure()
            limit = bound if bound is not None else (2.0 ** -r) / d
            if m > limit:
                raise MassBoundError(f"level {r}: measure {m} exceeds 2^-{r}/delta = {limit}")
        levels.append(lv)
    return ClassicalMLTest(levels)


@dataclass
class BridgeReport:
    """Outcome of extracting a classical test and checking coverage of ``Z``."""

    delta: object
    depth: int
    measures: list[mpq]
    bounds: list[mpq]
    fails_quantum: bool
    covered: list[bool]

    @property
    def all_covered(self) -> bool:
        return all(self.covered)

    def to_json(self) -> dict:
        q = lambda x: f"{x.numerator}/{x.denominator}" if linalg.is_rational(x) else x  # noqa: E731
        return {"delta": str(self.delta), "depth": self.depth,
                "measures": [q(m) for m in self.measures], "bounds": [q(b) for b in self.bounds],
                "fails_quantum": self.fails_quantum, "covered": self.covered,
                "all_covered": self.all_covered}


def bridge_report(test: QMLTest, prefix_of, delta, depth: int) -> BridgeReport:
    """Run the extraction and record, per level, whether ``Z`` is covered.

    ``prefix_of(k)`` returns the first k bits of Z.  Coverage is only an
    obligation when ``Z(p^r_depth) > delta`` at every level; otherwise
    ``fails_quantum`` is False and the coverage column is informational.
    """
    classical = derive_classical_test(test, delta, depth)
    values = []
    for r in range(test.max_levels):
        p = test.level(r).projection(depth)
        eta = prefix_of(p.n_qubits)
        values.append(p.diagonal_real()[linalg.string_index(eta)])
    thr = _threshold(delta)
    fails = all(v > thr for v in values)
    cov = [covers(lv.stages, prefix_of) for lv in classical.levels]
    return BridgeReport(delta, depth, classical.measures(), [lv.bound for lv in classical.levels], fails, cov)
