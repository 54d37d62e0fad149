"""Von Neumann entropy, finite entropy-rate profiles and the cross-entropy statistic.

Logarithms are base 2 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DepthError, StatisticUndefined
from .linalg import TOL_EIG, ComplexMatrix
from .states import CoherentState


def _exact_log2(x: float) -> float:
    # exact for powers of two, so the tracial identities hold to the bit
    m, e = math.frexp(x)
    if m == 0.5:
        return float(e - 1)
    return math.log2(x)


def von_neumann_entropy(s: ComplexMatrix, tol: float = TOL_EIG) -> float:
    """``-sum lambda log2 lambda`` over eigenvalues above ``tol``."""
    if s.is_diagonal():
        w = np.array([float(x) for x in s.diagonal_real()])
    else:
        w = linalg.eigvalsh(s)
    h = -sum(x * _exact_log2(x) for x in w if x > tol)
    return max(0.0, float(h))


@dataclass
class EntropyReport:
    """Per-level rows ``(n, H_n, rate_n)``, optionally with a cross-entropy column."""

    label: str
    kind: str
    rows: list[tuple[int, float, float]] = field(default_factory=list)
    cross: list[float | None] = field(default_factory=list)

    def to_json(self) -> dict:
        out = []
        for j, (n, h, rate) in enumerate(self.rows):
            row = {"n": n, "H_n": h, "rate_n": rate}
            if self.cross:
                row["cross_entropy_n"] = self.cross[j]
            out.append(row)
        return {"label": self.label, "kind": self.kind, "per_level": out}

    def csv_rows(self) -> list[list]:
        head = ["n", "H_n", "rate_n", "cross_entropy_n"]
        body = [[n, h, rate, self.cross[j] if self.cross else ""] for j, (n, h, rate) in enumerate(self.rows)]
        return [head] + body


def entropy_rate(psi: CoherentState, n_max: int) -> EntropyReport:
    """``H(psi|n) / n`` for ``1 <= n <= n_max``; no limit is claimed."""
    if n_max > psi.max_depth:
        raise DepthError(f"depth {n_max} exceeds state depth {psi.max_depth}")
    rep = EntropyReport(psi.label, "entropy_rate")
    for n in range(1, n_max + 1):
        h = von_neumann_entropy(psi.restrict(n))
        rep.rows.append((n, h, h / n))
    return rep


def cross_entropy_statistic(rho: CoherentState, psi: CoherentState, n: int, tol: float = TOL_EIG) -> float:
    """``-(1/n) Tr(rho|n log2 psi|n)``.

    Eigenvalues of ``psi|n`` below ``tol`` are dropped from the logarithm
    provided ``rho|n`` has no weight on their eigenvectors; otherwise the
    statistic is undefined at this depth.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > rho.max_depth or n > psi.max_depth:
        raise DepthError(f"depth {n} exceeds a state's depth")
    a, b = rho.restrict(n), psi.restrict(n)
    if b.is_diagonal():
        # group rho's diagonal by psi's eigenvalue; exact sums keep log2(2^-n) * 1 exact
        db = b.diagonal_real()
        da = a.diagonal_real() if a.is_exact else np.real(np.diag(a.to_numpy()))
        groups: dict = {}
        for x, y in zip(da, db):
            if float(x) <= tol:
                continue
            if float(y) <= tol:
                raise StatisticUndefined(f"statistic undefined at this depth: psi|{n} vanishes on the support of rho|{n}")
            groups[y] = groups.get(y, 0) + x
        total = sum(float(wt) * _exact_log2(float(y)) for y, wt in groups.items())
        return -total / n
    w, v = linalg.eigh(b)
    ra = a.to_numpy()
    # weight of rho on each eigenvector of psi
    weights = np.real(np.einsum("ij,jk,ki->i", v.conj().T, ra, v))
    total = 0.0
    for lam, wt in zip(w, weights):
        if lam > tol:
            total += wt * _exact_log2(lam)
        elif wt > tol:
            raise StatisticUndefined(f"statistic undefined at this depth: psi|{n} vanishes on the support of rho|{n}")
    return float(-total / n)


def cross_entropy_report(rho: CoherentState, psi: CoherentState, n_max: int) -> EntropyReport:
    """Entropy profile of ``rho`` together with the cross-entropy against ``psi``."""
    rep = entropy_rate(rho, n_max)
    rep.kind = "cross_entropy"
    rep.label = f"{rho.label} | {psi.label}"
    rep.cross = [cross_entropy_statistic(rho, psi, n) for n, _, _ in rep.rows]
    return rep
