"""Unitary machines and witness-bounded quantum Kolmogorov complexity.

A unitary machine is a sequence of unitaries ``L_n`` on n qubits.  On an
input ``y`` of k qubits and target length n it outputs
``L_n (y (x) |0^{n-k}><0^{n-k}|) L_n^dagger``.  The padding occupies the
high (appended) qubits, so padded inputs live on basis indices ``< 2**k``.

``qc_complexity`` searches only a declared dictionary plus caller-given
witnesses, so its answer is an upper bound on the true complexity.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from gmpy2 import mpq

from . import linalg
from .errors import (
    DepthError,
    DimensionError,
    MassBoundError,
    NotUnitary,
    PreconditionError,
)
from .linalg import (
    RANK_TOL,
    TOL_EIG,
    ComplexMatrix,
    DensityMatrix,
    SpecialProjection,
    basis_projector,
    identity,
    index_string,
    ket_projector,
    lift,
    projection_join,
    span_projector,
    state_project,
    string_index,
    tensor,
    trace_distance,
    tracial_value,
)
from .qtests import QMLTest, QuantumSigma1Set, StrongSolovayTest, _zero_projection
from .states import CoherentState, evaluate


# ---------------------------------------------------------------------------
# machines


class UnitaryMachine:
    """``n -> L_n``, memoised; each circuit is checked unitary on first use."""

    def __init__(self, circuits: Callable[[int], ComplexMatrix], max_depth: int, label: str = "",
                 is_identity: bool = False, validate: bool = True):
        self._fn = circuits
        self.max_depth = int(max_depth)
        self.label = label
        self.is_identity = is_identity
        self._validate = validate
        self._cache: dict[int, ComplexMatrix] = {}
        self._lock = threading.RLock()

    def circuit(self, n: int) -> ComplexMatrix:
        if n < 0 or n > self.max_depth:
            raise DepthError(f"machine {self.label!r} has no circuit on {n} qubits (max {self.max_depth})")
        with self._lock:
            u = self._cache.get(n)
            if u is None:
                u = self._fn(n)
                if u.n_qubits != n:
                    raise DimensionError(f"L_{n} acts on {u.n_qubits} qubits")
                if self._validate:
                    check_unitary(u)
                self._cache[n] = u
        return u

    @classmethod
    def identity(cls, max_depth: int) -> "UnitaryMachine":
        return cls(lambda n: identity(n), max_depth, "identity", is_identity=True, validate=False)

    @classmethod
    def bit_reversal(cls, max_depth: int) -> "UnitaryMachine":
        """``|a_0 ... a_{n-1}> -> |a_{n-1} ... a_0>``."""

        def perm(n):
            re = linalg._ozeros(1 << n)
            for i in range(1 << n):
                re[string_index(index_string(i, n)[::-1]), i] = linalg.ONE
            return ComplexMatrix(re=re)

        return cls(perm, max_depth, "bit_reversal", validate=False)

    @classmethod
    def from_matrices(cls, mats: dict[int, ComplexMatrix], max_depth: int,
                      default: str = "identity", label: str = "custom") -> "UnitaryMachine":
        """Explicit circuits for some n; the others are the identity."""
        if default != "identity":
            raise ValueError(f"unsupported default circuit {default!r}")
        mats = dict(mats)
        return cls(lambda n: mats[n] if n in mats else identity(n), max_depth, label)

    def __repr__(self):
        return f"UnitaryMachine({self.label!r}, max_depth={self.max_depth})"


def check_unitary(u: ComplexMatrix, tol: float = TOL_EIG) -> None:
    prod = u @ u.dagger()
    one = identity(u.n_qubits, u.backend)
    if u.is_exact:
        ok = prod.equals(one)
    else:
        ok = prod.max_abs_diff(one) <= tol
    if not ok:
        raise NotUnitary(f"L L^dagger differs from I by {prod.max_abs_diff(one):.3e}")


def pad(y: ComplexMatrix, n: int) -> ComplexMatrix:
    """``y (x) |0^{n-k}><0^{n-k}|``."""
    k = y.n_qubits
    if k > n:
        raise DimensionError(f"input on {k} qubits is longer than output length {n}")
    if k == n:
        return y
    zero = basis_projector("0" * (n - k))
    if not y.is_exact:
        zero = zero.to_float()
    return tensor(y, zero)


def run_machine(machine: UnitaryMachine, y: ComplexMatrix, n: int) -> ComplexMatrix:
    """``L(y; n) = L_n (y (x) |0^{n-k}><0^{n-k}|) L_n^dagger``."""
    if n > machine.max_depth:
        raise DepthError(f"output length {n} exceeds machine depth {machine.max_depth}")
    z = pad(y, n)
    if machine.is_identity:
        return z
    u = machine.circuit(n)
    if u.is_exact and not z.is_exact:
        u = u.to_float()
    elif z.is_exact and not u.is_exact:
        z = z.to_float()
    return u @ z @ u.dagger()


# ---------------------------------------------------------------------------
# dictionary of pure elementary states


@dataclass(frozen=True)
class DictEntry:
    index: int
    length: int
    bits: str | None = None
    vector: tuple | None = None

    def matrix(self) -> ComplexMatrix:
        if self.bits is not None:
            return basis_projector(self.bits)
        return ket_projector(self.vector)


def _vector_norm2(vec) -> float:
    return float(sum(abs(complex(x)) ** 2 for x in vec))


class StateDictionary:
    """Listing ``sigma_0, sigma_1, ...`` of pure states with ``len(sigma_i) <= i``.

    The first ``2**(basis_max_length+1) - 1`` entries are the computational
    basis strings in length-lexicographic order (``""``, ``0``, ``1``,
    ``00``, ...), so string ``s`` has index ``2**len(s) - 1 + int(s, 2)``.
    Extra unit vectors follow in the order given.
    """

    def __init__(self, basis_max_length: int = 8, extras: Sequence = ()):
        self.basis_max_length = int(basis_max_length)
        self._n_basis = (1 << (self.basis_max_length + 1)) - 1
        self._extras: list[DictEntry] = []
        for vec in extras:
            self._append(vec)

    def _append(self, vec) -> None:
        vec = tuple(linalg.GaussianRational.of(x) if not isinstance(x, (float, complex)) else x for x in vec)
        length = linalg._qubits_for_dim(len(vec))
        if abs(_vector_norm2(vec) - 1) > TOL_EIG:
            raise ValueError(f"dictionary vector is not unit norm (|v|^2 = {_vector_norm2(vec)})")
        idx = self._n_basis + len(self._extras)
        if length > idx:
            raise ValueError(f"vector of length {length} cannot sit at index {idx}")
        self._extras.append(DictEntry(idx, length, vector=vec))

    def extended(self, vectors: Iterable) -> "StateDictionary":
        out = StateDictionary(self.basis_max_length)
        for e in self._extras:
            out._append(e.vector)
        for v in vectors:
            out._append(v)
        return out

    def __len__(self) -> int:
        return self._n_basis + len(self._extras)

    def entry(self, i: int) -> DictEntry:
        if i < 0 or i >= len(self):
            raise IndexError(f"dictionary has no entry {i}")
        if i < self._n_basis:
            length = (i + 1).bit_length() - 1
            off = i - ((1 << length) - 1)
            bits = format(off, f"0{length}b") if length else ""
            return DictEntry(i, length, bits=bits)
        return self._extras[i - self._n_basis]

    @staticmethod
    def basis_index(bits: str) -> int:
        return (1 << len(bits)) - 1 + (int(bits, 2) if bits else 0)

    def entries(self, max_index: int | None = None, length: int | None = None,
                max_length: int | None = None) -> Iterator[DictEntry]:
        """Entries with index ``<= max_index`` filtered by exact or maximal length."""
        top = len(self) - 1 if max_index is None else min(max_index, len(self) - 1)
        lo_len, hi_len = 0, self.basis_max_length
        if length is not None:
            lo_len = hi_len = length
        if max_length is not None:
            hi_len = min(hi_len, max_length)
        for m in range(lo_len, hi_len + 1):
            start = (1 << m) - 1
            for i in range(start, min(start + (1 << m) - 1, top) + 1):
                yield self.entry(i)
        for e in self._extras:
            if e.index > top:
                break
            if (length is None or e.length == length) and (max_length is None or e.length <= max_length):
                yield e

    def has_length(self, n: int, max_index: int | None = None) -> bool:
        """Whether some entry of length n has index ``<= max_index``."""
        return next(iter(self.entries(max_index=max_index, length=n)), None) is not None

    def lookup_bits(self, bits: str, max_index: int | None = None, tol: float = TOL_EIG) -> int | None:
        """Least index of an entry equal to ``|bits><bits|``, without building matrices."""
        top = len(self) - 1 if max_index is None else max_index
        if len(bits) <= self.basis_max_length:
            i = self.basis_index(bits)
            return i if i <= top else None
        j = string_index(bits)
        for e in self._extras:
            if e.index > top:
                break
            if e.length == len(bits):
                amp = [abs(complex(x)) for x in e.vector]
                if abs(amp[j] - 1) <= tol:
                    return e.index
        return None

    def lookup(self, x: ComplexMatrix, max_index: int | None = None, tol: float = TOL_EIG) -> int | None:
        """Least index of an entry equal to the pure state ``x`` (as a projector)."""
        n = x.n_qubits
        top = len(self) - 1 if max_index is None else max_index
        best = None
        if n <= self.basis_max_length and x.is_diagonal():
            d = x.diagonal_real()
            hits = [i for i in range(x.dim) if (d[i] == 1 if x.is_exact else abs(float(d[i]) - 1) <= tol)]
            if len(hits) == 1:
                i = self.basis_index(index_string(hits[0], n))
                if i <= top:
                    best = i
        if best is not None:
            return best
        for e in self._extras:
            if e.index > top:
                break
            if e.length == n and _same_state(e.matrix(), x, tol):
                return e.index
        return None


def _same_state(a: ComplexMatrix, b: ComplexMatrix, tol: float) -> bool:
    if a.is_exact and b.is_exact:
        return a.equals(b)
    return a.max_abs_diff(b) <= tol


# ---------------------------------------------------------------------------
# complexity search


@dataclass(frozen=True)
class CompressionRecord:
    """``QC_L^eps(x | n) <= k``, certified by ``witness`` on k qubits."""

    n: int
    k: int
    witness: ComplexMatrix
    achieved_distance: float
    epsilon: float
    source: str = "dictionary"
    extra: dict = field(default_factory=dict)

    def to_json(self, include_witness: bool = True) -> dict:
        out = {"n": self.n, "k": self.k, "achieved_distance": self.achieved_distance,
               "epsilon": self.epsilon, "source": self.source}
        out.update(self.extra)
        if include_witness:
            out["witness"] = linalg.matrix_to_json(self.witness)
        return out


def _check_epsilon(eps) -> float:
    e = float(eps)
    if not 0 < e < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {eps}")
    return e


def qc_complexity(machine: UnitaryMachine, x: ComplexMatrix, eps, dictionary: StateDictionary | None = None,
                  extra_witnesses: Sequence[ComplexMatrix] = ()) -> CompressionRecord | None:
    """Least k for which a searched witness y of k qubits has ``D(x, L(y; n)) < eps``.

    For every k the dictionary states of length k and the extra witnesses
    of length k are tried.  At ``k = n`` the witness ``L_n^dagger x L_n``
    reproduces ``x`` exactly, so ``None`` is never returned for a valid
    machine; it remains in the signature for machines that are not exact
    enough to reach ``D < eps`` at ``k = n``.
    """
    e = _check_epsilon(eps)
    n = x.n_qubits
    if n > machine.max_depth:
        raise DepthError(f"length {n} exceeds machine depth {machine.max_depth}")
    dictionary = StateDictionary() if dictionary is None else dictionary
    extras = list(extra_witnesses)
    for k in range(n + 1):
        cands = [(y.matrix(), f"dictionary[{y.index}]") for y in dictionary.entries(length=k)]
        cands += [(y, f"extra[{j}]") for j, y in enumerate(extras) if y.n_qubits == k]
        if k == n:
            if machine.is_identity:
                cands.append((x, "self"))
            else:
                u = machine.circuit(n)
                xx = x.to_float() if x.is_exact and not u.is_exact else x
                uu = u.to_float() if u.is_exact and not xx.is_exact else u
                cands.append((uu.dagger() @ xx @ uu, "self"))
        for y, src in cands:
            d = trace_distance(run_machine(machine, y, n), x)
            if d < e:
                return CompressionRecord(n, k, y, d, e, src)
    return None


# ---------------------------------------------------------------------------
# incompressibility test from a machine (first direction)


def f_mass(f: Callable[[int], int], ns: Iterable[int]) -> mpq:
    """``sum 2**-f(n)`` over ``ns``, exactly."""
    return sum((mpq(1, 1 << f(n)) for n in ns), mpq(0))


def default_f(n: int) -> int:
    """``2 * ceil(log2(n + 2))``, whose mass over ``n >= 1`` is exactly 1/4."""
    return 2 * math.ceil(math.log2(n + 2))


def _effective_lengths(f, r: int, t: int) -> list[int]:
    # lengths n <= t where an input of length n - f(n) - r >= 0 can exist
    return [n for n in range(t + 1) if n - f(n) - r >= 0]


def check_part1_precondition(f, r: int, t: int) -> mpq:
    """Sum of ``2**-f(n)`` over lengths that can contribute; must be ``<= 1/4``."""
    total = f_mass(f, _effective_lengths(f, r, t))
    if total > mpq(1, 4):
        raise MassBoundError(f"sum of 2^-f(n) over contributing n <= {t} is {total} > 1/4")
    return total


def part1_outputs(machine: UnitaryMachine, f, r: int, t: int, n: int,
                  dictionary: StateDictionary | None = None) -> list[tuple[int, int]]:
    """``S_{r,t}(n)`` as ``(i, k)`` pairs: ``sigma_i = L(sigma_k (x) |0>; n)``, both indices ``<= t``."""
    dictionary = StateDictionary() if dictionary is None else dictionary
    budget = n - f(n) - r
    if budget < 0 or not dictionary.has_length(n, t):
        return []
    found: dict[int, int] = {}
    for y in dictionary.entries(max_index=t, max_length=budget):
        if machine.is_identity and y.bits is not None:
            # padded basis string, no matrices needed
            i = dictionary.lookup_bits(y.bits + "0" * (n - y.length), max_index=t)
        else:
            out = run_machine(machine, y.matrix(), n)
            i = dictionary.lookup(out, max_index=t)
        if i is not None and i not in found:
            found[i] = y.index
    return sorted(found.items())


def part1_component(machine: UnitaryMachine, f, r: int, t: int, n: int,
                    dictionary: StateDictionary | None = None) -> SpecialProjection:
    """``p_{r,t}(n)``: projection in ``M_n`` onto the span of ``S_{r,t}(n)``."""
    dictionary = StateDictionary() if dictionary is None else dictionary
    pairs = part1_outputs(machine, f, r, t, n, dictionary)
    if not pairs:
        # the zero projection on 0 qubits stands for its lift to M_n
        return _zero_projection()
    ents = [dictionary.entry(i) for i, _ in pairs]
    if all(e.bits is not None for e in ents):
        p = linalg.diagonal_projection(n, [string_index(e.bits) for e in ents])
    else:
        p = span_projector([e.matrix() for e in ents])
    bound = 1 << max(n - f(n) - r + 2, 0)
    if p.rank > bound:
        raise MassBoundError(f"rank {p.rank} of p_(r,t)(n) exceeds 2^(n-f(n)-r+2) = {bound}")
    return p


def build_part1_test(machine: UnitaryMachine, f, r: int, t: int,
                     dictionary: StateDictionary | None = None) -> ComplexMatrix:
    """``p_{r,t} = sup_{n <= t} p_{r,t}(n)``.

    The result is returned on the largest length that contributes and stands
    for its lift to ``M_t``.
    """
    check_part1_precondition(f, r, t)
    out: ComplexMatrix = _zero_projection()
    for n in _effective_lengths(f, r, t):
        p = part1_component(machine, f, r, t, n, dictionary)
        if p.is_zero():
            continue
        m = max(out.n_qubits, n)
        out = projection_join(lift(out, m), lift(p, m))
    return SpecialProjection(out, validate=False)


def part1_qml_test(machine: UnitaryMachine, f, max_levels: int, max_depth: int,
                   dictionary: StateDictionary | None = None) -> QMLTest:
    """``G_r = <p_{r,t}>_t`` for ``r < max_levels`` and ``t <= max_depth``."""
    dictionary = StateDictionary() if dictionary is None else dictionary

    def level(r):
        return QuantumSigma1Set(lambda t: build_part1_test(machine, f, r, t, dictionary), max_depth,
                                f"part1 G_{r}")

    return QMLTest(level, max_levels, f"part1({machine.label})")


# ---------------------------------------------------------------------------
# compressor from a strong Solovay test (second direction)


class GridFunction:
    """``f`` fixed on a grid of lengths, ``f(m) = m`` elsewhere."""

    def __init__(self, grid: dict[int, int]):
        self.grid = dict(grid)

    def __call__(self, m: int) -> int:
        return self.grid.get(m, m)

    def g(self, m: int) -> int:
        return m - self(m)


def _rank_and_tau(p: ComplexMatrix) -> tuple[int, mpq]:
    if p.is_exact:
        tau = tracial_value(p)
        rank = int(tau * p.dim)
    else:
        rank = int(round(float(p.trace().real)))
        tau = mpq(rank, p.dim)
    return rank, tau


def grid_exponent(p: ComplexMatrix) -> int:
    """The f with ``2**-f >= tau(p) > 2**-(f+1)``."""
    rank, tau = _rank_and_tau(p)
    if rank == 0:
        raise PreconditionError("tau(p_r) = 0: f is undefined")
    f = p.n_qubits - (rank - 1).bit_length()
    assert mpq(1, 1 << f) >= tau > mpq(1, 1 << (f + 1))
    return f


def _pad_compatible_unitary(p: ComplexMatrix, g: int, tol: float = RANK_TOL) -> np.ndarray:
    """Unitary whose first ``2**g`` columns span a space containing ``rg p``.

    An orthonormal basis of ``rg p`` comes first; standard basis vectors are
    then added by Gram-Schmidt until the matrix is square.
    """
    w, v = linalg.eigh(p)
    cols = [v[:, j] for j in range(len(w)) if w[j] > 0.5]
    if len(cols) > (1 << g):
        raise MassBoundError(f"rank {len(cols)} exceeds 2^g = {1 << g}")
    dim = p.dim
    basis = np.zeros((dim, dim), dtype=np.complex128)
    m = 0
    for c in cols:
        basis[:, m] = c
        m += 1
    for j in range(dim):
        if m == dim:
            break
        e = np.zeros(dim, dtype=np.complex128)
        e[j] = 1.0
        e -= basis[:, :m] @ (basis[:, :m].conj().T @ e)
        nrm = np.linalg.norm(e)
        if nrm > tol:
            basis[:, m] = e / nrm
            m += 1
    return basis


def solovay_to_machine(test: StrongSolovayTest, max_depth: int | None = None) -> tuple[GridFunction, UnitaryMachine]:
    """Length function f and machine L compressing the ranges of ``p_r``.

    On the grid, ``L_{n_r}`` maps the pad space ``H_g (x) |0^f>`` onto a
    space containing ``rg(p_r)``, where ``g = n_r - f(n_r)``; elsewhere
    ``L_m`` is the identity.
    """
    grid, ranges = {}, {}
    for r in range(test.max_levels):
        n, p = test.item(r)
        f = grid_exponent(p)
        grid[n] = f
        ranges[n] = p
    func = GridFunction(grid)
    cache: dict[int, ComplexMatrix] = {}

    def circuit(m):
        if m not in ranges:
            return identity(m)
        if m not in cache:
            cache[m] = ComplexMatrix(data=_pad_compatible_unitary(ranges[m], func.g(m)))
        return cache[m]

    depth = max(grid, default=0) if max_depth is None else max_depth
    return func, UnitaryMachine(circuit, depth, f"solovay({test.label})")


def compress_via_test(rho: CoherentState, test: StrongSolovayTest, r: int, eps,
                      machine: tuple[GridFunction, UnitaryMachine] | None = None) -> CompressionRecord:
    """Certificate ``QC_L^{sqrt(eps)}(rho|n_r | n_r) <= g(n_r)`` from ``rho(p_r) > 1 - eps``."""
    e = _check_epsilon(eps)
    n, p = test.item(r)
    alpha = evaluate(rho, p)
    if float(alpha) <= 1 - e:
        raise PreconditionError(f"state passes at this level: rho(p_{r}) = {float(alpha):.6g} <= 1 - eps")
    f, L = solovay_to_machine(test) if machine is None else machine
    g = f.g(n)
    z = rho.restrict(n)
    z_proj = state_project(z, p)
    u = L.circuit(n).to_numpy()
    inner = u.conj().T @ z_proj.to_numpy() @ u
    h = 1 << g
    y = inner[:h, :h]
    y = ComplexMatrix(data=(y + y.conj().T) / 2)
    out = run_machine(L, y, n)
    err = out.max_abs_diff(z_proj)
    if err > 10 * TOL_EIG:
        raise PreconditionError(f"range of p_{r} not inside the pad space (residual {err:.3e})")
    dist = trace_distance(out, z)
    bound = math.sqrt(1 - float(alpha))
    if dist > bound + 10 * TOL_EIG or not dist < math.sqrt(e):
        raise PreconditionError(f"distance {dist} exceeds sqrt(1 - alpha) = {bound}")
    return CompressionRecord(n, g, DensityMatrix(y, tol=10 * TOL_EIG), dist, math.sqrt(e), "solovay",
                             {"r": r, "f": f(n), "alpha": _num(alpha), "sqrt_one_minus_alpha": bound})


def _num(x):
    return f"{x.numerator}/{x.denominator}" if linalg.is_rational(x) else float(x)
