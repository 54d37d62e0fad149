"""Small exact fixtures: tests, states and seeded random rational objects.

Everything here is deterministic given a seed and uses the exact backend.
"""

from __future__ import annotations

import numpy as np
from gmpy2 import mpq

from . import linalg
from .classical import prefix_test
from .compression import StateDictionary, UnitaryMachine, default_f, part1_qml_test
from .linalg import ComplexMatrix, SpecialProjection, identity, ket_projector, tensor
from .qtests import (
    QMLTest,
    QuantumSigma1Set,
    StrongSolovayTest,
    _zero_projection,
    classical_to_quantum,
)
from .states import (
    ClassicalSequence,
    CoherentState,
    bernoulli_measure,
    epr_chain,
    epr_matrix,
    from_bits,
    from_measure,
    iid_state,
    matrix_sequence,
    tracial_state,
)

# unit vectors with rational entries
ROTATED_V = (mpq(24, 25), mpq(7, 25))
PART2_V = (mpq(3, 5), mpq(4, 5))
PART2_V_PERP = (mpq(-4, 5), mpq(3, 5))


def _power(a: ComplexMatrix, k: int) -> ComplexMatrix:
    out = identity(0, a.backend)
    for _ in range(k):
        out = tensor(out, a)
    return out


# ---------------------------------------------------------------------------
# tests


def prefix_qml_test(max_levels: int, max_depth: int) -> QMLTest:
    """Level r projects onto strings starting with ``0^r``; ``tau = 2**-r``."""
    t = classical_to_quantum(prefix_test(max_levels), max_depth)
    t.label = "prefix"
    return t


def rotated_basis_test(max_levels: int, max_depth: int) -> QMLTest:
    """Level r: ``|0^r><0^r| (x) |v><v|`` with ``v = (24/25, 7/25)``, from depth r+1 on.

    ``tau = 2**-(r+1)``; the sequence ``000...`` gives value ``576/625``.
    """
    pv = ket_projector(ROTATED_V)

    def level(r):
        p = SpecialProjection(tensor(linalg.basis_projector("0" * r), pv), validate=False)
        return QuantumSigma1Set(lambda i: p if i >= r + 1 else _zero_projection(), max_depth, f"rotated_{r}")

    return QMLTest(level, max_levels, "rotated")


def epr_test(max_levels: int, max_depth: int) -> QMLTest:
    """Level r: ``beta^{(x)ceil(r/2)}``, active from depth ``2 ceil(r/2)``; ``tau = 4**-ceil(r/2)``."""
    beta = epr_matrix()

    def level(r):
        m = (r + 1) // 2
        p = SpecialProjection(_power(beta, m), validate=False)
        return QuantumSigma1Set(lambda i: p if i >= 2 * m else _zero_projection(), max_depth, f"epr_{r}")

    return QMLTest(level, max_levels, "epr")


def part1_test(max_levels: int, max_depth: int) -> QMLTest:
    return part1_qml_test(UnitaryMachine.identity(max(max_depth, 8)), default_f, max_levels, max_depth,
                          StateDictionary())


def fixture_tests(max_levels: int = 7, max_depth: int = 8) -> dict[str, QMLTest]:
    return {
        "prefix": prefix_qml_test(max_levels, max_depth),
        "rotated": rotated_basis_test(max_levels, max_depth),
        "epr": epr_test(max_levels, max_depth),
        "part1": part1_test(max_levels, max_depth),
    }


# ---------------------------------------------------------------------------
# states


def zeros_sequence(max_depth: int) -> ClassicalSequence:
    return ClassicalSequence.periodic("0", max_depth)


def fixture_states(max_depth: int = 8) -> dict[str, CoherentState]:
    return {
        "tracial": tracial_state(max_depth),
        "zeros": from_bits(zeros_sequence(max_depth)),
        "epr": epr_chain(max_depth),
        "iid_2_3": iid_state(linalg.diagonal([mpq(2, 3), mpq(1, 3)]), max_depth, "iid(2/3,1/3)"),
        "bernoulli_1_3": from_measure(bernoulli_measure(mpq(1, 3)), max_depth),
    }


# ---------------------------------------------------------------------------
# seeded random rational objects


def _rand_rational_matrix(rng: np.random.Generator, dim: int, cols: int | None = None, span: int = 3):
    cols = dim if cols is None else cols
    re = linalg._ozeros(dim)
    im = linalg._ozeros(dim)
    for j in range(cols):
        for i in range(dim):
            re[i, j] = mpq(int(rng.integers(-span, span + 1)))
            im[i, j] = mpq(int(rng.integers(-span, span + 1)))
    return ComplexMatrix(re=re, im=im)


def random_projection(rng: np.random.Generator, n: int, rank: int | None = None) -> SpecialProjection:
    """Exact projection onto the span of random Gaussian-integer vectors."""
    dim = 1 << n
    rank = int(rng.integers(0, dim + 1)) if rank is None else rank
    if rank == 0:
        return SpecialProjection(linalg.zeros(n), validate=False)
    return linalg.span_projector([_rand_rational_matrix(rng, dim, rank)])


def random_density(rng: np.random.Generator, n: int, rank: int | None = None) -> ComplexMatrix:
    """``A A^dagger / Tr(A A^dagger)`` for a random Gaussian-integer A (exact)."""
    dim = 1 << n
    rank = int(rng.integers(1, dim + 1)) if rank is None else rank
    while True:
        a = _rand_rational_matrix(rng, dim, rank)
        m = a @ a.dagger()
        tr = m.trace().re
        if tr != 0:
            return m / tr


def random_bloch_state(rng: np.random.Generator, denom: int = 4) -> ComplexMatrix:
    """``(I + xX + yY + zZ)/2`` with rational ``x**2 + y**2 + z**2 <= 1``."""
    while True:
        x, y, z = (mpq(int(rng.integers(-denom, denom + 1)), denom) for _ in range(3))
        if x * x + y * y + z * z <= 1:
            break
    half = mpq(1, 2)
    return ComplexMatrix.from_exact([[half * (1 + z), half * x], [half * x, half * (1 - z)]],
                                    [[0, -half * y], [half * y, 0]])


def random_matrix_sequence(rng: np.random.Generator, depth: int, components: int = 2,
                           label: str = "random_sequence") -> CoherentState:
    """Separable mixture ``sum_j w_j (x)_i sigma_{j,i}``, listed explicitly up to ``depth``."""
    weights = [mpq(int(rng.integers(1, 5))) for _ in range(components)]
    total = sum(weights, mpq(0))
    weights = [w / total for w in weights]
    factors = [[random_bloch_state(rng) for _ in range(depth)] for _ in range(components)]
    # the weight rides on the 0-qubit factor so products never need rescaling
    products = [identity(0) * w for w in weights]
    mats = [identity(0)]
    for n in range(depth):
        products = [tensor(products[j], factors[j][n]) for j in range(components)]
        acc = products[0]
        for j in range(1, components):
            acc = acc + products[j]
        mats.append(acc)
    return matrix_sequence(mats, label)


def corrupted_sequence(depth: int, bad_level: int) -> CoherentState:
    """Tracial matrices except ``|0..0><0..0|`` at ``bad_level``: incoherent there."""
    mats = [linalg.diagonal([mpq(1, 1 << n)] * (1 << n)) for n in range(depth + 1)]
    mats[bad_level] = linalg.basis_projector("0" * bad_level)
    return matrix_sequence(mats, "corrupted")


# ---------------------------------------------------------------------------
# strong Solovay fixtures


def part2_projection(n: int) -> SpecialProjection:
    """``I (x) |v><v|^{(x)(n-1)}`` with ``v = (3/5, 4/5)``: rank 2 on n qubits."""
    return SpecialProjection(tensor(identity(1), _power(ket_projector(PART2_V), n - 1)), validate=False)


def part2_test(levels: int = 3) -> StrongSolovayTest:
    """``n_r = r + 2``, ``tau(p_r) = 2**-(r+1)``; total mass below 1."""
    return StrongSolovayTest(lambda r: (r + 2, part2_projection(r + 2)), levels, 1, "part2")


def part2_sigma(weight) -> ComplexMatrix:
    """``w |v><v| + (1-w) |v_perp><v_perp|``."""
    w = linalg.rational(weight)
    return ket_projector(PART2_V) * w + ket_projector(PART2_V_PERP) * (1 - w)


def part2_state(max_depth: int = 8, weight="99/100") -> CoherentState:
    return iid_state(part2_sigma(weight), max_depth, f"iid(part2, {weight})")


def part2_small_test() -> StrongSolovayTest:
    """Single level ``p = |v><v| (x) I`` on two qubits, ``tau = 1/2``."""
    p = SpecialProjection(tensor(ket_projector(PART2_V), identity(1)), validate=False)
    return StrongSolovayTest(lambda r: (2, p), 1, 1, "part2_small")
