import math

import numpy as np
import pytest
from gmpy2 import mpq

from qcantor import linalg
from qcantor.compression import (
    StateDictionary,
    UnitaryMachine,
    build_part1_test,
    check_part1_precondition,
    compress_via_test,
    default_f,
    f_mass,
    grid_exponent,
    part1_component,
    part1_outputs,
    part1_qml_test,
    qc_complexity,
    run_machine,
    solovay_to_machine,
)
from qcantor.errors import DepthError, DimensionError, MassBoundError, NotUnitary, PreconditionError
from qcantor.fixtures import (
    PART2_V,
    part2_small_test,
    part2_state,
    part2_test,
    random_density,
    zeros_sequence,
)
from qcantor.linalg import (
    ComplexMatrix,
    basis_projector,
    diagonal,
    diagonal_projection,
    identity,
    ket_projector,
    tensor,
    trace_distance,
    tracial_value,
)
from qcantor.qtests import StrongSolovayTest
from qcantor.states import evaluate, from_bits, tracial_state

H = ComplexMatrix(data=np.array([[1, 1], [1, -1]]) / math.sqrt(2))


def hadamard_machine(depth=4):
    return UnitaryMachine.from_matrices({1: H}, depth, label="hadamard")


# ---------------------------------------------------------------------------
# machines


def test_run_machine_examples():
    ident = UnitaryMachine.identity(4)
    assert run_machine(ident, basis_projector("0"), 3).equals(basis_projector("000"))
    rev = UnitaryMachine.bit_reversal(4)
    out = run_machine(rev, basis_projector("1"), 2)
    assert out.equals(basis_projector("01"))
    assert out.diagonal_real()[2] == 1


def test_run_machine_preserves_spectrum():
    y = random_density(np.random.default_rng(2), 2)
    ev_in = np.sort(linalg.eigvalsh(tensor(y, basis_projector("0"))))
    for m in (UnitaryMachine.bit_reversal(4), hadamard_machine()):
        out = run_machine(m, y, 3)
        assert np.allclose(np.sort(linalg.eigvalsh(out)), ev_in, atol=1e-12)
        assert float(out.trace().re if out.is_exact else out.trace().real) == pytest.approx(1)


def test_run_machine_errors():
    with pytest.raises(DimensionError):
        run_machine(UnitaryMachine.identity(4), identity(3), 2)
    with pytest.raises(DepthError):
        run_machine(UnitaryMachine.identity(2), basis_projector("0"), 3)
    bad = UnitaryMachine.from_matrices({1: diagonal([1, 2])}, 2)
    with pytest.raises(NotUnitary):
        bad.circuit(1)


def test_float_machine_output():
    out = run_machine(hadamard_machine(), identity(0), 1)
    assert out.equals(ket_projector([1 / math.sqrt(2), 1 / math.sqrt(2)]), 1e-12)


# ---------------------------------------------------------------------------
# dictionary


def test_dictionary_listing():
    d = StateDictionary(3)
    assert [d.entry(i).bits for i in range(7)] == ["", "0", "1", "00", "01", "10", "11"]
    assert d.basis_index("000000") == 63
    assert all(d.entry(i).length <= i for i in range(len(d)))
    assert d.lookup(basis_projector("10")) == 5
    assert d.lookup_bits("10", max_index=4) is None


def test_dictionary_extras():
    d = StateDictionary(2).extended([PART2_V])
    e = d.entry(len(d) - 1)
    assert e.length == 1 and e.index == 7
    assert d.lookup(ket_projector(PART2_V)) == 7
    with pytest.raises(ValueError):
        StateDictionary(2, [(mpq(1), mpq(1))])
    with pytest.raises(IndexError):
        d.entry(99)


# ---------------------------------------------------------------------------
# complexity search


def test_qc_examples():
    ident = UnitaryMachine.identity(8)
    rec = qc_complexity(ident, basis_projector("000000"), mpq(1, 10))
    assert rec.k == 0 and rec.achieved_distance == 0
    rec = qc_complexity(ident, basis_projector("111111"), mpq(1, 2))
    assert rec.k == 6 and rec.achieved_distance == 0
    rec = qc_complexity(ident, diagonal([mpq(1, 2)] * 2), 1 - 1e-9)
    assert rec.k == 0 and rec.achieved_distance == pytest.approx(0.5)


def test_qc_is_strict():
    rec = qc_complexity(UnitaryMachine.identity(4), diagonal([mpq(1, 2)] * 2), 0.5)
    assert rec.k == 1


def test_qc_with_float_machine():
    plus = ket_projector([1 / math.sqrt(2), 1 / math.sqrt(2)])
    rec = qc_complexity(hadamard_machine(), plus, 0.01)
    assert rec.k == 0 and rec.achieved_distance < 1e-12


def test_qc_monotone_in_epsilon_and_dictionary():
    x = tensor(ket_projector(PART2_V), basis_projector("0"))
    ident = UnitaryMachine.identity(4)
    ks = [qc_complexity(ident, x, e).k for e in (0.9, 0.7, 0.5, 0.1)]
    assert ks == sorted(ks) and ks[0] == 0 and ks[-1] == 2
    small = qc_complexity(ident, x, 0.5, StateDictionary(4))
    big = qc_complexity(ident, x, 0.5, StateDictionary(4).extended([PART2_V]))
    assert big.k == 1 < small.k == 2
    via_extra = qc_complexity(ident, x, 0.5, extra_witnesses=[ket_projector(PART2_V)])
    assert via_extra.k == 1 and via_extra.source == "extra[0]"


def test_qc_epsilon_validation():
    with pytest.raises(ValueError):
        qc_complexity(UnitaryMachine.identity(2), identity(1), 1.5)


def test_qc_self_witness_for_non_identity_machine():
    x = random_density(np.random.default_rng(4), 2)
    rec = qc_complexity(UnitaryMachine.bit_reversal(3), x, 1e-6, StateDictionary(0))
    assert rec.k == 2 and rec.achieved_distance < 1e-12


# ---------------------------------------------------------------------------
# first direction: incompressibility test


def test_default_f_mass():
    assert f_mass(default_f, range(1, 9)) <= mpq(1, 4)
    # f = 2m on the 2^(m-1) lengths with ceil(log2(n+2)) = m, so the mass tends to 1/4
    assert f_mass(default_f, range(1, 2 ** 10 - 1)) == mpq(1, 4) - mpq(1, 2 ** 11)


def test_part1_examples():
    ident = UnitaryMachine.identity(12)
    for r in range(1, 4):
        assert build_part1_test(ident, lambda n: n, r, 12).is_zero()
    # at r = 0 the empty input is admissible and the mass precondition fails
    with pytest.raises(MassBoundError):
        build_part1_test(ident, lambda n: n, 0, 12)
    p = part1_component(ident, default_f, 1, 12, 6)
    assert p.is_zero() and tracial_value(p) <= mpq(1, 2 ** (default_f(6) + 1 - 2))
    assert build_part1_test(ident, default_f, 13, 12).is_zero()


def test_part1_precondition():
    assert check_part1_precondition(default_f, 0, 63) <= mpq(1, 4)
    with pytest.raises(MassBoundError):
        check_part1_precondition(lambda n: 1, 0, 4)


def test_part1_masses_and_monotone():
    ident = UnitaryMachine.identity(12)
    for r in range(5):
        prev = None
        for t in range(13):
            p = build_part1_test(ident, default_f, r, t)
            assert tracial_value(p) <= mpq(1, 1 << r)
            if prev is not None:
                assert linalg.projection_leq(prev, linalg.lift(p, max(p.n_qubits, prev.n_qubits)))
            prev = linalg.lift(p, max(p.n_qubits, prev.n_qubits if prev is not None else 0))


def test_part1_contrapositive():
    ident = UnitaryMachine.identity(63)
    assert part1_outputs(ident, default_f, 0, 63, 6) == [(63, 0)]
    p = part1_component(ident, default_f, 0, 63, 6)
    assert p.equals(diagonal_projection(6, [0]))
    rho = from_bits(zeros_sequence(6))
    assert evaluate(rho, p) == 1
    assert qc_complexity(ident, rho(6), 0.5).k == 0 < 6 - default_f(6) - 0 + 1


def test_part1_qml_test_is_valid():
    t = part1_qml_test(UnitaryMachine.identity(8), default_f, 4, 8)
    assert t.mass_violations(8) == []
    t.level(0).validate(8)


# ---------------------------------------------------------------------------
# second direction: compressor from a strong Solovay test


@pytest.mark.parametrize("p, f", [
    (basis_projector("000"), 3),
    (diagonal_projection(3, [1, 6]), 2),
    (identity(3), 0),
])
def test_grid_exponent_examples(p, f):
    assert grid_exponent(p) == f
    tau = tracial_value(p)
    assert mpq(1, 1 << f) >= tau > mpq(1, 1 << (f + 1))


def test_grid_exponent_of_zero_raises():
    with pytest.raises(PreconditionError):
        grid_exponent(linalg.zeros(2))


def test_solovay_to_machine_range():
    t = part2_test(3)
    f, L = solovay_to_machine(t, 6)
    assert [f(n) for n in (1, 2, 3, 4, 5)] == [1, 1, 2, 3, 5]
    assert f_mass(f, range(0, 6)) <= 4
    for r in range(3):
        n, p = t.item(r)
        u = L.circuit(n).to_numpy()
        g = f.g(n)
        cols = u[:, : 1 << g]
        proj = cols @ cols.conj().T
        # rg(p) inside the span of the first 2^g columns
        assert np.allclose(proj @ p.to_numpy(), p.to_numpy(), atol=1e-9)
    assert L.circuit(5).equals(identity(5))


def test_compress_examples():
    zeros = from_bits(zeros_sequence(4))
    t = StrongSolovayTest(lambda r: (r + 1, basis_projector("0" * (r + 1))), 3, 1)
    rec = compress_via_test(zeros, t, 2, 0.5)
    assert rec.k == 0 and rec.achieved_distance == pytest.approx(0, abs=1e-12)
    assert rec.witness.n_qubits == 0
    half = StrongSolovayTest(lambda r: (2, diagonal_projection(2, [0, 1])), 1, 1)
    with pytest.raises(PreconditionError, match="passes at this level"):
        compress_via_test(tracial_state(2), half, 0, 0.25)
    rho = part2_state(4, "9/10")
    rec = compress_via_test(rho, part2_small_test(), 0, 0.2)
    assert rec.k == 1 and rec.achieved_distance <= math.sqrt(0.1) + 1e-8


def test_compress_part2_end_to_end():
    t = part2_test(3)
    rho = part2_state(6)
    for r in range(3):
        n, p = t.item(r)
        assert evaluate(rho, p) >= mpq(9, 10)
        rec = compress_via_test(rho, t, r, 0.1)
        f = rec.extra["f"]
        assert rec.k == n - f < n
        assert mpq(1, 1 << f) >= tracial_value(p) > mpq(1, 1 << (f + 1))
        assert rec.achieved_distance <= math.sqrt(0.1) + 1e-8
        _, L = solovay_to_machine(t)
        out = run_machine(L, rec.witness, n)
        assert trace_distance(out, rho(n)) == pytest.approx(rec.achieved_distance, abs=1e-9)
