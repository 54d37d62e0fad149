"""Acceptance suite: one check per numbered criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
Tolerances and runtime budgets are pinned below.
"""

import io
import math
import sys
import time
from contextlib import redirect_stdout

import numpy as np
import pytest
from gmpy2 import mpq

from qcantor import cli, linalg
from qcantor.bridge import bridge_report, check_lifting, select_strings
from qcantor.classical import clopen_measure, prefix_test
from qcantor.compression import (
    StateDictionary,
    UnitaryMachine,
    build_part1_test,
    compress_via_test,
    default_f,
    f_mass,
    part1_component,
    run_machine,
    solovay_to_machine,
)
from qcantor.entropy import cross_entropy_statistic, von_neumann_entropy
from qcantor.fixtures import (
    epr_test,
    fixture_states,
    fixture_tests,
    part2_state,
    part2_test,
    prefix_qml_test,
    random_density,
    random_matrix_sequence,
    random_projection,
    rotated_basis_test,
    zeros_sequence,
)
from qcantor.linalg import basis_projector, diagonal, fidelity, state_project, trace_distance, tracial_value
from qcantor.qtests import classical_to_quantum, evaluate_test, lln_statistic, universal_combine, verdict
from qcantor.states import (
    ClassicalSequence,
    bernoulli_measure,
    bit_average,
    check_coherence,
    epr_chain,
    epr_matrix,
    evaluate,
    from_bits,
    from_measure,
    iid_state,
    tracial_state,
)

TOL = 1e-9          # float comparisons in criteria 1, 3, 4, 11
PROP46_TOL = 1e-8   # criteria 7 and 8
ALPHA_MIN = 0.01    # criterion 7
DELTAS = [mpq(1, 4), mpq(1, 3), mpq(1, 2), mpq(3, 4)]
BUDGET = {1: 10.0, 2: 1.0, 5: 30.0, 12: 120.0}


def _lift_pair(p, q):
    m = max(p.n_qubits, q.n_qubits)
    return linalg.lift(p, m), linalg.lift(q, m)


# ---------------------------------------------------------------------------
# criteria; each returns (ok, detail)


def criterion_1():
    rng = np.random.default_rng(2024)
    states = {
        "bits": from_bits(ClassicalSequence.periodic("0110", 8)),
        "measure": from_measure(bernoulli_measure(mpq(1, 3)), 8),
        "iid": iid_state(diagonal([mpq(3, 4), mpq(1, 4)]), 8),
        "epr": epr_chain(8),
    }
    for j in range(20):
        states[f"random_{j}"] = random_matrix_sequence(rng, 8)
    worst = 0.0
    for rho in states.values():
        rep = check_coherence(rho, 8)
        exact = all(rho(n).is_exact for n in range(9))
        if not rep.base_ok or (exact and rep.max_deviation != 0) or rep.max_deviation > TOL:
            return False, f"{rho.label}: deviation {rep.max_deviation}"
        worst = max(worst, rep.max_deviation)
    return True, f"{len(states)} states coherent to depth 8, max deviation {worst}"


def criterion_2():
    a = linalg.partial_trace(basis_projector("10")).equals(basis_projector("1"))
    b = linalg.partial_trace(epr_matrix()).equals(diagonal([mpq(1, 2)] * 2))
    return a and b, "T(|10><10|) = |1><1| and T(beta) = I/2, exact"


def criterion_3():
    tests = fixture_tests(7, 8)
    for name, t in tests.items():
        for r in range(7):
            for k in range(9):
                m = t.level(r).mass(k)
                if not linalg.is_rational(m) or m > mpq(1, 1 << r):
                    return False, f"{name}: tau(p^{r}_{k}) = {m}"
    rng = np.random.default_rng(77)
    worst = -1.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        p, q = random_projection(rng, n), random_projection(rng, n)
        j = linalg.projection_join(p, q)
        gap = float(tracial_value(j)) - float(tracial_value(p) + tracial_value(q))
        worst = max(worst, gap)
        if gap > TOL:
            return False, f"join exceeds sum by {gap}"
    return True, f"4 fixture tests within 2^-r for r<=6, k<=8; 100 joins, max excess {worst:.3g}"


def criterion_4():
    tests = [prefix_qml_test(7, 8), rotated_basis_test(7, 8), epr_test(7, 8)]
    states = fixture_states(8)
    checked = 0
    for n in range(4):
        for k in range(n + 1, 9):
            q = universal_combine(tests, n, k)
            if float(tracial_value(q)) > 2.0 ** -n + TOL:
                return False, f"tau(q^{n}_{k}) = {tracial_value(q)}"
            for e, t in enumerate(tests):
                if e + n + 1 > k:
                    continue
                p = t.level(n + e + 1).projection(k)
                for name, rho in states.items():
                    if float(evaluate(rho, q)) < float(evaluate(rho, p)) - TOL:
                        return False, f"domination fails: {name}, n={n}, k={k}, e={e}"
                    checked += 1
    return True, f"mass <= 2^-n and {checked} domination checks over 5 states, n<=3, k<=8"


def criterion_5():
    depth = 8
    z = zeros_sequence(depth)
    vals = evaluate_test(from_bits(z), classical_to_quantum(prefix_test(depth + 1), depth), depth)
    a = verdict(vals, mpq(99, 100), depth=depth).fails
    t = rotated_basis_test(6, depth)
    rep = bridge_report(t, z.prefix, mpq(1, 2), depth)
    b = rep.fails_quantum and all(rep.covered[:6])
    b = b and all(m <= mpq(2, 1 << r) for r, m in enumerate(rep.measures))
    return a and b, f"(a) fails at 0.99: {a}; (b) measures {[str(m) for m in rep.measures]}, covered r<=5: {b}"


def _fixture_projections():
    out = []
    for t in fixture_tests(7, 5).values():
        for r in range(7):
            for k in range(6):
                p = t.level(r).projection(k)
                if p.is_exact and 1 <= p.n_qubits <= 5:
                    out.append(p)
    rng = np.random.default_rng(6)
    out += [random_projection(rng, n) for n in (1, 2, 3) for _ in range(8)]
    out.append(part2_test(3).item(1)[1])
    return out


def criterion_6():
    projs = _fixture_projections()
    for p in projs:
        tau = tracial_value(p)
        for d in DELTAS:
            sel = select_strings(p, d)
            if clopen_measure(p.n_qubits, sel.strings) > tau / d:
                return False, f"counting bound fails at delta {d}"
            if not check_lifting(p, d):
                return False, f"lifting fails at delta {d}"
    return True, f"{len(projs)} projections x {len(DELTAS)} deltas: counting bound and lifting exact"


def criterion_7():
    rng = np.random.default_rng(4606)
    done, worst_a, worst_f = 0, -1.0, -1.0
    while done < 200:
        n = int(rng.integers(1, 5))
        s = random_density(rng, n)
        p = random_projection(rng, n, int(rng.integers(1, (1 << n) + 1)))
        alpha = float(linalg.trace_product(s, p))
        if alpha <= ALPHA_MIN:
            continue
        proj = state_project(s, p)
        d = trace_distance(proj, s)
        f = fidelity(proj, s)
        worst_a = max(worst_a, d - math.sqrt(1 - alpha))
        worst_f = max(worst_f, d - math.sqrt(max(0.0, 1 - f * f)))
        done += 1
    ok = worst_a <= PROP46_TOL and worst_f <= PROP46_TOL
    return ok, f"200 pairs: max D - sqrt(1-alpha) = {worst_a:.3g}, max D - sqrt(1-F^2) = {worst_f:.3g}"


def criterion_8():
    t = part2_test(3)
    rho = part2_state(6)
    f, L = solovay_to_machine(t)
    eps = 0.1
    rows = []
    for r in range(3):
        n, p = t.item(r)
        tau = tracial_value(p)
        if tau != mpq(1, 1 << (r + 1)) or n != r + 2 or evaluate(rho, p) < mpq(9, 10):
            return False, f"fixture malformed at r={r}"
        rec = compress_via_test(rho, t, r, eps, (f, L))
        fn = f(n)
        if not (mpq(1, 1 << fn) >= tau > mpq(1, 1 << (fn + 1))):
            return False, f"sandwich fails at n={n}"
        if not (rec.k == f.g(n) == n - fn < n):
            return False, f"k = {rec.k} at n={n}"
        if rec.achieved_distance > math.sqrt(eps) + PROP46_TOL:
            return False, f"distance {rec.achieved_distance} at n={n}"
        recheck = trace_distance(run_machine(L, rec.witness, n), rho(n))
        if abs(recheck - rec.achieved_distance) > PROP46_TOL:
            return False, "witness does not reproduce the distance"
        rows.append(f"n={n}:k={rec.k},D={rec.achieved_distance:.4f}")
    return True, "; ".join(rows) + f" (bound {math.sqrt(eps):.4f})"


def criterion_9():
    mass = f_mass(default_f, range(1, 9))
    if mass > mpq(1, 4):
        return False, f"sum 2^-f over n<=8 is {mass}"
    ident = UnitaryMachine.identity(63)
    dictionary = StateDictionary()
    for r in range(5):
        prev = None
        for t in range(13):
            p = build_part1_test(ident, default_f, r, t, dictionary)
            if tracial_value(p) > mpq(1, 1 << r):
                return False, f"tau(p_({r},{t})) = {tracial_value(p)}"
            if prev is not None:
                a, b = _lift_pair(prev, p)
                if not linalg.projection_leq(a, b):
                    return False, f"not monotone at r={r}, t={t}"
            prev = p
    comp = part1_component(ident, default_f, 0, 63, 6, dictionary)
    val = evaluate(from_bits(zeros_sequence(6)), comp)
    return val == 1, f"f mass {mass}; r<=4, t<=12 within 2^-r and monotone; contrapositive (n=6, t=63) value {val}"


def criterion_10():
    tau = tracial_state(10)
    if any(lln_statistic(tau, n) != mpq(1, 2) for n in range(1, 11)):
        return False, "tracial statistic differs from 1/2"
    iid = iid_state(diagonal([mpq(2, 3), mpq(1, 3)]), 10)
    if any(lln_statistic(iid, n) != mpq(1, 3) for n in range(1, 11)):
        return False, "iid statistic differs from 1/3"
    z = ClassicalSequence.periodic("0111010", 10)
    if any(lln_statistic(from_bits(z), n) != bit_average(z, n) for n in range(1, 11)):
        return False, "bit sequence statistic differs from the bit average"
    return True, "tracial 1/2 and iid 1/3 exactly for n<=10; bits match running averages"


def criterion_11():
    for n in range(9):
        if abs(von_neumann_entropy(tracial_state(8)(n)) - n) > TOL:
            return False, f"H(I/2^{n}) != {n}"
    tau = tracial_state(6)
    for rho in list(fixture_states(6).values()) + [random_matrix_sequence(np.random.default_rng(3), 6)]:
        for n in range(1, 7):
            if cross_entropy_statistic(rho, tau, n) != 1.0:
                return False, f"cross entropy against tau is not exactly 1 ({rho.label}, n={n})"
    b = mpq(1, 4)
    h = -(0.25 * math.log2(0.25) + 0.75 * math.log2(0.75))
    iid = iid_state(diagonal([1 - b, b]), 6)
    worst = max(abs(cross_entropy_statistic(iid, iid, n) - h) for n in range(1, 7))
    return worst <= TOL, f"H(I/2^n) = n; cross vs tau = 1 exactly; iid self-statistic error {worst:.2g}"


def criterion_12():
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        with redirect_stdout(buf):
            code = cli.main(["demo", "--seed", "7"])
        outs.append((code, buf.getvalue()))
    same = outs[0][1] == outs[1][1]
    return same and outs[0][0] == 0, f"byte-identical: {same}, exit {outs[0][0]}, {len(outs[0][1])} bytes"


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 13)}


def run_criterion(i: int) -> tuple[bool, str, float]:
    start = time.perf_counter()
    try:
        ok, detail = CRITERIA[i]()
    except Exception as exc:  # a crash is a failure, reported on the same line
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - start
    budget = BUDGET.get(i)
    if budget is not None and elapsed > budget:
        ok, detail = False, f"{detail}; runtime {elapsed:.2f}s exceeds {budget:.0f}s"
    line = f"{'PASS' if ok else 'FAIL'} criterion {i:2d} ({elapsed:6.2f}s): {detail}"
    return ok, line, elapsed


@pytest.mark.parametrize("i", list(CRITERIA))
def test_criterion(i, capsys):
    ok, line, _ = run_criterion(i)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(i) for i in CRITERIA]
    for _, line, _ in results:
        print(line)
    sys.exit(0 if all(ok for ok, _, _ in results) else 1)
