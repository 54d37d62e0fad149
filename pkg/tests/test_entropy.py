import math

import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from qcantor import linalg
from qcantor.entropy import cross_entropy_report, cross_entropy_statistic, entropy_rate, von_neumann_entropy
from qcantor.errors import DepthError, StatisticUndefined
from qcantor.fixtures import random_bloch_state, random_density, random_matrix_sequence
from qcantor.linalg import basis_projector, diagonal, tensor
from qcantor.states import (
    ClassicalSequence,
    bernoulli_measure,
    epr_chain,
    from_bits,
    from_measure,
    iid_state,
    tracial_state,
)

H34 = -0.75 * math.log2(0.75) - 0.25 * math.log2(0.25)
SIGMA34 = diagonal([mpq(3, 4), mpq(1, 4)])


def test_von_neumann_examples():
    assert von_neumann_entropy(basis_projector("0101")) == 0
    assert von_neumann_entropy(epr_chain(2)(2)) == pytest.approx(0, abs=1e-9)
    for n in range(6):
        assert von_neumann_entropy(tracial_state(6)(n)) == n
    assert von_neumann_entropy(SIGMA34) == pytest.approx(0.8113, abs=1e-4)
    assert von_neumann_entropy(SIGMA34) == pytest.approx(H34, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 2), m=st.integers(1, 2))
def test_entropy_additive_and_bounded(seed, n, m):
    rng = np.random.default_rng(seed)
    a, b = random_density(rng, n), random_density(rng, m)
    ha, hb = von_neumann_entropy(a), von_neumann_entropy(b)
    assert von_neumann_entropy(tensor(a, b)) == pytest.approx(ha + hb, abs=1e-8)
    assert 0 <= ha <= n + 1e-9


def test_entropy_rate_examples():
    assert [row[2] for row in entropy_rate(tracial_state(6), 6).rows] == [1.0] * 6
    assert [row[2] for row in entropy_rate(from_bits(ClassicalSequence.periodic("01", 6)), 6).rows] == [0.0] * 6
    for n, h, rate in entropy_rate(iid_state(SIGMA34, 6), 6).rows:
        assert rate == pytest.approx(H34, abs=1e-9) and h == pytest.approx(n * H34, abs=1e-9)
    with pytest.raises(DepthError):
        entropy_rate(tracial_state(3), 4)


def test_cross_entropy_examples():
    iid = iid_state(SIGMA34, 6)
    for n in range(1, 7):
        assert cross_entropy_statistic(iid, iid, n) == pytest.approx(H34, abs=1e-9)
    z = ClassicalSequence.periodic("011", 6)
    mu = bernoulli_measure(mpq(1, 3))
    psi = from_measure(mu, 6)
    for n in range(1, 7):
        expect = -math.log2(float(mu(z.prefix(n)))) / n
        assert cross_entropy_statistic(from_bits(z), psi, n) == pytest.approx(expect, abs=1e-12)


def test_cross_entropy_against_tracial_is_exactly_one():
    tau = tracial_state(6)
    rng = np.random.default_rng(1)
    rhos = [epr_chain(6), from_bits(ClassicalSequence.periodic("1", 6)), iid_state(SIGMA34, 6),
            random_matrix_sequence(rng, 6)]
    for rho in rhos:
        for n in range(1, 7):
            assert cross_entropy_statistic(rho, tau, n) == 1.0


def test_cross_entropy_self_equals_rate_for_non_diagonal():
    s = iid_state(random_bloch_state(np.random.default_rng(8)), 4)
    for n in range(1, 5):
        assert cross_entropy_statistic(s, s, n) == pytest.approx(von_neumann_entropy(s(n)) / n, abs=1e-9)


def test_cross_entropy_undefined_off_support():
    zeros = from_bits(ClassicalSequence.periodic("0", 3))
    ones = from_bits(ClassicalSequence.periodic("1", 3))
    with pytest.raises(StatisticUndefined, match="undefined at this depth"):
        cross_entropy_statistic(zeros, ones, 2)
    with pytest.raises(StatisticUndefined):
        cross_entropy_statistic(tracial_state(2), epr_chain(2), 2)
    # a pure psi is fine when rho lives on its range
    assert cross_entropy_statistic(epr_chain(2), epr_chain(2), 2) == pytest.approx(0, abs=1e-9)


def test_report_layout():
    rep = cross_entropy_report(iid_state(SIGMA34, 3), tracial_state(3), 3)
    js = rep.to_json()
    assert js["kind"] == "cross_entropy"
    assert list(js["per_level"][0]) == ["n", "H_n", "rate_n", "cross_entropy_n"]
    assert rep.csv_rows()[0] == ["n", "H_n", "rate_n", "cross_entropy_n"]
    assert [r[3] for r in rep.csv_rows()[1:]] == [1.0, 1.0, 1.0]
    assert linalg.TOL_EIG == 1e-9
