"""JSON specifications of states, tests, machines and dictionaries.

A spec is either a short name (``"tracial"``) or a dict with a ``"kind"``
key.  Rationals are written as ``"p/q"`` strings or integers; matrices use
the layout of :func:`qcantor.linalg.matrix_to_json` or plain nested lists.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from gmpy2 import mpq

from . import fixtures, linalg
from .classical import ClassicalMLTest, prefix_test
from .compression import StateDictionary, UnitaryMachine
from .errors import QCantorError
from .linalg import ComplexMatrix
from .qtests import QMLTest, QuantumSigma1Set, StrongSolovayTest, _zero_projection, classical_to_quantum
from .states import (
    ClassicalSequence,
    CoherentState,
    bernoulli_measure,
    epr_chain,
    from_bits,
    from_measure,
    iid_state,
    matrix_sequence,
    tracial_state,
    uniform_measure,
)


class SpecError(QCantorError, ValueError):
    """A configuration object could not be interpreted."""


def parse_rational(x) -> mpq:
    """``"p/q"``, decimal strings and ints become exact rationals; floats are refused."""
    if isinstance(x, float):
        raise SpecError(f"write {x!r} as a string so it can be read exactly")
    if isinstance(x, str):
        try:
            f = Fraction(x.strip())
        except ValueError as exc:
            raise SpecError(f"not a rational: {x!r}") from exc
        return mpq(f.numerator, f.denominator)
    try:
        return linalg.rational(x)
    except QCantorError as exc:
        raise SpecError(str(exc)) from exc


def _norm(spec) -> dict:
    if isinstance(spec, str):
        return {"kind": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SpecError(f"spec must be a name or an object with 'kind': {spec!r}")
    params = spec.get("params")
    if params is None:
        return spec
    if not isinstance(params, dict):
        raise SpecError(f"'params' must be an object: {params!r}")
    # nested layout {"kind", "params": {...}} is read the same as the flat one
    return {**params, **{k: v for k, v in spec.items() if k != "params"}}


def parse_matrix(obj) -> ComplexMatrix:
    if isinstance(obj, dict):
        return linalg.matrix_from_json(obj)
    return ComplexMatrix.from_exact([[parse_rational(e) for e in row] for row in obj])


@dataclass
class ParsedState:
    state: CoherentState
    sequence: ClassicalSequence | None = None


def parse_state(spec, depth: int, seed: int = 0) -> ParsedState:
    """Build a state known to ``depth`` qubits."""
    s = _norm(spec)
    kind = s["kind"]
    if "max_depth" in s:
        depth = min(depth, int(s["max_depth"]))
    if kind == "tracial":
        return ParsedState(tracial_state(depth))
    if kind in ("bits", "zeros"):
        z = ClassicalSequence.periodic(s.get("pattern", "0"), depth)
        return ParsedState(from_bits(z), z)
    if kind == "measure":
        if "bernoulli" in s:
            mu = bernoulli_measure(parse_rational(s["bernoulli"]))
        else:
            mu = uniform_measure()
        return ParsedState(from_measure(mu, depth))
    if kind == "iid":
        if "sigma" in s:
            sigma = parse_matrix(s["sigma"])
        else:
            b = parse_rational(s.get("bias", "1/2"))
            sigma = linalg.diagonal([1 - b, b])
        return ParsedState(iid_state(sigma, depth, s.get("label", "iid")))
    if kind == "epr":
        return ParsedState(epr_chain(depth))
    if kind == "matrix_sequence":
        mats = [parse_matrix(m) for m in s["matrices"]]
        st = matrix_sequence(mats, s.get("label", "matrix_sequence"))
        return ParsedState(st)
    if kind == "random_sequence":
        rng = np.random.default_rng(int(s.get("seed", seed)))
        return ParsedState(fixtures.random_matrix_sequence(rng, depth))
    if kind == "corrupted":
        return ParsedState(fixtures.corrupted_sequence(depth, int(s.get("bad_level", depth))))
    if kind == "part2":
        return ParsedState(fixtures.part2_state(depth, s.get("weight", "99/100")))
    raise SpecError(f"unknown state kind {kind!r}")


def parse_test(spec, depth: int, levels: int | None = None):
    """A :class:`QMLTest` or :class:`StrongSolovayTest` known to ``depth``."""
    s = _norm(spec)
    kind = s["kind"]
    lv = s.get("levels")
    n_levels = int(lv) if isinstance(lv, (int, str)) else (depth + 1 if levels is None else levels)
    if kind == "prefix":
        return fixtures.prefix_qml_test(n_levels, depth)
    if kind == "rotated":
        return fixtures.rotated_basis_test(n_levels, depth)
    if kind == "epr":
        return fixtures.epr_test(n_levels, depth)
    if kind == "part1":
        return fixtures.part1_test(n_levels, depth)
    if kind == "classical":
        ct = ClassicalMLTest.from_json(s)
        if not ct.levels:
            raise SpecError("classical test has no levels")
        return classical_to_quantum(ct, depth, check_bounds=False)
    if kind == "classical_prefix":
        return classical_to_quantum(prefix_test(n_levels), depth)
    if kind == "quantum":
        return _explicit_qml(s, depth)
    if kind == "strong_solovay":
        items = [(int(it["n"]), parse_matrix(it["matrix"])) for it in s["items"]]
        if not items:
            raise SpecError("strong Solovay test has no items")
        return StrongSolovayTest(lambda r: items[r], len(items), parse_rational(s.get("mass_bound", 1)),
                                 s.get("label", "strong_solovay"))
    if kind == "part2":
        return fixtures.part2_test(int(s.get("levels", 3)))
    if kind == "part2_small":
        return fixtures.part2_small_test()
    raise SpecError(f"unknown test kind {kind!r}")


def _explicit_qml(s: dict, depth: int) -> QMLTest:
    """``{"kind": "quantum", "levels": [[{"from": i, "matrix": m}, ...], ...]}``."""
    parsed = []
    if not s.get("levels"):
        raise SpecError("quantum test has no levels")
    for lv in s["levels"]:
        stages = sorted(((int(st["from"]), parse_matrix(st["matrix"])) for st in lv), key=lambda x: x[0])
        parsed.append(stages)

    def level(r):
        stages = parsed[r]

        def proj(i):
            live = [m for k, m in stages if k <= i]
            return live[-1] if live else _zero_projection()

        return QuantumSigma1Set(proj, depth, f"explicit_{r}")

    return QMLTest(level, len(parsed), s.get("label", "explicit"))


def parse_machine(spec, depth: int) -> UnitaryMachine:
    """``"identity"``, ``"bit_reversal"`` or ``{"circuits": [{"n", "matrix"}], "default": "identity"}``."""
    if spec is None:
        return UnitaryMachine.identity(depth)
    if isinstance(spec, str):
        spec = {"kind": spec}
    if "circuits" in spec:
        mats = {int(c["n"]): parse_matrix(c["matrix"]) for c in spec["circuits"]}
        return UnitaryMachine.from_matrices(mats, depth, spec.get("default", "identity"))
    kind = spec.get("kind")
    if kind == "identity":
        return UnitaryMachine.identity(depth)
    if kind == "bit_reversal":
        return UnitaryMachine.bit_reversal(depth)
    raise SpecError(f"unknown machine spec {spec!r}")


def parse_dictionary(spec, basis_max_length: int = 8) -> StateDictionary:
    """A list of vectors appended after the basis strings."""
    if spec is None:
        return StateDictionary(basis_max_length)
    vectors = []
    for v in spec:
        vec = []
        for x in v:
            if isinstance(x, dict):
                vec.append(linalg.GaussianRational(parse_rational(x.get("re", 0)), parse_rational(x.get("im", 0))))
            else:
                vec.append(parse_rational(x))
        vectors.append(vec)
    return StateDictionary(basis_max_length, vectors)
