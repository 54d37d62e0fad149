"""Algorithmic randomness for states on infinite qubit sequences, at finite depth."""

from .errors import *  # noqa: F401,F403
from .linalg import (  # noqa: F401
    EXACT,
    FLOAT,
    RANK_TOL,
    TOL_EIG,
    TOL_ENTRY,
    ComplexMatrix,
    DensityMatrix,
    GaussianRational,
    SpecialProjection,
    basis_projector,
    diagonal,
    embed,
    fidelity,
    identity,
    ket_projector,
    lift,
    partial_trace,
    projection_join,
    projection_leq,
    rational,
    state_project,
    tensor,
    trace_distance,
    tracial_value,
)
from .states import (  # noqa: F401
    ClassicalSequence,
    CoherentState,
    MeasureState,
    bernoulli_measure,
    check_coherence,
    epr_chain,
    evaluate,
    from_bits,
    from_measure,
    iid_state,
    matrix_sequence,
    tracial_state,
)
from .qtests import (  # noqa: F401
    QMLTest,
    QuantumSigma1Set,
    SolovayTest,
    StrongSolovayTest,
    classical_to_quantum,
    evaluate_test,
    lln_statistic,
    universal_combine,
    universal_test,
    verdict,
)
from .classical import ClassicalMLTest, clopen_measure, prefix_test  # noqa: F401
from .bridge import check_lifting, derive_classical_test, select_strings  # noqa: F401
from .compression import (  # noqa: F401
    CompressionRecord,
    StateDictionary,
    UnitaryMachine,
    build_part1_test,
    compress_via_test,
    qc_complexity,
    run_machine,
    solovay_to_machine,
)
from .entropy import cross_entropy_statistic, entropy_rate, von_neumann_entropy  # noqa: F401

__version__ = "0.1.0"
