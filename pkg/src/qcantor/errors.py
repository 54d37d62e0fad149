"""Exception hierarchy for qcantor."""


class QCantorError(Exception):
    """Base class for all errors raised by this package."""


class BackendError(QCantorError, TypeError):
    """Mixing exact and float data, or asking for a float->exact conversion."""


class DimensionError(QCantorError, ValueError):
    """Operands live on incompatible numbers of qubits."""


class NotADensityMatrix(QCantorError, ValueError):
    pass


class NotAProjection(QCantorError, ValueError):
    pass


class NotUnitary(QCantorError, ValueError):
    pass


class DepthError(QCantorError, ValueError):
    """A query went beyond the declared max depth of a state, set or machine."""


class ProjectionAnnihilatesState(QCantorError, ValueError):
    pass


class MeasureError(QCantorError, ValueError):
    """A prefix-probability function is not a measure at some depth."""


class MonotonicityError(QCantorError, ValueError):
    pass


class MassBoundError(QCantorError, ValueError):
    """A declared tracial or uniform-measure bound does not hold."""


class PreconditionError(QCantorError, ValueError):
    pass


class StatisticUndefined(QCantorError, ValueError):
    pass
