"""Matrix algebra on the qubit spaces H_n = (C^2)^{(x)n}.

Two backends share one matrix type:

* ``"exact"`` -- Gaussian rationals, stored as a pair of numpy object arrays
  of :class:`gmpy2.mpq` (real and imaginary parts).
* ``"float"`` -- a ``complex128`` numpy array.

Index convention: a bit string ``a_0 ... a_{n-1}`` is the integer
``sum_j a_j 2**j``, so qubit 0 is the least significant bit and the most
recently appended qubit is the most significant one.  With this convention
``embed(A) = A (x) I_2`` is the block matrix ``[[A, 0], [0, A]]`` and the
partial trace over the last qubit is ``A[:N, :N] + A[N:, N:]``.

Spectral operations (trace distance, fidelity, matrix square roots and
logarithms) always run in floating point; exact input is converted.
Conversion float -> exact is refused.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg
from gmpy2 import mpq

from .errors import (
    BackendError,
    DimensionError,
    NotADensityMatrix,
    NotAProjection,
    ProjectionAnnihilatesState,
)

TOL_EIG = 1e-9
TOL_ENTRY = 1e-12
RANK_TOL = 1e-9

ZERO = mpq(0)
ONE = mpq(1)
MPQ = type(ZERO)

EXACT = "exact"
FLOAT = "float"


# ---------------------------------------------------------------------------
# scalars


def is_rational(x) -> bool:
    """True for exact (mpq) scalars, as returned by exact-backend operations."""
    return isinstance(x, MPQ)


def rational(x) -> mpq:
    """Convert an int, Fraction, mpq or ``"p/q"`` string to :class:`mpq`.

    Floats are rejected: there is no silent float -> exact conversion.
    """
    if isinstance(x, mpq):
        return x
    if isinstance(x, bool):
        raise BackendError("booleans are not rationals")
    if isinstance(x, (float, complex, np.floating, np.complexfloating)):
        raise BackendError(f"refusing to convert float {x!r} to an exact rational")
    if isinstance(x, str):
        return mpq(x.strip())
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, numbers.Integral):
        return mpq(int(x))
    if isinstance(x, numbers.Rational):
        return mpq(int(x.numerator), int(x.denominator))
    raise BackendError(f"cannot interpret {x!r} as an exact rational")


@dataclass(frozen=True)
class GaussianRational:
    """Exact complex scalar ``re + i*im`` with rational parts."""

    re: mpq
    im: mpq = ZERO

    @classmethod
    def of(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, tuple):
            return cls(rational(x[0]), rational(x[1]))
        return cls(rational(x))

    def __add__(self, other):
        o = GaussianRational.of(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-GaussianRational.of(other))

    def __rsub__(self, other):
        return GaussianRational.of(other) - self

    def __mul__(self, other):
        o = GaussianRational.of(other)
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.of(other)
        d = o.abs2()
        if d == 0:
            raise ZeroDivisionError("division by exact zero")
        return GaussianRational((self.re * o.re + self.im * o.im) / d,
                                (self.im * o.re - self.re * o.im) / d)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def abs2(self) -> mpq:
        return self.re * self.re + self.im * self.im

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


# ---------------------------------------------------------------------------
# bit strings <-> indices


def string_index(bits: str) -> int:
    """Index of the basis vector ``|a_0 ... a_{n-1}>`` (bit j has weight 2**j)."""
    return sum(1 << j for j, a in enumerate(bits) if a == "1")


def index_string(index: int, n: int) -> str:
    return "".join("1" if (index >> j) & 1 else "0" for j in range(n))


def _qubits_for_dim(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise DimensionError(f"matrix dimension {dim} is not a power of two")
    return n


# ---------------------------------------------------------------------------
# object-array kernels (exact backend)


def _ozeros(rows: int, cols: int | None = None) -> np.ndarray:
    return np.full((rows, rows if cols is None else cols), ZERO, dtype=object)


def _oeye(dim: int) -> np.ndarray:
    out = _ozeros(dim)
    for i in range(dim):
        out[i, i] = ONE
    return out


def _okron(b: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``np.kron(b, a)`` for object arrays, skipping zero entries of ``b``."""
    if b.size > a.size:
        # scale blocks of the smaller factor instead
        rb, cb = b.shape
        ra, ca = a.shape
        out = _ozeros(rb * ra, cb * ca)
        for i, j in zip(*np.nonzero(a)):
            out[i::ra, j::ca] = b * a[i, j]
        return out
    ra, ca = a.shape
    out = _ozeros(b.shape[0] * ra, b.shape[1] * ca)
    for i, j in zip(*np.nonzero(b)):
        out[i * ra:(i + 1) * ra, j * ca:(j + 1) * ca] = a * b[i, j]
    return out


def _omatmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two mpq object matrices, skipping zeros when that pays off."""
    n, inner = a.shape
    m = b.shape[1]
    nza = np.count_nonzero(a)
    nzb = np.count_nonzero(b)
    if nza == 0 or nzb == 0:
        return _ozeros(n, m)
    if nza * nzb < (n * inner * m * inner) // 8:
        out = _ozeros(n, m)
        rows_b = [np.flatnonzero(b[j]) for j in range(inner)]
        for i in range(n):
            acc: dict[int, mpq] = {}
            for j in np.flatnonzero(a[i]):
                aij = a[i, j]
                for c in rows_b[j]:
                    acc[c] = acc.get(c, ZERO) + aij * b[j, c]
            for c, v in acc.items():
                out[i, c] = v
        return out
    out = a.dot(b)
    if out.dtype != object:
        out = out.astype(object)
    return out


def _cmatmul(ar, ai, br, bi):
    """Complex product on (re, im) pairs; ``None`` stands for a zero part."""
    re = _omatmul(ar, br)
    if ai is not None and bi is not None:
        re = re - _omatmul(ai, bi)
    im = None
    if bi is not None:
        im = _omatmul(ar, bi)
    if ai is not None:
        t = _omatmul(ai, br)
        im = t if im is None else im + t
    return re, im


def _all_zero(a) -> bool:
    return a is None or np.count_nonzero(a) == 0


def _to_object(a) -> np.ndarray:
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    flat_in = arr.ravel()
    flat_out = out.ravel()
    for i, x in enumerate(flat_in):
        flat_out[i] = rational(x)
    return out


# ---------------------------------------------------------------------------
# the matrix type


class ComplexMatrix:
    """Square ``2**n x 2**n`` complex matrix over one backend.

    Instances are treated as immutable; every operation returns a new
    matrix.  Build them with :meth:`from_float`, :meth:`from_exact` or the
    module-level constructors (:func:`identity`, :func:`basis_projector`,
    :func:`diagonal`, ...).
    """

    __slots__ = ("_re", "_im", "_data", "backend", "n_qubits")

    def __init__(self, *, data=None, re=None, im=None):
        if data is not None:
            data = np.asarray(data, dtype=np.complex128)
            if data.ndim != 2 or data.shape[0] != data.shape[1]:
                raise DimensionError(f"expected a square matrix, got shape {data.shape}")
            self._data = data
            self._re = self._im = None
            self.backend = FLOAT
            self.n_qubits = _qubits_for_dim(data.shape[0])
        else:
            if re is None or re.ndim != 2 or re.shape[0] != re.shape[1]:
                raise DimensionError("expected a square real part")
            if im is not None and im.shape != re.shape:
                raise DimensionError("real and imaginary parts differ in shape")
            self._re = re
            self._im = None if _all_zero(im) else im
            self._data = None
            self.backend = EXACT
            self.n_qubits = _qubits_for_dim(re.shape[0])

    # construction ---------------------------------------------------------

    @classmethod
    def from_float(cls, array) -> "ComplexMatrix":
        return cls(data=np.array(array, dtype=np.complex128))

    @classmethod
    def from_exact(cls, re, im=None) -> "ComplexMatrix":
        """Exact matrix from nested sequences of rationals (ints, Fractions,
        mpq or ``"p/q"`` strings).  Entries may also be
        :class:`GaussianRational` when ``im`` is omitted."""
        arr = np.asarray(re, dtype=object)
        if im is None and any(isinstance(x, GaussianRational) for x in arr.ravel()):
            g = [[GaussianRational.of(x) for x in row] for row in arr]
            r = _to_object([[x.re for x in row] for row in g])
            i = _to_object([[x.im for x in row] for row in g])
            return cls(re=r, im=i)
        return cls(re=_to_object(arr), im=None if im is None else _to_object(im))

    def _like(self, *, data=None, re=None, im=None) -> "ComplexMatrix":
        if self.backend == FLOAT:
            return ComplexMatrix(data=data)
        return ComplexMatrix(re=re, im=im)

    # basic properties ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim, self.dim)

    @property
    def is_exact(self) -> bool:
        return self.backend == EXACT

    def exact_parts(self) -> tuple[np.ndarray, np.ndarray]:
        """(re, im) object arrays; raises for the float backend."""
        if not self.is_exact:
            raise BackendError("float matrix has no exact parts")
        im = self._im if self._im is not None else _ozeros(self.dim)
        return self._re, im

    def to_numpy(self) -> np.ndarray:
        if self.backend == FLOAT:
            return self._data.copy()
        out = self._re.astype(np.float64).astype(np.complex128)
        if self._im is not None:
            out += 1j * self._im.astype(np.float64)
        return out

    def to_float(self) -> "ComplexMatrix":
        if self.backend == FLOAT:
            return self
        return ComplexMatrix(data=self.to_numpy())

    def entry(self, i: int, j: int):
        if self.backend == FLOAT:
            return complex(self._data[i, j])
        return GaussianRational(self._re[i, j], ZERO if self._im is None else self._im[i, j])

    def diagonal_real(self) -> np.ndarray:
        """Real parts of the diagonal: mpq objects (exact) or float64."""
        if self.backend == FLOAT:
            return np.real(np.diag(self._data)).copy()
        return np.array([self._re[i, i] for i in range(self.dim)], dtype=object)

    # algebra -------------------------------------------------------------------

    def _check_same(self, other: "ComplexMatrix"):
        if not isinstance(other, ComplexMatrix):
            raise TypeError(f"expected ComplexMatrix, got {type(other).__name__}")
        if other.backend != self.backend:
            raise BackendError(f"backend mismatch: {self.backend} vs {other.backend}")
        if other.n_qubits != self.n_qubits:
            raise DimensionError(f"qubit mismatch: {self.n_qubits} vs {other.n_qubits}")

    def dagger(self) -> "ComplexMatrix":
        if self.backend == FLOAT:
            return ComplexMatrix(data=self._data.conj().T)
        im = None if self._im is None else -self._im.T
        return ComplexMatrix(re=self._re.T.copy(), im=im)

    def __add__(self, other):
        self._check_same(other)
        if self.backend == FLOAT:
            return ComplexMatrix(data=self._data + other._data)
        return ComplexMatrix(re=self._re + other._re, im=_add_opt(self._im, other._im))

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        if self.backend == FLOAT:
            return ComplexMatrix(data=-self._data)
        return ComplexMatrix(re=-self._re, im=None if self._im is None else -self._im)

    def __matmul__(self, other):
        self._check_same(other)
        if self.backend == FLOAT:
            return ComplexMatrix(data=self._data @ other._data)
        re, im = _cmatmul(self._re, self._im, other._re, other._im)
        return ComplexMatrix(re=re, im=im)

    def scale(self, c) -> "ComplexMatrix":
        """Multiply by a scalar.  Exact matrices accept only exact scalars."""
        if self.backend == FLOAT:
            return ComplexMatrix(data=self._data * complex(c))
        g = GaussianRational.of(c)
        re = self._re * g.re
        im = self._re * g.im if g.im != 0 else None
        if self._im is not None:
            re = re - self._im * g.im
            im = _add_opt(im, self._im * g.re)
        return ComplexMatrix(re=re, im=im)

    def __mul__(self, c):
        if isinstance(c, ComplexMatrix):
            raise TypeError("use @ for matrix products")
        return self.scale(c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        if self.backend == FLOAT:
            return self.scale(1 / complex(c))
        return self.scale(GaussianRational(ONE) / GaussianRational.of(c))

    def trace(self):
        """Trace as ``complex`` (float) or :class:`GaussianRational` (exact)."""
        if self.backend == FLOAT:
            return complex(np.trace(self._data))
        im = ZERO if self._im is None else sum(self._im[i, i] for i in range(self.dim))
        return GaussianRational(sum((self._re[i, i] for i in range(self.dim)), ZERO), im)

    # comparisons ------------------------------------------------------------------

    def max_abs_diff(self, other: "ComplexMatrix") -> float:
        if other.n_qubits != self.n_qubits:
            raise DimensionError(f"qubit mismatch: {self.n_qubits} vs {other.n_qubits}")
        if self.is_exact and other.is_exact:
            dr = self._re - other._re
            di = _sub_opt(self._im, other._im)
            if np.count_nonzero(dr) == 0 and _all_zero(di):
                return 0.0
            mag = dr * dr if di is None else dr * dr + di * di
            return math.sqrt(float(max(mag.ravel())))
        return float(np.max(np.abs(self.to_numpy() - other.to_numpy())))

    def equals(self, other: "ComplexMatrix", tol: float = TOL_ENTRY) -> bool:
        """Exact equality for two exact matrices, else entrywise within ``tol``."""
        if other.n_qubits != self.n_qubits:
            return False
        if self.is_exact and other.is_exact:
            return self.max_abs_diff(other) == 0.0
        return self.max_abs_diff(other) <= tol

    def is_hermitian(self, tol: float = TOL_EIG) -> bool:
        return self.equals(self.dagger(), tol)

    def is_diagonal(self) -> bool:
        if self.backend == FLOAT:
            off = self._data - np.diag(np.diag(self._data))
            return not np.any(off)
        nz = np.count_nonzero(self._re) - sum(1 for i in range(self.dim) if self._re[i, i] != 0)
        if nz:
            return False
        if self._im is None:
            return True
        return np.count_nonzero(self._im) == sum(1 for i in range(self.dim) if self._im[i, i] != 0)

    def is_zero(self) -> bool:
        if self.backend == FLOAT:
            return not np.any(self._data)
        return np.count_nonzero(self._re) == 0 and self._im is None

    def __repr__(self):
        return f"ComplexMatrix(n_qubits={self.n_qubits}, backend={self.backend!r})"

    def __str__(self):
        if self.backend == FLOAT:
            return str(self._data)
        rows = []
        for i in range(self.dim):
            rows.append("[" + ", ".join(str(self.entry(i, j)) for j in range(self.dim)) + "]")
        return "\n".join(rows)


def _add_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _sub_opt(a, b):
    if b is None:
        return a
    if a is None:
        return -b
    return a - b


def _common_backend(*ms: ComplexMatrix) -> list[ComplexMatrix]:
    """Bring matrices to one backend (exact only if all are exact)."""
    if all(m.is_exact for m in ms):
        return list(ms)
    return [m.to_float() for m in ms]


# ---------------------------------------------------------------------------
# validated subtypes


def _share_storage(target: ComplexMatrix, source: ComplexMatrix):
    for slot in ComplexMatrix.__slots__:
        object.__setattr__(target, slot, getattr(source, slot))


class DensityMatrix(ComplexMatrix):
    """Positive, unit-trace matrix.  Validation runs unless ``validate=False``."""

    __slots__ = ()

    def __init__(self, matrix: ComplexMatrix, *, validate: bool = True, tol: float = TOL_EIG):
        _share_storage(self, matrix)
        if validate:
            check_density(matrix, tol)


class SpecialProjection(ComplexMatrix):
    """Orthogonal projection with Gaussian-rational (or float) entries."""

    __slots__ = ()

    def __init__(self, matrix: ComplexMatrix, *, validate: bool = True, tol: float = TOL_EIG):
        _share_storage(self, matrix)
        if validate:
            check_projection(matrix, tol)

    @property
    def rank(self) -> int:
        return int(round(float(self.trace().real if not self.is_exact else self.trace().re)))


def check_density(m: ComplexMatrix, tol: float = TOL_EIG) -> None:
    if not m.is_hermitian(tol):
        raise NotADensityMatrix("matrix is not Hermitian")
    tr = m.trace()
    if m.is_exact:
        if tr.re != 1 or tr.im != 0:
            raise NotADensityMatrix(f"trace is {tr}, not 1")
    elif abs(tr - 1) > tol:
        raise NotADensityMatrix(f"trace is {tr}, not 1")
    if m.is_diagonal():
        smallest = float(min(m.diagonal_real()))
    else:
        smallest = float(eigvalsh(m)[0])
    if smallest < -tol:
        raise NotADensityMatrix(f"negative eigenvalue {smallest:.3e}")


def check_projection(m: ComplexMatrix, tol: float = TOL_EIG) -> None:
    if not m.is_hermitian(tol):
        raise NotAProjection("matrix is not Hermitian")
    if m.is_diagonal():
        d = m.diagonal_real()
        if m.is_exact:
            ok = all(x == 0 or x == 1 for x in d)
        else:
            ok = bool(np.all(np.minimum(np.abs(d), np.abs(d - 1)) <= tol))
        if not ok:
            raise NotAProjection("diagonal entries are not all 0 or 1")
        return
    sq = m @ m
    if m.is_exact:
        if not sq.equals(m):
            raise NotAProjection("p @ p != p")
    else:
        err = sq.max_abs_diff(m)
        if err > tol:
            raise NotAProjection(f"||p^2 - p|| = {err:.3e}")
        tr = m.trace().real
        if abs(tr - round(tr)) > tol:
            raise NotAProjection(f"trace {tr} is not an integer")


def is_density(m: ComplexMatrix, tol: float = TOL_EIG) -> bool:
    try:
        check_density(m, tol)
    except (NotADensityMatrix, DimensionError):
        return False
    return True


def is_projection(m: ComplexMatrix, tol: float = TOL_EIG) -> bool:
    try:
        check_projection(m, tol)
    except NotAProjection:
        return False
    return True


# ---------------------------------------------------------------------------
# constructors


def identity(n: int, backend: str = EXACT) -> ComplexMatrix:
    if backend == FLOAT:
        return ComplexMatrix(data=np.eye(1 << n, dtype=np.complex128))
    return ComplexMatrix(re=_oeye(1 << n))


def zeros(n: int, backend: str = EXACT) -> ComplexMatrix:
    if backend == FLOAT:
        return ComplexMatrix(data=np.zeros((1 << n, 1 << n), dtype=np.complex128))
    return ComplexMatrix(re=_ozeros(1 << n))


def diagonal(values, backend: str = EXACT) -> ComplexMatrix:
    values = list(values)
    dim = len(values)
    if backend == FLOAT:
        return ComplexMatrix(data=np.diag(np.asarray(values, dtype=np.complex128)))
    re = _ozeros(dim)
    for i, v in enumerate(values):
        re[i, i] = rational(v)
    return ComplexMatrix(re=re)


def basis_projector(bits: str) -> SpecialProjection:
    """``|sigma><sigma|`` for a bit string ``sigma`` (exact)."""
    dim = 1 << len(bits)
    re = _ozeros(dim)
    i = string_index(bits)
    re[i, i] = ONE
    return SpecialProjection(ComplexMatrix(re=re), validate=False)


def diagonal_projection(n: int, indices, backend: str = EXACT) -> SpecialProjection:
    """Diagonal projection on n qubits with ones at the given indices."""
    dim = 1 << n
    if backend == FLOAT:
        d = np.zeros(dim)
        d[list(indices)] = 1.0
        return SpecialProjection(ComplexMatrix(data=np.diag(d).astype(np.complex128)), validate=False)
    re = _ozeros(dim)
    for i in indices:
        re[i, i] = ONE
    return SpecialProjection(ComplexMatrix(re=re), validate=False)


def ket_projector(vector) -> ComplexMatrix:
    """``|v><v| / <v|v>`` for a vector.

    Exact when every component is a rational or a :class:`GaussianRational`
    (the vector need not be normalised); float otherwise.
    """
    vec = list(vector)
    dim = len(vec)
    _qubits_for_dim(dim)
    try:
        g = [GaussianRational.of(x) for x in vec]
    except BackendError:
        v = np.asarray(vec, dtype=np.complex128)
        v = v / np.linalg.norm(v)
        return ComplexMatrix(data=np.outer(v, v.conj()))
    norm2 = sum((x.abs2() for x in g), ZERO)
    if norm2 == 0:
        raise ValueError("zero vector")
    re = _ozeros(dim)
    im = _ozeros(dim)
    for a in range(dim):
        for b in range(dim):
            e = g[a] * g[b].conjugate()
            re[a, b] = e.re / norm2
            im[a, b] = e.im / norm2
    return ComplexMatrix(re=re, im=im)


# ---------------------------------------------------------------------------
# structural operations


def tensor(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """``A (x) B``: A on the first (low) qubits, B on the appended ones.

    Entry ``((sigma rho), (tau pi))`` equals ``A[sigma, tau] * B[rho, pi]``.
    """
    if a.backend != b.backend:
        raise BackendError(f"backend mismatch: {a.backend} vs {b.backend}")
    if a.backend == FLOAT:
        return ComplexMatrix(data=np.kron(b._data, a._data))
    re = _okron(b._re, a._re)
    if a._im is not None and b._im is not None:
        re = re - _okron(b._im, a._im)
    im = None
    if a._im is not None:
        im = _okron(b._re, a._im)
    if b._im is not None:
        t = _okron(b._im, a._re)
        im = t if im is None else im + t
    return ComplexMatrix(re=re, im=im)


def lift(a: ComplexMatrix, n: int) -> ComplexMatrix:
    """Embed ``a`` into ``M_n`` by repeated ``A -> A (x) I_2``."""
    k = n - a.n_qubits
    if k < 0:
        raise DimensionError(f"cannot lift {a.n_qubits} qubits down to {n}")
    if k == 0:
        return a
    if a.backend == FLOAT:
        return ComplexMatrix(data=np.kron(np.eye(1 << k), a._data))
    # block diagonal copy; cheaper than kron with an object identity
    d = a.dim
    re = _ozeros(d << k)
    im = None if a._im is None else _ozeros(d << k)
    for blk in range(1 << k):
        s = slice(blk * d, (blk + 1) * d)
        re[s, s] = a._re
        if im is not None:
            im[s, s] = a._im
    return ComplexMatrix(re=re, im=im)


def embed(a: ComplexMatrix) -> ComplexMatrix:
    """``A -> A (x) I_2 = [[A, 0], [0, A]]``."""
    return lift(a, a.n_qubits + 1)


def partial_trace(a: ComplexMatrix) -> ComplexMatrix:
    """Trace out the last qubit: ``b[s, t] = a[s0, t0] + a[s1, t1]``."""
    if a.n_qubits == 0:
        raise DimensionError("cannot take the partial trace of a 0-qubit matrix")
    h = a.dim // 2
    if a.backend == FLOAT:
        d = a._data
        return ComplexMatrix(data=d[:h, :h] + d[h:, h:])
    re = a._re[:h, :h] + a._re[h:, h:]
    im = None if a._im is None else a._im[:h, :h] + a._im[h:, h:]
    return ComplexMatrix(re=re, im=im)


def restrict(a: ComplexMatrix, n: int) -> ComplexMatrix:
    """Partial trace down to the first ``n`` qubits."""
    if n > a.n_qubits:
        raise DimensionError(f"cannot restrict {a.n_qubits} qubits to {n}")
    while a.n_qubits > n:
        a = partial_trace(a)
    return a


def trace_product(a: ComplexMatrix, b: ComplexMatrix):
    """Real part of ``Tr(A B)`` in O(dim^2); mpq when both are exact."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"qubit mismatch: {a.n_qubits} vs {b.n_qubits}")
    if a.is_exact and b.is_exact:
        total = (a._re * b._re.T).sum()
        if a._im is not None and b._im is not None:
            total = total - (a._im * b._im.T).sum()
        return mpq(total)
    x, y = a.to_numpy(), b.to_numpy()
    return float(np.real(np.sum(x * y.T)))


def tracial_value(a: ComplexMatrix):
    """``tau_n(A) = 2**-n Tr(A)`` (real part); mpq for exact input."""
    tr = a.trace()
    if a.is_exact:
        return tr.re / (1 << a.n_qubits)
    return tr.real / a.dim


# ---------------------------------------------------------------------------
# projections


def _float_range_basis(cols: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column space (rank-revealing pivoted QR)."""
    if cols.shape[1] == 0:
        return np.zeros((cols.shape[0], 0), dtype=np.complex128)
    q, r, _ = scipy.linalg.qr(cols, mode="economic", pivoting=True)
    rank = int(np.sum(np.abs(np.diag(r)) > tol))
    return q[:, :rank]


def _exact_orthogonal_basis(columns):
    """Exact Gram-Schmidt without normalisation.

    ``columns`` is an iterable of (re, im) mpq vectors.  Returns a list of
    mutually orthogonal nonzero vectors (re, im, norm2) spanning the same space.
    """
    basis = []
    dim = None
    for br, bi in columns:
        dim = len(br)
        if len(basis) == dim:
            break
        if np.count_nonzero(br) == 0 and np.count_nonzero(bi) == 0:
            continue
        vr, vi = br.copy(), bi.copy()
        for ur, ui, nn in basis:
            cr = ((ur * vr).sum() + (ui * vi).sum()) / nn
            ci = ((ur * vi).sum() - (ui * vr).sum()) / nn
            if cr != 0 or ci != 0:
                vr = vr - (ur * cr - ui * ci)
                vi = vi - (ui * cr + ur * ci)
        nn = mpq((vr * vr).sum() + (vi * vi).sum())
        if nn != 0:
            basis.append((vr, vi, nn))
    return basis


def _exact_projector_from_basis(basis, dim: int) -> ComplexMatrix:
    re = _ozeros(dim)
    im = _ozeros(dim)
    for ur, ui, nn in basis:
        re = re + (np.outer(ur, ur) + np.outer(ui, ui)) / nn
        im = im + (np.outer(ui, ur) - np.outer(ur, ui)) / nn
    return ComplexMatrix(re=re, im=im)


def span_projector(matrices_or_vectors, n_qubits: int | None = None) -> SpecialProjection:
    """Orthogonal projection onto the span of the columns of the given matrices.

    Exact inputs give an exact projection (Gram-Schmidt over Q(i) needs no
    square roots once the projector is formed as ``sum u u^H / <u,u>``).
    """
    items = list(matrices_or_vectors)
    if not items:
        if n_qubits is None:
            raise ValueError("need n_qubits for an empty span")
        return SpecialProjection(zeros(n_qubits), validate=False)
    items = _common_backend(*items)
    n = items[0].n_qubits
    for m in items:
        if m.n_qubits != n:
            raise DimensionError("all operands must act on the same number of qubits")
    if items[0].is_exact:
        cols = []
        for m in items:
            r, i = m.exact_parts()
            cols.extend((r[:, j], i[:, j]) for j in range(m.dim))
        basis = _exact_orthogonal_basis(cols)
        return SpecialProjection(_exact_projector_from_basis(basis, 1 << n), validate=False)
    q = _float_range_basis(np.hstack([m.to_numpy() for m in items]))
    return SpecialProjection(ComplexMatrix(data=q @ q.conj().T), validate=False)


def projection_join(p: ComplexMatrix, q: ComplexMatrix) -> SpecialProjection:
    """Projection onto ``rg p + rg q``."""
    if p.n_qubits != q.n_qubits:
        raise DimensionError(f"qubit mismatch: {p.n_qubits} vs {q.n_qubits}")
    p, q = _common_backend(p, q)
    if p.is_diagonal() and q.is_diagonal():
        dp, dq = p.diagonal_real(), q.diagonal_real()
        if p.is_exact:
            return diagonal_projection(p.n_qubits, [i for i in range(p.dim) if dp[i] == 1 or dq[i] == 1])
        hit = np.flatnonzero(np.maximum(dp, dq) > 0.5)
        return diagonal_projection(p.n_qubits, hit, backend=FLOAT)
    if p.is_zero():
        return SpecialProjection(q, validate=False)
    if q.is_zero():
        return SpecialProjection(p, validate=False)
    return span_projector([p, q])


def projection_leq(p: ComplexMatrix, q: ComplexMatrix, tol: float = TOL_EIG) -> bool:
    """Range containment ``rg p <= rg q`` for projections, after lifting.

    Exact: ``Tr(q p) == Tr(p)``, which for projections is equivalent to
    ``||(1 - q) p||_HS = 0``.  Float: ``max |q p - p| <= tol``.
    """
    n = max(p.n_qubits, q.n_qubits)
    p, q = _common_backend(lift(p, n), lift(q, n))
    if p.is_exact:
        return trace_product(q, p) == p.trace().re
    return (q @ p).max_abs_diff(p) <= tol


# ---------------------------------------------------------------------------
# spectral operations (float)


def _hermitian_array(m: ComplexMatrix) -> np.ndarray:
    a = m.to_numpy()
    return (a + a.conj().T) / 2


def eigvalsh(m: ComplexMatrix) -> np.ndarray:
    return np.linalg.eigvalsh(_hermitian_array(m))


def eigh(m: ComplexMatrix) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(_hermitian_array(m))


def _clip_roundoff(w: np.ndarray) -> np.ndarray:
    # eigenvalues at round-off level would turn into ~1e-8 after a square root
    cut = 64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    return np.where(w > cut, w, 0.0)


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    w = np.sqrt(_clip_roundoff(w))
    return (v * w) @ v.conj().T


def trace_distance(a: ComplexMatrix, b: ComplexMatrix, mode: str = "standard") -> float:
    """``D(A, B)``.

    ``mode="standard"``: half the sum of absolute eigenvalues of ``A - B``.
    ``mode="hs"``: ``sqrt(Tr((A-B)(A-B)^dagger)) / 2`` (Hilbert-Schmidt).
    """
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"qubit mismatch: {a.n_qubits} vs {b.n_qubits}")
    delta = a.to_numpy() - b.to_numpy()
    if mode == "standard":
        w = np.linalg.eigvalsh((delta + delta.conj().T) / 2)
        return float(0.5 * np.sum(np.abs(w)))
    if mode == "hs":
        return float(0.5 * np.linalg.norm(delta, "fro"))
    raise ValueError(f"unknown trace distance mode {mode!r}")


def fidelity(a: ComplexMatrix, b: ComplexMatrix) -> float:
    """``F(A, B) = Tr sqrt(sqrt(A) B sqrt(A))`` (not squared), clipped to [0, 1]."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"qubit mismatch: {a.n_qubits} vs {b.n_qubits}")
    s = _psd_sqrt(a.to_numpy())
    inner = s @ b.to_numpy() @ s
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    return float(min(1.0, max(0.0, np.sum(np.sqrt(_clip_roundoff(w))))))


def state_project(s: ComplexMatrix, p: ComplexMatrix, tol: float = TOL_EIG) -> DensityMatrix:
    """``p s p / Tr(s p)``; exact when both inputs are exact."""
    if s.n_qubits != p.n_qubits:
        raise DimensionError(f"qubit mismatch: {s.n_qubits} vs {p.n_qubits}")
    s, p = _common_backend(s, p)
    alpha = trace_product(s, p)
    if alpha <= tol:
        raise ProjectionAnnihilatesState(f"projection annihilates state (Tr(s p) = {float(alpha):.3e})")
    return DensityMatrix((p @ s @ p) / alpha, validate=False)


def operator_norm(m: ComplexMatrix) -> float:
    return float(np.linalg.norm(m.to_numpy(), 2))


# ---------------------------------------------------------------------------
# JSON


def _rational_str(x: mpq) -> str:
    return f"{x.numerator}/{x.denominator}"


def matrix_to_json(m: ComplexMatrix) -> dict:
    """``{"n_qubits", "backend", "entries"}`` with rows in index order."""
    rows = []
    if m.is_exact:
        re, im = m.exact_parts()
        for i in range(m.dim):
            rows.append([{"re": _rational_str(re[i, j]), "im": _rational_str(im[i, j])}
                         for j in range(m.dim)])
    else:
        a = m.to_numpy()
        for i in range(m.dim):
            rows.append([{"re": float(a[i, j].real), "im": float(a[i, j].imag)} for j in range(m.dim)])
    return {"n_qubits": m.n_qubits, "backend": m.backend, "entries": rows}


def matrix_from_json(obj: dict) -> ComplexMatrix:
    backend = obj.get("backend", EXACT)
    entries = obj["entries"]

    def part(e, key):
        if isinstance(e, dict):
            return e.get(key, 0)
        return e if key == "re" else 0

    if backend == EXACT:
        m = ComplexMatrix.from_exact([[part(e, "re") for e in row] for row in entries],
                                     [[part(e, "im") for e in row] for row in entries])
    elif backend == FLOAT:
        m = ComplexMatrix.from_float([[complex(float(part(e, "re")), float(part(e, "im"))) for e in row]
                                      for row in entries])
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if "n_qubits" in obj and obj["n_qubits"] != m.n_qubits:
        raise DimensionError(f"declared n_qubits={obj['n_qubits']} but entries give {m.n_qubits}")
    return m
