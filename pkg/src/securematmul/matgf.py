"""Dense matrices over F_q, random generators and the matrix text format."""

from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from . import _kernels as K
from .field import FieldElement, FieldError, PrimeModulus, as_modulus, inv_mod


class MatrixFormatError(ValueError):
    """Malformed matrix text; ``line`` is the 1-based offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class FqMatrix:
    """Immutable dense matrix over F_q backed by a read-only int64 array."""

    __slots__ = ("_data", "modulus")

    def __init__(self, data, modulus: Union[int, PrimeModulus], *, _trusted: bool = False):
        modulus = as_modulus(modulus)
        if _trusted:
            arr = data
        else:
            arr = np.array(data, dtype=object if _needs_object(data) else np.int64)
            if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
                raise ValueError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
            arr = np.asarray(arr % modulus.q, dtype=np.int64)
        arr.setflags(write=False)
        self._data = arr
        self.modulus = modulus

    @classmethod
    def _wrap(cls, arr: np.ndarray, modulus: PrimeModulus) -> "FqMatrix":
        return cls(arr, modulus, _trusted=True)

    @classmethod
    def zeros(cls, rows: int, cols: int, q) -> "FqMatrix":
        return cls._wrap(np.zeros((rows, cols), dtype=np.int64), as_modulus(q))

    @classmethod
    def identity(cls, n: int, q) -> "FqMatrix":
        return cls._wrap(np.eye(n, dtype=np.int64), as_modulus(q))

    @property
    def q(self) -> int:
        return self.modulus.q

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def array(self) -> np.ndarray:
        """Read-only int64 view of the entries."""
        return self._data

    def entries(self) -> list[int]:
        return [int(v) for v in self._data.ravel()]

    def to_rows(self) -> list[list[int]]:
        return self._data.tolist()

    def __getitem__(self, idx) -> FieldElement:
        return FieldElement(int(self._data[idx]), self.modulus)

    def is_zero(self) -> bool:
        return not self._data.any()

    def _check(self, other: "FqMatrix", same_shape: bool = True):
        if not isinstance(other, FqMatrix):
            raise TypeError(f"expected FqMatrix, got {type(other).__name__}")
        if other.modulus != self.modulus:
            raise FieldError(f"modulus mismatch: {self.q} vs {other.q}")
        if same_shape and other.shape != self.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "FqMatrix") -> "FqMatrix":
        self._check(other)
        return FqMatrix._wrap(K.add_mod(self._data, other._data, self.q), self.modulus)

    def __sub__(self, other: "FqMatrix") -> "FqMatrix":
        self._check(other)
        return FqMatrix._wrap(K.sub_mod(self._data, other._data, self.q), self.modulus)

    def __neg__(self) -> "FqMatrix":
        return FqMatrix._wrap(K.neg_mod(self._data, self.q), self.modulus)

    def scale(self, c) -> "FqMatrix":
        if isinstance(c, FieldElement) and c.modulus != self.modulus:
            raise FieldError(f"modulus mismatch: {self.q} vs {c.modulus.q}")
        return FqMatrix._wrap(K.scalar_mul_mod(self._data, int(c), self.q), self.modulus)

    def __mul__(self, c) -> "FqMatrix":
        if isinstance(c, (int, np.integer, FieldElement)):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other: "FqMatrix") -> "FqMatrix":
        return matmul(self, other)

    def __eq__(self, other):
        if not isinstance(other, FqMatrix):
            return NotImplemented
        return (self.modulus == other.modulus and self.shape == other.shape
                and np.array_equal(self._data, other._data))

    def __hash__(self):
        return hash((self.q, self.shape, self._data.tobytes()))

    def __repr__(self):
        return f"FqMatrix({self.to_rows()}, q={self.q})"

    def transpose(self) -> "FqMatrix":
        return FqMatrix._wrap(np.ascontiguousarray(self._data.T), self.modulus)

    T = property(transpose)


def _needs_object(data) -> bool:
    # Python ints beyond int64 (or negative big values) must be reduced before casting.
    if isinstance(data, np.ndarray):
        return data.dtype == object
    try:
        return any(abs(int(v)) >= 1 << 62 for row in data for v in row)
    except TypeError:
        return False


def matmul(x: FqMatrix, y: FqMatrix) -> FqMatrix:
    x._check(y, same_shape=False)
    if x.cols != y.rows:
        raise ValueError(f"dimension mismatch: {x.shape} @ {y.shape}")
    return FqMatrix._wrap(K.matmul_mod(x._data, y._data, x.q), x.modulus)


def as_vector(v: Iterable, q: int) -> np.ndarray:
    arr = np.array([int(e) for e in v], dtype=object)
    return np.asarray(arr % q, dtype=np.int64)


def matvec(x: FqMatrix, v: Union[np.ndarray, Sequence]) -> np.ndarray:
    """Product of ``x`` with a vector; returns an int64 array reduced mod q."""
    vec = v if isinstance(v, np.ndarray) and v.dtype == np.int64 else as_vector(v, x.q)
    if vec.ndim != 1 or vec.shape[0] != x.cols:
        raise ValueError(f"dimension mismatch: {x.shape} @ vector of length {vec.shape}")
    return K.matmul_mod(x._data, vec.reshape(-1, 1), x.q).ravel()


def sum_matrices(mats: Sequence[FqMatrix]) -> FqMatrix:
    if not mats:
        raise ValueError("cannot sum an empty list of matrices")
    first = mats[0]
    acc = first._data.copy()
    for m in mats[1:]:
        first._check(m)
        acc = K.add_mod(acc, m._data, first.q)
    return FqMatrix._wrap(acc, first.modulus)


def linear_combination(coeffs: Sequence[int], mats: Sequence[FqMatrix]) -> FqMatrix:
    """``sum_i coeffs[i] * mats[i]`` over F_q."""
    if len(coeffs) != len(mats) or not mats:
        raise ValueError("need matching, non-empty coefficient and matrix lists")
    first = mats[0]
    for m in mats[1:]:
        first._check(m)
    stack = np.stack([m._data for m in mats])
    return FqMatrix._wrap(K.combine_mod(list(coeffs), stack, first.q), first.modulus)


# -- random generation ----------------------------------------------------------

def random_matrix(rng: np.random.Generator, rows: int, cols: int, q) -> FqMatrix:
    modulus = as_modulus(q)
    if rows <= 0 or cols <= 0:
        raise ValueError("rows and cols must be positive")
    return FqMatrix._wrap(rng.integers(0, modulus.q, size=(rows, cols), dtype=np.int64), modulus)


def random_nonzero_matrix(rng: np.random.Generator, rows: int, cols: int, q) -> FqMatrix:
    while True:
        m = random_matrix(rng, rows, cols, q)
        if not m.is_zero():
            return m


def random_nonzero_vector(rng: np.random.Generator, n: int, q: int) -> np.ndarray:
    while True:
        v = rng.integers(0, q, size=n, dtype=np.int64)
        if v.any():
            return v


def random_rank1_matrix(rng: np.random.Generator, rows: int, cols: int, q) -> FqMatrix:
    """``u v^T`` with independent uniform nonzero vectors u and v."""
    modulus = as_modulus(q)
    u = random_nonzero_vector(rng, rows, modulus.q)
    v = random_nonzero_vector(rng, cols, modulus.q)
    return outer(u, v, modulus)


def outer(u: np.ndarray, v: np.ndarray, q) -> FqMatrix:
    modulus = as_modulus(q)
    return FqMatrix._wrap(K.matmul_mod(u.reshape(-1, 1), v.reshape(1, -1), modulus.q), modulus)


# -- exact linear algebra on small matrices ---------------------------------------

def row_reduce(rows: list[list[int]], q: int) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form over F_q; returns (rref, pivot columns)."""
    m = [[v % q for v in row] for row in rows]
    nrows, ncols = len(m), len(m[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, nrows) if m[i][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = inv_mod(m[r][c], q)
        m[r] = [v * inv % q for v in m[r]]
        for i in range(nrows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [(a - f * b) % q for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return m, pivots


def rank(x: FqMatrix) -> int:
    return len(row_reduce(x.to_rows(), x.q)[1])


def solve_scalar_system(coeffs: list[list[int]], q: int) -> list[list[int]]:
    """Inverse of a square scalar matrix over F_q."""
    n = len(coeffs)
    aug = [list(row) + [int(i == j) for j in range(n)] for i, row in enumerate(coeffs)]
    red, pivots = row_reduce(aug, q)
    if pivots[:n] != list(range(n)):
        raise ArithmeticError("singular system")
    return [row[n:] for row in red]


# -- text format --------------------------------------------------------------------

def dumps(x: FqMatrix) -> str:
    out = io.StringIO()
    out.write(f"{x.rows} {x.cols} {x.q}\n")
    for row in x.to_rows():
        out.write(" ".join(str(v) for v in row))
        out.write("\n")
    return out.getvalue()


def loads(text: str) -> FqMatrix:
    lines = text.splitlines()
    if not lines:
        raise MatrixFormatError("empty matrix file", 1)
    header = lines[0].split()
    if len(header) != 3:
        raise MatrixFormatError("header must be 'rows cols q'", 1)
    try:
        rows, cols, q = (int(t) for t in header)
    except ValueError:
        raise MatrixFormatError("header fields must be integers", 1) from None
    if rows <= 0 or cols <= 0:
        raise MatrixFormatError("rows and cols must be positive", 1)
    try:
        modulus = PrimeModulus(q)
    except FieldError as exc:
        raise MatrixFormatError(str(exc), 1) from None
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != rows:
        raise MatrixFormatError(f"expected {rows} rows, found {len(body)}", len(lines) + 1)
    data = []
    for lineno, line in enumerate(body, start=2):
        tokens = line.split()
        if len(tokens) != cols:
            raise MatrixFormatError(f"expected {cols} entries, found {len(tokens)}", lineno)
        try:
            row = [int(t) for t in tokens]
        except ValueError:
            raise MatrixFormatError("non-integer entry", lineno) from None
        if any(v < 0 or v >= q for v in row):
            raise MatrixFormatError(f"entry outside [0, {q})", lineno)
        data.append(row)
    return FqMatrix(data, modulus)


def read_matrix(path: Union[str, Path]) -> FqMatrix:
    return loads(Path(path).read_text())


def write_matrix(path: Union[str, Path], x: FqMatrix) -> None:
    Path(path).write_text(dumps(x))


# -- block helpers --------------------------------------------------------------------

def split_rows(x: FqMatrix, m: int) -> list[FqMatrix]:
    if x.rows % m:
        raise ValueError(f"{x.rows} rows not divisible into {m} blocks")
    r = x.rows // m
    return [FqMatrix._wrap(np.ascontiguousarray(x.array[i * r:(i + 1) * r]), x.modulus)
            for i in range(m)]


def split_cols(x: FqMatrix, k: int) -> list[FqMatrix]:
    if x.cols % k:
        raise ValueError(f"{x.cols} columns not divisible into {k} blocks")
    c = x.cols // k
    return [FqMatrix._wrap(np.ascontiguousarray(x.array[:, j * c:(j + 1) * c]), x.modulus)
            for j in range(k)]


def pad_to_multiple(x: FqMatrix, row_mult: int = 1, col_mult: int = 1) -> FqMatrix:
    pr = -x.rows % row_mult
    pc = -x.cols % col_mult
    if not pr and not pc:
        return x
    return FqMatrix._wrap(np.pad(x.array, ((0, pr), (0, pc))), x.modulus)


def assemble_blocks(blocks: Sequence[Sequence[FqMatrix]]) -> FqMatrix:
    arr = np.block([[b.array for b in row] for row in blocks])
    return FqMatrix._wrap(np.ascontiguousarray(arr), blocks[0][0].modulus)


def crop(x: FqMatrix, rows: int, cols: int) -> FqMatrix:
    return FqMatrix._wrap(np.ascontiguousarray(x.array[:rows, :cols]), x.modulus)
