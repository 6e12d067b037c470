import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from securematmul._kernels import combine_mod, matmul_mod, scalar_mul_mod
from securematmul.field import FieldError, make_rng
from securematmul.matgf import (FqMatrix, MatrixFormatError, as_vector, assemble_blocks,
                                crop, dumps, linear_combination, loads, matmul, matvec,
                                pad_to_multiple, random_matrix, random_nonzero_matrix,
                                random_rank1_matrix, rank, read_matrix, split_cols,
                                split_rows, write_matrix)

PRIMES = [2, 7, 101, 2**31 - 1, 2**61 - 1, 4611686018427387847]


def slow_matmul(x, y, q):
    xl, yl = x.tolist(), y.tolist()
    return [[sum(a * b for a, b in zip(row, col)) % q for col in zip(*yl)] for row in xl]


@pytest.mark.parametrize("q", PRIMES)
@pytest.mark.parametrize("shape", [(1, 1, 1), (3, 5, 2), (8, 130, 4)])
def test_matmul_kernel_against_python_ints(q, shape):
    rng = make_rng(q % 1000 + shape[1])
    r, s, l = shape
    x = rng.integers(0, q, size=(r, s), dtype=np.int64)
    y = rng.integers(0, q, size=(s, l), dtype=np.int64)
    x[0, 0] = y[0, 0] = q - 1
    assert matmul_mod(x, y, q).tolist() == slow_matmul(x, y, q)


@pytest.mark.parametrize("q", PRIMES)
def test_scalar_and_combine_kernels(q):
    rng = make_rng(1)
    a = rng.integers(0, q, size=(4, 5), dtype=np.int64)
    for c in (0, 1, q - 1, int(rng.integers(0, q))):
        assert scalar_mul_mod(a, c, q).tolist() == [[v * c % q for v in row] for row in a.tolist()]
    coeffs = [int(v) for v in rng.integers(0, q, size=3)]
    arrs = rng.integers(0, q, size=(3, 2, 2), dtype=np.int64)
    expect = [[sum(cf * int(arrs[t, i, j]) for t, cf in enumerate(coeffs)) % q
               for j in range(2)] for i in range(2)]
    assert combine_mod(coeffs, arrs, q).tolist() == expect


def test_matmul_examples():
    rng = make_rng(0)
    y = random_matrix(rng, 3, 4, 7)
    assert FqMatrix.identity(3, 7) @ y == y
    assert matmul(FqMatrix([[3]], 7), FqMatrix([[4]], 7)) == FqMatrix([[5]], 7)
    with pytest.raises(ValueError):
        matmul(random_matrix(rng, 2, 3, 7), random_matrix(rng, 2, 3, 7))
    with pytest.raises(FieldError):
        matmul(random_matrix(rng, 2, 2, 7), random_matrix(rng, 2, 2, 11))


def test_matvec_examples():
    rng = make_rng(0)
    x = random_matrix(rng, 3, 3, 11)
    assert not matvec(x, np.zeros(3, dtype=np.int64)).any()
    v = as_vector([1, 5, 10], 11)
    assert matvec(FqMatrix.identity(3, 11), v).tolist() == [1, 5, 10]
    with pytest.raises(ValueError):
        matvec(x, [1, 2])


def test_random_matrix_examples():
    for seed in range(20):
        assert random_nonzero_matrix(make_rng(seed), 1, 1, 2) == FqMatrix([[1]], 2)
    assert random_matrix(make_rng(4), 3, 3, 101) == random_matrix(make_rng(4), 3, 3, 101)
    rng = make_rng(2)
    counts = np.zeros((2, 2, 3))
    n = 10_000
    for _ in range(n):
        a = random_matrix(rng, 2, 2, 3).array
        for v in range(3):
            counts[:, :, v] += a == v
    sigma = np.sqrt(n * (1 / 3) * (2 / 3))
    assert np.all(np.abs(counts - n / 3) <= 3 * sigma)


def test_rank1_examples():
    rng = make_rng(3)
    for _ in range(200):
        assert not random_rank1_matrix(rng, 1, 1, 7).is_zero()
        x = random_rank1_matrix(rng, 2, 2, 5)
        a = x.array
        assert (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]) % 5 == 0
        assert not x.is_zero()
    for _ in range(200):
        r, c = (int(v) for v in rng.integers(1, 5, size=2))
        q = int(rng.choice([2, 3, 7]))
        assert rank(random_rank1_matrix(rng, r, c, q)) == 1


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([2, 5, 101, 2**61 - 1]), st.integers(1, 4), st.integers(1, 4),
       st.integers(1, 4), st.integers(0, 2**32))
def test_matmul_distributes(q, r, s, l, seed):
    rng = make_rng(seed)
    x = random_matrix(rng, r, s, q)
    y, w = random_matrix(rng, s, l, q), random_matrix(rng, s, l, q)
    assert x @ (y + w) == x @ y + x @ w
    assert (x @ y).transpose() == y.T @ x.T


def test_immutability_and_ops():
    x = FqMatrix([[1, 2], [3, 4]], 5)
    with pytest.raises(ValueError):
        x.array[0, 0] = 0
    assert -x + x == FqMatrix.zeros(2, 2, 5)
    assert x * 3 == x.scale(3) == FqMatrix([[3, 1], [4, 2]], 5)
    assert x - x == FqMatrix.zeros(2, 2, 5)
    assert linear_combination([1, 4], [x, x]).is_zero()
    assert hash(x) == hash(FqMatrix([[6, 7], [8, 9]], 5))


def test_text_format_roundtrip(tmp_path):
    x = random_matrix(make_rng(1), 3, 4, 2**61 - 1)
    assert loads(dumps(x)) == x
    p = tmp_path / "m.txt"
    write_matrix(p, x)
    assert read_matrix(p) == x


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("2 2\n1 2\n3 4\n", 1),
    ("2 2 8\n1 2\n3 4\n", 1),
    ("2 2 7\n1 2\n3\n", 3),
    ("2 2 7\n1 2\n3 x\n", 3),
    ("2 2 7\n1 9\n3 4\n", 2),
    ("2 2 7\n1 2\n", 3),
])
def test_text_format_errors(text, line):
    with pytest.raises(MatrixFormatError) as info:
        loads(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_block_helpers():
    rng = make_rng(5)
    x = random_matrix(rng, 5, 7, 11)
    p = pad_to_multiple(x, 2, 3)
    assert p.shape == (6, 9) and crop(p, 5, 7) == x
    rows = split_rows(p, 3)
    cols = split_cols(p, 3)
    assert assemble_blocks([[r] for r in rows]) == p
    assert assemble_blocks([cols]) == p
    with pytest.raises(ValueError):
        split_rows(x, 2)
