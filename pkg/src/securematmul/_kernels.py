"""Exact modular kernels on int64 arrays for moduli below 2^62.

Matrix products go through float64 BLAS. Operands are split into limbs small
enough that every partial dot product stays below 2^53, which keeps the
floating-point accumulation exact; limb products are recombined with Shoup
modular multiplication in wrapping uint64 arithmetic.
"""

from __future__ import annotations

import numpy as np

_EXACT_FLOAT = 1 << 53
_INT64_SAFE = 1 << 63
_M32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


def add_mod(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    s = a + b
    s[s >= q] -= q
    return s


def sub_mod(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    s = a - b
    s[s < 0] += q
    return s


def neg_mod(a: np.ndarray, q: int) -> np.ndarray:
    out = q - a
    out[out == q] = 0
    return out


def _mulhi64(a: np.ndarray, w: int) -> np.ndarray:
    w0 = np.uint64(w & 0xFFFFFFFF)
    w1 = np.uint64(w >> 32)
    a0 = a & _M32
    a1 = a >> _S32
    p00 = a0 * w0
    p01 = a0 * w1
    p10 = a1 * w0
    p11 = a1 * w1
    mid = (p00 >> _S32) + (p01 & _M32) + (p10 & _M32)
    return p11 + (p01 >> _S32) + (p10 >> _S32) + (mid >> _S32)


def scalar_mul_mod(a: np.ndarray, c: int, q: int) -> np.ndarray:
    """``c * a mod q`` for a scalar ``c`` and array ``a`` with entries in [0, q)."""
    c %= q
    if c == 0:
        return np.zeros_like(a)
    if c == 1:
        return a.copy()
    if c * (q - 1) < _INT64_SAFE:
        return a * c % q
    # Shoup: w = floor(c 2^64 / q); a*c - mulhi(a, w)*q lies in [0, 2q).
    w = (c << 64) // q
    au = a.astype(np.uint64)
    r = au * np.uint64(c) - _mulhi64(au, w) * np.uint64(q)
    r = r.astype(np.int64)
    r[r >= q] -= q
    return r


def _limb_bits(inner: int) -> int:
    b = 26
    while b > 1 and inner * ((1 << b) - 1) ** 2 >= _EXACT_FLOAT:
        b -= 1
    return b


def matmul_mod(x: np.ndarray, y: np.ndarray, q: int) -> np.ndarray:
    """Exact ``x @ y mod q`` for int64 operands reduced mod q."""
    inner = x.shape[-1]
    out_shape = x.shape[:-1] + y.shape[1:]
    if inner == 0:
        return np.zeros(out_shape, dtype=np.int64)
    if inner * (q - 1) ** 2 < _EXACT_FLOAT:
        prod = np.matmul(x.astype(np.float64), y.astype(np.float64))
        return prod.astype(np.int64) % q

    b = _limb_bits(inner)
    nlimbs = -(-(q - 1).bit_length() // b)
    mask = (1 << b) - 1
    x_limbs = [((x >> (b * i)) & mask).astype(np.float64) for i in range(nlimbs)]
    y_limbs = [((y >> (b * i)) & mask).astype(np.float64) for i in range(nlimbs)]

    groups = [np.zeros(out_shape, dtype=np.int64) for _ in range(2 * nlimbs - 1)]
    for i, xl in enumerate(x_limbs):
        for j, yl in enumerate(y_limbs):
            groups[i + j] += np.matmul(xl, yl).astype(np.int64)

    result = groups[0] % q
    for shift, g in enumerate(groups[1:], start=1):
        term = scalar_mul_mod(g % q, pow(2, b * shift, q), q)
        result = add_mod(result, term, q)
    return result


def combine_mod(coeffs: list[int], arrays: np.ndarray, q: int) -> np.ndarray:
    """``sum_i coeffs[i] * arrays[i] mod q`` with ``arrays`` stacked on axis 0."""
    flat = arrays.reshape(arrays.shape[0], -1)
    c = np.asarray([int(v) % q for v in coeffs], dtype=np.int64).reshape(1, -1)
    return matmul_mod(c, flat, q).reshape(arrays.shape[1:])
