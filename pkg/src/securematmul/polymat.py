"""Polynomials with F_q matrix coefficients.

Interpolation and evaluation use the classical quadratic-time algorithms: the
Lagrange basis is expanded into coefficient form once per node set and applied
to all matrix entries with a single modular matrix product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import _kernels as K
from .field import FieldElement, FieldError, PrimeModulus, as_modulus, inv_mod
from .matgf import FqMatrix

#: Degree of the zero polynomial.
ZERO_DEGREE = -math.inf

Scalar = Union[int, FieldElement]


@dataclass(frozen=True)
class InterpolationNodes:
    """Pairwise distinct evaluation points in F_q."""

    points: tuple[int, ...]
    modulus: PrimeModulus

    def __init__(self, points: Sequence[Scalar], q):
        modulus = as_modulus(q)
        pts = tuple(int(p) % modulus.q for p in points)
        if len(set(pts)) != len(pts):
            raise FieldError(f"duplicate interpolation nodes: {pts}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "modulus", modulus)

    def __len__(self):
        return len(self.points)

    @property
    def q(self) -> int:
        return self.modulus.q

    def weights(self) -> list[int]:
        """Barycentric weights ``1 / prod_{j != i} (x_i - x_j)``."""
        q = self.q
        out = []
        for i, xi in enumerate(self.points):
            den = 1
            for j, xj in enumerate(self.points):
                if j != i:
                    den = den * (xi - xj) % q
            out.append(inv_mod(den, q))
        return out


def lagrange_basis_at(nodes: InterpolationNodes, i: int, x: Scalar) -> FieldElement:
    q = nodes.q
    x = int(x) % q
    xi = nodes.points[i]
    num = den = 1
    for j, xj in enumerate(nodes.points):
        if j != i:
            num = num * (x - xj) % q
            den = den * (xi - xj) % q
    return FieldElement(num * inv_mod(den, q), nodes.modulus)


def basis_values(nodes: InterpolationNodes, xs: Sequence[Scalar]) -> np.ndarray:
    """Matrix ``L[k, i] = l_i(xs[k])`` as int64."""
    q = nodes.q
    pts = nodes.points
    w = nodes.weights()
    out = np.zeros((len(xs), len(pts)), dtype=np.int64)
    for k, x in enumerate(xs):
        x = int(x) % q
        if x in pts:
            out[k, pts.index(x)] = 1
            continue
        diffs = [(x - p) % q for p in pts]
        total = 1
        for d in diffs:
            total = total * d % q
        out[k] = [total * wi % q * inv_mod(d, q) % q for wi, d in zip(w, diffs)]
    return out


def basis_coefficients(nodes: InterpolationNodes) -> np.ndarray:
    """Matrix ``C[i, p]`` = coefficient of x^p in l_i(x)."""
    q = nodes.q
    pts = nodes.points
    n = len(pts)
    master = [1]  # prod (x - x_j), lowest degree first
    for p in pts:
        nxt = [0] * (len(master) + 1)
        for d, c in enumerate(master):
            nxt[d + 1] = (nxt[d + 1] + c) % q
            nxt[d] = (nxt[d] - c * p) % q
        master = nxt
    out = np.zeros((n, n), dtype=np.int64)
    for i, (xi, wi) in enumerate(zip(pts, nodes.weights())):
        # synthetic division of master by (x - xi)
        quot = [0] * n
        carry = 0
        for d in range(n, 0, -1):
            carry = (master[d] + carry * xi) % q
            quot[d - 1] = carry
        out[i] = [c * wi % q for c in quot]
    return out


def _powers(x: int, count: int, q: int) -> list[int]:
    out, acc = [], 1
    for _ in range(count):
        out.append(acc)
        acc = acc * x % q
    return out


class MatrixPolynomial:
    """``sum_p coeffs[p] x^p`` with equally shaped F_q matrix coefficients."""

    __slots__ = ("_coeffs", "modulus")

    def __init__(self, coeffs, q=None):
        if isinstance(coeffs, np.ndarray):
            if q is None:
                raise ValueError("modulus required for raw coefficient arrays")
            modulus = as_modulus(q)
            stack = np.asarray(coeffs, dtype=np.int64)
            if stack.ndim != 3 or stack.shape[0] == 0:
                raise ValueError(f"expected (terms, rows, cols) array, got {stack.shape}")
        else:
            coeffs = list(coeffs)
            if not coeffs:
                raise ValueError("polynomial needs at least one coefficient")
            modulus = coeffs[0].modulus
            shape = coeffs[0].shape
            for c in coeffs:
                if c.modulus != modulus:
                    raise FieldError("coefficient moduli differ")
                if c.shape != shape:
                    raise ValueError("coefficient shapes differ")
            stack = np.stack([c.array for c in coeffs])
        nz = np.flatnonzero(stack.reshape(stack.shape[0], -1).any(axis=1))
        keep = int(nz[-1]) + 1 if nz.size else 1
        stack = np.ascontiguousarray(stack[:keep])
        stack.setflags(write=False)
        self._coeffs = stack
        self.modulus = modulus

    @classmethod
    def constant(cls, value: FqMatrix) -> "MatrixPolynomial":
        return cls([value])

    @property
    def q(self) -> int:
        return self.modulus.q

    @property
    def shape(self) -> tuple[int, int]:
        return self._coeffs.shape[1:]

    @property
    def degree(self):
        if len(self._coeffs) == 1 and not self._coeffs[0].any():
            return ZERO_DEGREE
        return len(self._coeffs) - 1

    @property
    def coeff_array(self) -> np.ndarray:
        return self._coeffs

    @property
    def coeffs(self) -> list[FqMatrix]:
        return [FqMatrix._wrap(c, self.modulus) for c in self._coeffs]

    def is_zero(self) -> bool:
        return self.degree == ZERO_DEGREE

    def __call__(self, x: Scalar) -> FqMatrix:
        return evaluate(self, x)

    def __eq__(self, other):
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        return (self.modulus == other.modulus and self._coeffs.shape == other._coeffs.shape
                and np.array_equal(self._coeffs, other._coeffs))

    def __hash__(self):
        return hash((self.q, self._coeffs.shape, self._coeffs.tobytes()))

    def __sub__(self, other: "MatrixPolynomial") -> "MatrixPolynomial":
        if other.modulus != self.modulus or other.shape != self.shape:
            raise ValueError("polynomials are not compatible")
        n = max(len(self._coeffs), len(other._coeffs))
        a = np.zeros((n,) + self.shape, dtype=np.int64)
        b = np.zeros_like(a)
        a[:len(self._coeffs)] = self._coeffs
        b[:len(other._coeffs)] = other._coeffs
        return MatrixPolynomial(K.sub_mod(a, b, self.q), self.modulus)

    def __repr__(self):
        return f"MatrixPolynomial(degree={self.degree}, shape={self.shape}, q={self.q})"


def evaluate(p: MatrixPolynomial, x: Scalar) -> FqMatrix:
    if isinstance(x, FieldElement) and x.modulus != p.modulus:
        raise FieldError("modulus mismatch")
    powers = _powers(int(x) % p.q, len(p.coeff_array), p.q)
    return FqMatrix._wrap(K.combine_mod(powers, p.coeff_array, p.q), p.modulus)


def evaluate_many(p: MatrixPolynomial, xs: Sequence[Scalar]) -> list[FqMatrix]:
    q = p.q
    terms = len(p.coeff_array)
    vander = np.array([_powers(int(x) % q, terms, q) for x in xs], dtype=np.int64)
    flat = p.coeff_array.reshape(terms, -1)
    vals = K.matmul_mod(vander, flat, q).reshape((len(xs),) + p.shape)
    return [FqMatrix._wrap(v, p.modulus) for v in vals]


def interpolate(nodes: InterpolationNodes, values: Sequence[FqMatrix]) -> MatrixPolynomial:
    """Unique polynomial of degree < len(nodes) through ``(nodes[i], values[i])``."""
    if len(values) != len(nodes) or not values:
        raise ValueError(f"{len(nodes)} nodes but {len(values)} values")
    shape = values[0].shape
    for v in values:
        if v.shape != shape:
            raise ValueError("value shapes differ")
        if v.modulus != nodes.modulus:
            raise FieldError("value modulus differs from node modulus")
    q = nodes.q
    coef = basis_coefficients(nodes)
    stack = np.stack([v.array for v in values]).reshape(len(values), -1)
    out = K.matmul_mod(np.ascontiguousarray(coef.T), stack, q)
    return MatrixPolynomial(out.reshape((len(values),) + shape), nodes.modulus)


def interpolate_at(nodes: InterpolationNodes, values: Sequence[FqMatrix],
                   xs: Sequence[Scalar]) -> list[FqMatrix]:
    """Evaluate the interpolant at ``xs`` without expanding to coefficients."""
    if len(values) != len(nodes):
        raise ValueError(f"{len(nodes)} nodes but {len(values)} values")
    shape = values[0].shape
    basis = basis_values(nodes, xs)
    stack = np.stack([v.array for v in values]).reshape(len(values), -1)
    out = K.matmul_mod(basis, stack, nodes.q).reshape((len(xs),) + shape)
    return [FqMatrix._wrap(v, nodes.modulus) for v in out]


def poly_product_evals(f: MatrixPolynomial, g: MatrixPolynomial, x: Scalar) -> FqMatrix:
    if f.shape[1] != g.shape[0]:
        raise ValueError(f"shape mismatch: {f.shape} times {g.shape}")
    return evaluate(f, x) @ evaluate(g, x)
