import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from securematmul.field import FieldElement, FieldError, make_rng
from securematmul.matgf import FqMatrix, random_matrix
from securematmul.polymat import (ZERO_DEGREE, InterpolationNodes, MatrixPolynomial,
                                  basis_coefficients, basis_values, evaluate,
                                  evaluate_many, interpolate, interpolate_at,
                                  lagrange_basis_at, poly_product_evals)


def random_poly(rng, degree, shape, q):
    coeffs = [random_matrix(rng, *shape, q) for _ in range(degree + 1)]
    while coeffs[-1].is_zero():
        coeffs[-1] = random_matrix(rng, *shape, q)
    return MatrixPolynomial(coeffs)


def test_basis_examples():
    nodes = InterpolationNodes([1, 2], 5)
    assert lagrange_basis_at(nodes, 0, 1) == FieldElement(1, 5)
    assert lagrange_basis_at(nodes, 0, 2) == FieldElement(0, 5)
    assert lagrange_basis_at(nodes, 0, 3) == FieldElement(4, 5)
    with pytest.raises(FieldError):
        InterpolationNodes([1, 6], 5)


def test_partition_of_unity_exhaustive():
    for q in (5, 7):
        for pts in itertools.combinations(range(q), 3):
            nodes = InterpolationNodes(pts, q)
            vals = basis_values(nodes, list(range(q)))
            assert np.all(vals.sum(axis=1) % q == 1)


def test_basis_coefficients_match_values():
    rng = make_rng(0)
    q = 101
    pts = [int(v) for v in rng.choice(q, size=6, replace=False)]
    nodes = InterpolationNodes(pts, q)
    coeffs = basis_coefficients(nodes)
    for x in range(0, q, 7):
        powers = [pow(x, p, q) for p in range(6)]
        direct = [sum(int(c) * pw for c, pw in zip(row, powers)) % q for row in coeffs]
        assert direct == [int(lagrange_basis_at(nodes, i, x)) for i in range(6)]


def test_interpolate_examples():
    rng = make_rng(1)
    v = random_matrix(rng, 2, 3, 11)
    p = interpolate(InterpolationNodes([4], 11), [v])
    assert p.degree == 0 and p(9) == v
    p = interpolate(InterpolationNodes([4, 7], 11), [v, v])
    assert p.degree == 0 and p.coeffs[0] == v
    orig = random_poly(rng, 3, (2, 2), 11)
    nodes = InterpolationNodes([0, 3, 5, 10], 11)
    assert interpolate(nodes, evaluate_many(orig, nodes.points)) == orig
    with pytest.raises(ValueError):
        interpolate(nodes, [v])


def test_evaluate_examples():
    rng = make_rng(2)
    c = random_matrix(rng, 2, 2, 7)
    assert evaluate(MatrixPolynomial([c]), 5) == c
    x_times_i = MatrixPolynomial([FqMatrix.zeros(3, 3, 7), FqMatrix.identity(3, 7)])
    assert evaluate(x_times_i, 3) == FqMatrix.identity(3, 7) * 3
    p = random_poly(rng, 2, (2, 3), 7)
    nodes = InterpolationNodes([1, 4, 6], 7)
    assert interpolate(nodes, [evaluate(p, x) for x in nodes.points]) == p


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([5, 11, 101]), st.integers(0, 4), st.integers(1, 3), st.integers(1, 3),
       st.integers(0, 2**32))
def test_roundtrip_property(q, degree, rows, cols, seed):
    rng = make_rng(seed)
    p = random_poly(rng, degree, (rows, cols), q)
    pts = [int(v) for v in rng.choice(q, size=degree + 1, replace=False)]
    nodes = InterpolationNodes(pts, q)
    back = interpolate(nodes, evaluate_many(p, pts))
    assert back == p and back.degree == degree
    extra = [int(v) for v in rng.choice(q, size=min(q, degree + 3), replace=False)]
    values = [random_matrix(rng, rows, cols, q) for _ in extra]
    assert interpolate(InterpolationNodes(extra, q), values).degree <= len(extra) - 1


def test_interpolate_at_matches_interpolate():
    rng = make_rng(3)
    nodes = InterpolationNodes([2, 5, 9, 13], 17)
    values = [random_matrix(rng, 2, 2, 17) for _ in range(4)]
    xs = [0, 1, 16]
    assert interpolate_at(nodes, values, xs) == evaluate_many(interpolate(nodes, values), xs)


def test_poly_product_examples():
    rng = make_rng(4)
    q = 11
    a, b = random_matrix(rng, 2, 3, q), random_matrix(rng, 3, 2, q)
    assert poly_product_evals(MatrixPolynomial([a]), MatrixPolynomial([b]), 6) == a @ b
    zero = MatrixPolynomial([FqMatrix.zeros(2, 3, q)])
    assert zero.is_zero() and zero.degree == ZERO_DEGREE
    g = random_poly(rng, 1, (3, 2), q)
    for x in range(q):
        assert poly_product_evals(zero, g, x).is_zero()
    f = random_poly(rng, 1, (2, 3), q)
    pts = [1, 2, 3, 4]
    h = interpolate(InterpolationNodes(pts, q), [poly_product_evals(f, g, x) for x in pts])
    f0, f1 = f.coeffs
    g0, g1 = g.coeffs
    conv = MatrixPolynomial([f0 @ g0, f0 @ g1 + f1 @ g0, f1 @ g1])
    assert h.degree <= 2 and h == conv


def test_zero_degree_sentinel():
    p = MatrixPolynomial([FqMatrix.zeros(1, 1, 7)] * 3)
    assert p.degree == -float("inf")
    assert p.degree != -1
    q = MatrixPolynomial([FqMatrix([[1]], 7)])
    assert (q - q).degree == ZERO_DEGREE
