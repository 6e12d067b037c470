"""Adversarial error models applied to worker responses."""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from ..field import sample_distinct_ints
from ..matgf import FqMatrix, random_nonzero_matrix, random_rank1_matrix
from ..polymat import InterpolationNodes, interpolate_at

ERROR_MODELS = {
    "honest": 0,
    "single_random": 1,
    "all_random": 2,
    "single_rank1": 3,
    "all_rank1": 4,
    "coordinated_rank1": 5,
}
_BY_NUMBER = {v: k for k, v in ERROR_MODELS.items()}


def model_name(model: Union[int, str]) -> str:
    if isinstance(model, int) or (isinstance(model, str) and model.isdigit()):
        try:
            return _BY_NUMBER[int(model)]
        except KeyError:
            raise ValueError(f"unknown error model {model!r}") from None
    if model not in ERROR_MODELS:
        raise ValueError(f"unknown error model {model!r}")
    return model


def error_matrices(model: Union[int, str], count: int, shape: tuple[int, int], q,
                   rng: np.random.Generator) -> list[FqMatrix | None]:
    """Per-response additive errors (``None`` = untouched) for one round.

    Coordinated errors are ``lambda_i * u v^T`` for one shared rank-1 matrix
    and scalars drawn uniformly from the whole field, so an individual
    coefficient (or all of them) may be zero.
    """
    name = model_name(model)
    rows, cols = shape
    out: list[FqMatrix | None] = [None] * count
    if count < 1:
        raise ValueError("need at least one response")
    if name == "honest":
        return out
    if name in ("single_random", "single_rank1"):
        victim = int(rng.integers(count))
        gen = random_nonzero_matrix if name == "single_random" else random_rank1_matrix
        out[victim] = gen(rng, rows, cols, q)
        return out
    if name == "all_random":
        return [random_nonzero_matrix(rng, rows, cols, q) for _ in range(count)]
    if name == "all_rank1":
        return [random_rank1_matrix(rng, rows, cols, q) for _ in range(count)]
    shared = random_rank1_matrix(rng, rows, cols, q)
    qv = shared.q
    return [shared.scale(int(lam)) for lam in rng.integers(0, qv, size=count)]


def apply_error_model(model: Union[int, str], honest_evals: Sequence[FqMatrix],
                      rng: np.random.Generator) -> list[FqMatrix]:
    if not honest_evals:
        raise ValueError("need at least one response")
    first = honest_evals[0]
    errs = error_matrices(model, len(honest_evals), first.shape, first.modulus, rng)
    return [h if e is None else h + e for h, e in zip(honest_evals, errs)]


def observation1_attack(alphas: Sequence[int], betas: Sequence[int], z: int, d_u: int,
                        honest_evals: Sequence[FqMatrix], colluders: Sequence[int],
                        rng: np.random.Generator) -> dict[int, FqMatrix]:
    """Corrupted results for colluders who know (or guess) the private points.

    ``betas`` lists every cluster member's evaluation point in response order
    and ``colluders`` are positions into it. The colluders build the error
    polynomial P with P = 0 at the first coded-product point and at every
    honest worker's point, and a random nonzero error at the next
    ``len(colluders) - 1`` coded-product points (then the mask points), and
    add P at their own points to their honest results.
    """
    w = len(colluders)
    n_u = len(betas)
    if w < 2:
        raise ValueError("the attack needs at least two colluders")
    if w > n_u:
        raise ValueError(f"{w} colluders exceed the cluster size {n_u}")
    if len(set(colluders)) != w:
        raise ValueError("colluders must be distinct")
    first = honest_evals[0]
    targets = list(alphas[z + 1:z + d_u]) + list(alphas[:z])
    if w - 1 > len(targets):
        raise ValueError(f"{w} colluders exceed the {len(targets)} corruptible points")
    honest = [i for i in range(n_u) if i not in set(colluders)]
    points = [alphas[z]] + targets[:w - 1] + [betas[i] for i in honest]
    zero = FqMatrix.zeros(*first.shape, first.modulus)
    values = ([zero] + [random_nonzero_matrix(rng, *first.shape, first.modulus)
                        for _ in range(w - 1)] + [zero] * len(honest))
    nodes = InterpolationNodes(points, first.modulus)
    shifts = interpolate_at(nodes, values, [betas[i] for i in colluders])
    return {i: honest_evals[i] + p for i, p in zip(colluders, shifts)}


def guess_points(rng: np.random.Generator, q: int, n_alphas: int, n_betas: int
                 ) -> tuple[list[int], list[int]]:
    """Uniform guess of the private points by attackers without a leak."""
    pts = sample_distinct_ints(rng, q, n_alphas + n_betas)
    return pts[:n_alphas], pts[n_alphas:]
