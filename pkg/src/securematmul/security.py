"""Freivalds-style integrity checks and missed-detection bounds."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Mapping, Optional, Sequence

import numpy as np

from .field import sample_distinct_ints
from .matgf import FqMatrix, matvec
from .polymat import MatrixPolynomial, evaluate
from .scheme import ClusterEncoding, RoundPlan, Task, WorkerResponse


class BoundVacuous(ValueError):
    pass


@dataclass
class CheckOutcome:
    passed: bool
    repetitions_used: int
    gammas: list[int] = field(default_factory=list)

    def __bool__(self):
        return self.passed


def freivalds(x1: FqMatrix, x2: FqMatrix, x3: FqMatrix, rng: np.random.Generator,
              nu: Optional[np.ndarray] = None) -> bool:
    """Randomised test of ``x1 @ x2 == x3`` with three matrix-vector products.

    A wrong product passes with probability at most 1/q.
    """
    if x1.cols != x2.rows or x3.shape != (x1.rows, x2.cols):
        raise ValueError(f"shape mismatch: {x1.shape} @ {x2.shape} vs {x3.shape}")
    if nu is None:
        nu = rng.integers(0, x1.q, size=x2.cols, dtype=np.int64)
    return bool(np.array_equal(matvec(x1, matvec(x2, nu)), matvec(x3, nu)))


def check_points(plan: RoundPlan, u: int, eta: int,
                 rng: Optional[np.random.Generator] = None) -> list[int]:
    """Evaluation points for ``eta`` repetitions of the cluster check.

    The coded-product points come first, then the mask points; beyond
    ``z + d_u`` repetitions fresh distinct points avoiding every worker's
    evaluation point are drawn.
    """
    z, d = plan.z, plan.degrees[u]
    if eta < 1:
        raise ValueError("eta must be >= 1")
    points = list(plan.alphas[z:z + d]) + list(plan.alphas[:z])
    if eta <= len(points):
        return points[:eta]
    extra = eta - len(points)
    if rng is None:
        raise ValueError(f"eta={eta} > z + d_u needs an rng for fresh points")
    room = plan.q - len(plan.betas) - len(points)
    if extra > room:
        raise ValueError(f"eta={eta} exceeds the {room + len(points)} usable points")
    return points + sample_distinct_ints(rng, plan.q, extra, set(plan.betas) | set(points))


def cluster_check(plan: RoundPlan, u: int, H: MatrixPolynomial, encoding: ClusterEncoding,
                  rng: np.random.Generator, eta: int = 1,
                  known_h: Optional[Mapping[int, FqMatrix]] = None) -> CheckOutcome:
    """Check ``H == F G`` at ``eta`` distinct points with a fresh vector each time.

    ``known_h`` maps already-computed evaluation points to H's value there (the
    coded products handed to the decoder), which saves an evaluation.
    """
    z = plan.z
    known_f: dict[int, FqMatrix] = {}
    known_g: dict[int, FqMatrix] = {}
    for a, R, S in zip(plan.alphas[:z], plan.masks_R, plan.masks_S):
        known_f[a], known_g[a] = R, S
    for a, At, Bt in zip(plan.data_points(u), encoding.a_tildes, encoding.b_tildes):
        known_f[a], known_g[a] = At, Bt
    known_h = dict(known_h or {})

    gammas = check_points(plan, u, eta, rng)
    for rep, gamma in enumerate(gammas, start=1):
        f = known_f.get(gamma)
        f = f if f is not None else evaluate(encoding.F, gamma)
        g = known_g.get(gamma)
        g = g if g is not None else evaluate(encoding.G, gamma)
        h = known_h.get(gamma)
        h = h if h is not None else evaluate(H, gamma)
        if not freivalds(f, g, h, rng):
            return CheckOutcome(False, rep, gammas[:rep])
    return CheckOutcome(True, len(gammas), gammas)


def cluster_check_public_gamma(F: MatrixPolynomial, G: MatrixPolynomial, H: MatrixPolynomial,
                               rng: np.random.Generator) -> CheckOutcome:
    """Check at a fresh uniformly random point; safe even if the alphas leak."""
    gamma = int(rng.integers(0, F.q))
    ok = freivalds(evaluate(F, gamma), evaluate(G, gamma), evaluate(H, gamma), rng)
    return CheckOutcome(ok, 1, [gamma])


def worker_check(task: Task, response: WorkerResponse, rng: np.random.Generator) -> bool:
    return freivalds(task.f_eval, task.g_eval, response.h_eval, rng)


def identify_malicious(tasks: Sequence[Task], responses: Sequence[WorkerResponse],
                       rng: np.random.Generator) -> set[int]:
    """Workers whose individual response fails the per-worker check."""
    by_worker = {t.worker: t for t in tasks}
    flagged = set()
    for resp in responses:
        task = by_worker.get(resp.worker)
        if task is not None and not worker_check(task, resp, rng):
            flagged.add(resp.worker)
    return flagged


# -- bounds -----------------------------------------------------------------------

def _clamp(x: Fraction, clamp: bool) -> float:
    return float(min(x, 1)) if clamp else float(x)


def _single(q: int, deg: int) -> Fraction:
    if q <= deg + 1:
        raise BoundVacuous(f"bound vacuous: q={q} <= deg+1={deg + 1}")
    root = Fraction(deg, q - deg - 1)
    return root + Fraction(1, q) - root * Fraction(1, q)


def bound_single(q: int, deg_h: int, clamp: bool = True) -> float:
    """Missed-detection bound for one check at a private data point."""
    return _clamp(_single(int(q), int(deg_h)), clamp)


def bound_public_gamma(q: int, deg_h: int, clamp: bool = True) -> float:
    root = Fraction(int(deg_h), int(q))
    return _clamp(root + Fraction(1, q) - root * Fraction(1, q), clamp)


def bound_repeated_iid(q: int, deg_h: int, eta: int, clamp: bool = True) -> float:
    if eta < 1:
        raise ValueError("eta must be >= 1")
    return _clamp(_single(int(q), int(deg_h)) ** eta, clamp)


def _binom(n: int, k: int) -> int:
    return comb(n, k) if 0 <= k <= n and n >= 0 else 0


def bound_repeated_distinct_exact(q: int, deg_h: int, eta: int) -> Fraction:
    q, deg, eta = int(q), int(deg_h), int(eta)
    if eta < 1:
        raise ValueError("eta must be >= 1")
    if q <= deg + 1:
        raise BoundVacuous(f"bound vacuous: q={q} <= deg+1={deg + 1}")
    total = _binom(q - deg - 1, eta)
    if total == 0:
        raise BoundVacuous(f"eta={eta} exceeds the {q - deg - 1} available points")
    acc = Fraction(0)
    for j in range(eta + 1):
        ways = _binom(deg, j) * _binom(q - 2 * deg - 1, eta - j)
        if ways:
            acc += Fraction(ways, total) * Fraction(1, q ** (eta - j))
    return acc


def bound_repeated_distinct(q: int, deg_h: int, eta: int, clamp: bool = True) -> float:
    """Bound for ``eta`` checks at distinct points drawn without replacement."""
    return _clamp(bound_repeated_distinct_exact(q, deg_h, eta), clamp)
