"""Master-side round planning, Lagrange task encoding and cluster decoding.

Clusters are indexed from 0; cluster 0 is the fastest cluster and the only one
that must interpolate its product polynomial without help. Every other cluster
reuses cluster 0's evaluations at the mask points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .field import PrimeModulus, as_modulus, sample_distinct_ints
from .fountain import FountainSymbolSpec, SolitonParams, encode_block_sum, sample_spec
from .matgf import FqMatrix, linear_combination, random_matrix, solve_scalar_system
from .polymat import (InterpolationNodes, MatrixPolynomial, basis_values, evaluate_many,
                      interpolate)


class SchemeError(ValueError):
    pass


class ClusterStarved(RuntimeError):
    pass


@dataclass(frozen=True)
class SchemeParams:
    n: int
    z: int
    c: int
    m: int
    k: int
    r: int
    s: int
    l: int
    q: PrimeModulus

    def __post_init__(self):
        object.__setattr__(self, "q", as_modulus(self.q))
        for name in ("n", "z", "c", "m", "k", "r", "s", "l"):
            if getattr(self, name) < 1:
                raise SchemeError(f"{name} must be >= 1")
        if self.c > self.n:
            raise SchemeError("more clusters than workers")


def max_cluster_degree(n_u: int, z: int, u: int) -> int:
    """Largest number of coded products cluster ``u`` (0 = first) can return."""
    if u == 0:
        if n_u < 2 * z + 1:
            raise SchemeError(f"first cluster needs >= {2 * z + 1} workers, has {n_u}")
        return (n_u - 2 * z + 1) // 2
    if n_u < z + 1:
        raise SchemeError(f"cluster {u} needs >= {z + 1} workers, has {n_u}")
    return (n_u - z + 1) // 2


def required_responses(u: int, d_u: int, z: int, shared_masks: bool = True) -> int:
    if u == 0 or not shared_masks:
        return 2 * d_u + 2 * z - 1
    return 2 * d_u + z - 1


@dataclass(frozen=True)
class RoundPlan:
    t: int
    clusters: tuple[tuple[int, ...], ...]
    degrees: tuple[int, ...]
    alphas: tuple[int, ...]
    betas: tuple[int, ...]
    masks_R: tuple[FqMatrix, ...]
    masks_S: tuple[FqMatrix, ...]
    specs: tuple[tuple[FountainSymbolSpec, ...], ...]
    z: int
    modulus: PrimeModulus

    @property
    def q(self) -> int:
        return self.modulus.q

    @property
    def cluster_sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.clusters)

    @property
    def d_max(self) -> int:
        return max(self.degrees)

    def cluster_of(self, worker: int) -> int:
        for u, members in enumerate(self.clusters):
            if worker in members:
                return u
        raise KeyError(worker)

    def nodes(self, u: int) -> InterpolationNodes:
        """Interpolation points used by cluster ``u``: the first z + d_u alphas."""
        return InterpolationNodes(self.alphas[:self.z + self.degrees[u]], self.modulus)

    def data_points(self, u: int) -> tuple[int, ...]:
        return self.alphas[self.z:self.z + self.degrees[u]]

    def mask_points(self) -> tuple[int, ...]:
        return self.alphas[:self.z]


@dataclass(frozen=True)
class Task:
    worker: int
    round: int
    cluster: int
    f_eval: FqMatrix
    g_eval: FqMatrix


@dataclass(frozen=True)
class WorkerResponse:
    worker: int
    round: int
    cluster: int
    h_eval: FqMatrix
    arrival_time: float = 0.0


@dataclass(frozen=True)
class ClusterEncoding:
    """Master-side secrets for one cluster: F, G and the coded blocks."""

    cluster: int
    F: MatrixPolynomial
    G: MatrixPolynomial
    a_tildes: tuple[FqMatrix, ...]
    b_tildes: tuple[FqMatrix, ...]


@dataclass
class ClusterDecode:
    H: MatrixPolynomial
    c_tildes: list[FqMatrix]
    mask_evals: list[FqMatrix]
    used_workers: tuple[int, ...]


def validate_clusters(clusters: Sequence[Sequence[int]], z: int) -> None:
    if not clusters:
        raise SchemeError("need at least one cluster")
    seen: set[int] = set()
    for u, members in enumerate(clusters):
        max_cluster_degree(len(members), z, u)
        if seen.intersection(members):
            raise SchemeError("clusters overlap")
        seen.update(members)


def plan_round(rng: np.random.Generator, params: SchemeParams,
               clusters: Sequence[Sequence[int]], degrees: Optional[Sequence[int]] = None,
               t: int = 1, slack: int = 0,
               soliton: SolitonParams = SolitonParams()) -> RoundPlan:
    """Fresh private points, masks and fountain symbols for one round."""
    z = params.z
    validate_clusters(clusters, z)
    bounds = [max_cluster_degree(len(c), z, u) for u, c in enumerate(clusters)]
    if degrees is None:
        degrees = [max(1, b - slack) for b in bounds]
    degrees = [int(d) for d in degrees]
    if len(degrees) != len(clusters):
        raise SchemeError("one degree per cluster required")
    for u, (d, b) in enumerate(zip(degrees, bounds)):
        if not 1 <= d <= b:
            raise SchemeError(f"degree {d} for cluster {u} outside [1, {b}]")
    if max(w for c in clusters for w in c) >= params.n:
        raise SchemeError("worker index out of range")
    d_max = max(degrees)
    q = params.q.q
    points = sample_distinct_ints(rng, q, d_max + z + params.n)
    alphas, betas = points[:d_max + z], points[d_max + z:]
    masks_R = tuple(random_matrix(rng, params.r, params.s, params.q) for _ in range(z))
    masks_S = tuple(random_matrix(rng, params.s, params.l, params.q) for _ in range(z))
    specs = tuple(tuple(sample_spec(rng, params.m, params.k, soliton) for _ in range(d))
                  for d in degrees)
    return RoundPlan(t=t, clusters=tuple(tuple(int(w) for w in c) for c in clusters),
                     degrees=tuple(degrees), alphas=tuple(alphas), betas=tuple(betas),
                     masks_R=masks_R, masks_S=masks_S, specs=specs, z=z,
                     modulus=params.q)


def encode_cluster(plan: RoundPlan, u: int, a_tildes: Sequence[FqMatrix],
                   b_tildes: Sequence[FqMatrix]) -> tuple[list[Task], ClusterEncoding]:
    nodes = plan.nodes(u)
    F = interpolate(nodes, list(plan.masks_R) + list(a_tildes))
    G = interpolate(nodes, list(plan.masks_S) + list(b_tildes))
    members = plan.clusters[u]
    points = [plan.betas[w] for w in members]
    f_evals = evaluate_many(F, points)
    g_evals = evaluate_many(G, points)
    tasks = [Task(w, plan.t, u, f, g) for w, f, g in zip(members, f_evals, g_evals)]
    return tasks, ClusterEncoding(u, F, G, tuple(a_tildes), tuple(b_tildes))


def encode_tasks(plan: RoundPlan, a_blocks: Sequence[FqMatrix], b_blocks: Sequence[FqMatrix]
                 ) -> tuple[list[Task], list[ClusterEncoding]]:
    tasks: list[Task] = []
    encodings: list[ClusterEncoding] = []
    r, s = plan.masks_R[0].shape
    s2, l = plan.masks_S[0].shape
    if any(a.shape != (r, s) for a in a_blocks) or any(b.shape != (s2, l) for b in b_blocks):
        raise SchemeError("block shapes do not match the plan's mask shapes")
    for u, specs in enumerate(plan.specs):
        a_tildes = [encode_block_sum(a_blocks, sp.a_set) for sp in specs]
        b_tildes = [encode_block_sum(b_blocks, sp.b_set) for sp in specs]
        cluster_tasks, enc = encode_cluster(plan, u, a_tildes, b_tildes)
        tasks.extend(cluster_tasks)
        encodings.append(enc)
    return tasks, encodings


def honest_response(task: Task, arrival_time: float = 0.0) -> WorkerResponse:
    return WorkerResponse(task.worker, task.round, task.cluster,
                          task.f_eval @ task.g_eval, arrival_time)


def decode_cluster(plan: RoundPlan, u: int, responses: Sequence[WorkerResponse],
                   shared_mask_evals: Optional[Sequence[FqMatrix]] = None) -> ClusterDecode:
    """Interpolate H from the earliest responses and read off the coded products.

    Clusters after the first need ``2 d_u + z - 1`` responses when the first
    cluster's mask evaluations are supplied, else ``2 d_u + 2z - 1``.
    """
    z, d = plan.z, plan.degrees[u]
    shared = shared_mask_evals is not None and u != 0
    needed = required_responses(u, d, z, shared)
    usable = sorted((r for r in responses if r.cluster == u),
                    key=lambda r: (r.arrival_time, r.worker))
    if len(usable) < needed:
        raise ClusterStarved(
            f"cluster starved: cluster {u} has {len(usable)} responses, needs {needed}")
    used = usable[:needed]
    points = [plan.betas[r.worker] for r in used]
    values = [r.h_eval for r in used]
    if shared:
        if len(shared_mask_evals) != z:
            raise SchemeError(f"expected {z} shared mask evaluations")
        points = list(plan.mask_points()) + points
        values = list(shared_mask_evals) + values
    H = interpolate(InterpolationNodes(points, plan.modulus), values)
    evals = evaluate_many(H, plan.alphas[:z + d])
    return ClusterDecode(H=H, c_tildes=evals[z:], mask_evals=evals[:z],
                         used_workers=tuple(r.worker for r in used))


def decode_cluster_excluding(plan: RoundPlan, u: int, responses: Sequence[WorkerResponse],
                             excluded_workers, shared_mask_evals=None) -> ClusterDecode:
    excluded = set(excluded_workers)
    kept = [r for r in responses if r.worker not in excluded]
    try:
        return decode_cluster(plan, u, kept, shared_mask_evals)
    except ClusterStarved as exc:
        raise ClusterStarved(f"cluster starved after exclusion: {exc}") from None


def recover_masks_from_tasks(tasks: Sequence[Task], alphas: Sequence[int],
                             betas: Mapping[int, int], a_tildes: Sequence[FqMatrix],
                             b_tildes: Sequence[FqMatrix], z: int, q
                             ) -> tuple[list[FqMatrix], list[FqMatrix]]:
    """Solve for the masks given z tasks and every private round parameter.

    ``betas`` maps worker index to its evaluation point. Exact recovery shows
    the masks carry all the uncertainty a z-coalition faces.
    """
    modulus = as_modulus(q)
    if len(tasks) != z or len({t.worker for t in tasks}) != z:
        raise SchemeError(f"need exactly {z} tasks from distinct workers")
    d = len(a_tildes)
    nodes = InterpolationNodes(list(alphas)[:z + d], modulus)
    basis = basis_values(nodes, [betas[t.worker] for t in tasks])
    inv = solve_scalar_system([[int(v) for v in row[:z]] for row in basis], modulus.q)

    def solve(evals, data):
        residuals = [e - linear_combination([int(v) for v in row[z:]], list(data))
                     for e, row in zip(evals, basis)]
        return [linear_combination(coeffs, residuals) for coeffs in inv]

    return (solve([t.f_eval for t in tasks], a_tildes),
            solve([t.g_eval for t in tasks], b_tildes))


# -- clustering --------------------------------------------------------------------

@dataclass
class ResponseTimeTracker:
    """Exponential moving average of each worker's observed response time."""

    smoothing: float = 0.5
    estimates: dict[int, float] = field(default_factory=dict)

    def update(self, worker: int, observed: float) -> None:
        prev = self.estimates.get(worker)
        self.estimates[worker] = observed if prev is None else (
            self.smoothing * observed + (1 - self.smoothing) * prev)

    def __bool__(self):
        return bool(self.estimates)


def recluster(history: Optional[Mapping[int, float]], workers: Sequence[int], z: int,
              c: int) -> list[list[int]]:
    """Group workers with similar response times, fastest group first.

    With no history every worker forms one cluster. Otherwise workers are
    sorted by estimated response time and cut into ``c`` contiguous groups
    minimising within-group squared deviation, subject to the size limits
    (first group >= 2z + 1, others >= z + 1). Ties prefer balanced groups.
    """
    workers = list(workers)
    n = len(workers)
    if not history:
        if n < 2 * z + 1:
            raise SchemeError(f"need >= {2 * z + 1} workers, have {n}")
        return [workers]
    missing = [w for w in workers if w not in history]
    if missing:
        raise SchemeError(f"no response-time estimate for workers {missing}")
    if n < 2 * z + 1 + (c - 1) * (z + 1):
        raise SchemeError(f"{n} workers cannot form {c} clusters with z={z}")
    order = sorted(workers, key=lambda w: (history[w], w))
    times = np.array([history[w] for w in order], dtype=float)
    prefix = np.concatenate([[0.0], np.cumsum(times)])
    prefix2 = np.concatenate([[0.0], np.cumsum(times ** 2)])

    def sse(i, j):
        cnt = j - i
        s = prefix[j] - prefix[i]
        return prefix2[j] - prefix2[i] - s * s / cnt

    ideal = n / c
    inf = (float("inf"), float("inf"))
    # best[g][j]: (cost, imbalance) splitting order[:j] into g groups
    best = [[inf] * (n + 1) for _ in range(c + 1)]
    cut = [[0] * (n + 1) for _ in range(c + 1)]
    best[0][0] = (0.0, 0.0)
    for g in range(1, c + 1):
        min_size = 2 * z + 1 if g == 1 else z + 1
        for j in range(1, n + 1):
            for i in range(0, j - min_size + 1):
                prev = best[g - 1][i]
                if prev == inf:
                    continue
                cost = prev[0] + sse(i, j)
                cand = (round(cost, 9), prev[1] + (j - i - ideal) ** 2)
                if cand < best[g][j]:
                    best[g][j] = cand
                    cut[g][j] = i
    if best[c][n] == inf:
        raise SchemeError("cluster size constraints unsatisfiable")
    bounds, j = [], n
    for g in range(c, 0, -1):
        i = cut[g][j]
        bounds.append((i, j))
        j = i
    return [order[i:j] for i, j in reversed(bounds)]
