"""Experiment drivers: missed-detection rates, check overhead, full runs."""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import asdict, dataclass, field
from multiprocessing import Pool
from typing import Optional, Sequence

import numpy as np

from ..field import PrimeModulus, as_modulus, largest_prime_below, make_rng
from ..fountain import DecoderInconsistency, PeelingDecoder, SolitonParams
from ..matgf import (FqMatrix, crop, matmul, pad_to_multiple, random_matrix,
                     random_rank1_matrix, split_cols, split_rows)
from ..scheme import (ClusterStarved, ResponseTimeTracker, SchemeError, SchemeParams,
                      WorkerResponse, decode_cluster, decode_cluster_excluding,
                      encode_tasks, honest_response, max_cluster_degree, plan_round,
                      recluster, required_responses)
from ..security import (cluster_check, cluster_check_public_gamma, identify_malicious,
                        worker_check)
from .errors import error_matrices, guess_points, model_name, observation1_attack
from .workers import WORKER_ERROR, WorkerProfile

log = logging.getLogger(__name__)

CHUNK_TRIALS = 1000


@dataclass
class TrialStats:
    """Counters for a batch of simulated rounds.

    ``corrupted_rounds`` counts rounds in which the adversary was active;
    ``null_error_rounds`` is the subset where the drawn error happened to be
    zero. ``missed_detections`` counts active rounds that passed the check.
    """

    trials: int = 0
    corrupted_rounds: int = 0
    missed_detections: int = 0
    false_positives: int = 0
    null_error_rounds: int = 0
    corrupted_outputs: int = 0
    per_worker_flags: dict = field(default_factory=dict)
    coding_time: float = 0.0
    check_time: float = 0.0

    @property
    def miss_rate(self) -> float:
        return self.missed_detections / self.trials if self.trials else float("nan")

    def merge(self, other: "TrialStats") -> "TrialStats":
        flags = dict(self.per_worker_flags)
        for w, cnt in other.per_worker_flags.items():
            flags[w] = flags.get(w, 0) + cnt
        return TrialStats(
            trials=self.trials + other.trials,
            corrupted_rounds=self.corrupted_rounds + other.corrupted_rounds,
            missed_detections=self.missed_detections + other.missed_detections,
            false_positives=self.false_positives + other.false_positives,
            null_error_rounds=self.null_error_rounds + other.null_error_rounds,
            corrupted_outputs=self.corrupted_outputs + other.corrupted_outputs,
            per_worker_flags=flags,
            coding_time=self.coding_time + other.coding_time,
            check_time=self.check_time + other.check_time,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["miss_rate"] = self.miss_rate
        return d


# -- missed-detection experiment ----------------------------------------------------

@dataclass(frozen=True)
class DetectionConfig:
    q: int
    n_u: int = 3
    z: int = 1
    r: int = 2
    s: int = 2
    l: int = 2
    error_model: str = "coordinated_rank1"
    eta: int = 1
    trials: int = 10_000
    seed: int = 0
    degree: Optional[int] = None
    check: str = "private"  # or "public"
    attack: Optional[str] = None  # "observation1"
    num_colluders: int = 2
    leak: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.check not in ("private", "public"):
            raise ValueError(f"unknown check {self.check!r}")
        if self.attack not in (None, "observation1"):
            raise ValueError(f"unknown attack {self.attack!r}")
        if self.attack is None:
            model_name(self.error_model)
        d_max = max_cluster_degree(self.n_u, self.z, 0)
        d = self.degree if self.degree is not None else d_max
        if not 1 <= d <= d_max:
            raise SchemeError(f"degree {d} outside [1, {d_max}] for n_u={self.n_u}")
        if self.attack == "observation1" and d < 2:
            raise SchemeError("the observation-1 attack needs d_u >= 2")
        as_modulus(self.q)

    @property
    def d(self) -> int:
        return self.degree if self.degree is not None else max_cluster_degree(
            self.n_u, self.z, 0)

    @property
    def deg_h(self) -> int:
        return 2 * self.d + 2 * self.z - 2

    @property
    def attacked(self) -> bool:
        return self.attack is not None or model_name(self.error_model) != "honest"


def detection_trial(cfg: DetectionConfig, params: SchemeParams,
                    rng: np.random.Generator) -> tuple[bool, bool, bool, bool]:
    """One single-cluster round: (attacked, error_was_zero, check_passed, output_corrupted)."""
    q = params.q
    clusters = [list(range(cfg.n_u))]
    plan = plan_round(rng, params, clusters, degrees=[cfg.d])
    a = [random_matrix(rng, cfg.r, cfg.s, q)]
    b = [random_matrix(rng, cfg.s, cfg.l, q)]
    tasks, (enc,) = encode_tasks(plan, a, b)
    honest = [t.f_eval @ t.g_eval for t in tasks]
    used = required_responses(0, cfg.d, cfg.z)
    evals = list(honest)
    if cfg.attack == "observation1":
        if cfg.leak:
            alphas, betas = plan.alphas, [plan.betas[t.worker] for t in tasks]
        else:
            alphas, betas = guess_points(rng, q.q, len(plan.alphas), cfg.n_u)
        colluders = list(range(cfg.num_colluders))
        for i, v in observation1_attack(alphas, betas, cfg.z, cfg.d, honest, colluders,
                                        rng).items():
            evals[i] = v
    else:
        errs = error_matrices(cfg.error_model, used, honest[0].shape, q, rng)
        for i, e in enumerate(errs):
            if e is not None:
                evals[i] = evals[i] + e
    responses = [WorkerResponse(t.worker, 1, 0, h, float(i))
                 for i, (t, h) in enumerate(zip(tasks, evals))]
    dec = decode_cluster(plan, 0, responses)
    zero_error = all(e == h for e, h in zip(evals[:used], honest[:used]))
    truth = [at @ bt for at, bt in zip(enc.a_tildes, enc.b_tildes)]
    output_bad = any(c != t for c, t in zip(dec.c_tildes, truth))
    if cfg.check == "public":
        outcome = cluster_check_public_gamma(enc.F, enc.G, dec.H, rng)
    else:
        known = dict(zip(plan.data_points(0), dec.c_tildes))
        outcome = cluster_check(plan, 0, dec.H, enc, rng, cfg.eta, known_h=known)
    return cfg.attacked, zero_error, outcome.passed, output_bad


def _detection_chunk(args) -> TrialStats:
    cfg, seed_seq, count = args
    rng = np.random.default_rng(seed_seq)
    params = SchemeParams(n=cfg.n_u, z=cfg.z, c=1, m=1, k=1, r=cfg.r, s=cfg.s, l=cfg.l,
                          q=cfg.q)
    stats = TrialStats()
    for _ in range(count):
        attacked, zero_error, passed, output_bad = detection_trial(cfg, params, rng)
        stats.trials += 1
        stats.corrupted_outputs += output_bad
        if attacked:
            stats.corrupted_rounds += 1
            stats.null_error_rounds += zero_error
            stats.missed_detections += passed
        elif not passed:
            stats.false_positives += 1
    return stats


def run_detection_experiment(cfg: DetectionConfig) -> TrialStats:
    """Missed-detection counts over ``cfg.trials`` independent fresh rounds.

    Trials are split into fixed-size chunks with spawned seeds, so results do
    not depend on ``cfg.threads``.
    """
    nchunks = -(-cfg.trials // CHUNK_TRIALS)
    seeds = np.random.SeedSequence(cfg.seed).spawn(nchunks)
    jobs = [(cfg, s, min(CHUNK_TRIALS, cfg.trials - i * CHUNK_TRIALS))
            for i, s in enumerate(seeds)]
    if cfg.threads > 1 and nchunks > 1:
        with Pool(cfg.threads) as pool:
            parts = pool.map(_detection_chunk, jobs)
    else:
        parts = [_detection_chunk(j) for j in jobs]
    total = TrialStats()
    for p in parts:
        total = total.merge(p)
    return total


# -- overhead experiment -------------------------------------------------------------

def overhead_prime() -> int:
    """Largest prime below 2^62 with 2^10 | q - 1."""
    return largest_prime_below(1 << 62, 1 << 10)


@dataclass(frozen=True)
class OverheadConfig:
    dims: int = 64
    cluster_sizes: tuple = (4, 8, 16, 32, 64, 128, 256)
    z: int = 1
    q: Optional[int] = None
    reps: int = 10
    seed: int = 0


@dataclass
class OverheadRow:
    n_u: int
    dims: int
    per_cluster_ratio: float
    per_worker_ratio: float
    coding_time: float
    cluster_check_time: float
    worker_check_time: float


def run_overhead_experiment(cfg: OverheadConfig) -> list[OverheadRow]:
    """CPU-time ratio of the checks to Lagrange encoding plus decoding.

    Each cluster size is measured ``reps`` times (at least 10 are advised)
    and the per-repetition ratios are summarised by their median.
    """
    q = PrimeModulus(cfg.q if cfg.q is not None else overhead_prime())
    rng = make_rng(cfg.seed)
    clock = time.process_time
    rows = []
    for n_u in cfg.cluster_sizes:
        params = SchemeParams(n=n_u, z=cfg.z, c=1, m=1, k=1, r=cfg.dims, s=cfg.dims,
                              l=cfg.dims, q=q)
        cluster_ratios, worker_ratios = [], []
        coding, c_check, w_check = [], [], []
        for _ in range(cfg.reps):
            a = [random_matrix(rng, cfg.dims, cfg.dims, q)]
            b = [random_matrix(rng, cfg.dims, cfg.dims, q)]
            plan = plan_round(rng, params, [list(range(n_u))])
            t0 = clock()
            tasks, (enc,) = encode_tasks(plan, a, b)
            t1 = clock()
            responses = [honest_response(t, float(i)) for i, t in enumerate(tasks)]
            t2 = clock()
            dec = decode_cluster(plan, 0, responses)
            t3 = clock()
            known = dict(zip(plan.data_points(0), dec.c_tildes))
            ok = cluster_check(plan, 0, dec.H, enc, rng, 1, known_h=known).passed
            t4 = clock()
            by_worker = {t.worker: t for t in tasks}
            used = [r for r in responses if r.worker in set(dec.used_workers)]
            ok &= all(worker_check(by_worker[r.worker], r, rng) for r in used)
            t5 = clock()
            if not ok:
                raise AssertionError("honest overhead round failed a check")
            code_t = (t1 - t0) + (t3 - t2)
            coding.append(code_t)
            c_check.append(t4 - t3)
            w_check.append(t5 - t4)
            cluster_ratios.append((t4 - t3) / code_t)
            worker_ratios.append((t5 - t4) / code_t)
        rows.append(OverheadRow(n_u, cfg.dims, statistics.median(cluster_ratios),
                                statistics.median(worker_ratios), statistics.median(coding),
                                statistics.median(c_check), statistics.median(w_check)))
        log.info("overhead n_u=%d: %s", n_u, rows[-1])
    return rows


# -- full scheme ------------------------------------------------------------------------

class RunFailed(RuntimeError):
    """The run could not finish; ``decoder`` holds the partial state."""

    def __init__(self, message: str, decoder: PeelingDecoder, result: "FullRunResult"):
        super().__init__(message)
        self.decoder = decoder
        self.result = result


@dataclass
class FullRunConfig:
    A: FqMatrix
    B: FqMatrix
    n: int
    z: int = 1
    c: int = 2
    m: int = 2
    k: int = 2
    profiles: Sequence[WorkerProfile] = ()
    rounds_budget: int = 200
    eta: int = 1
    seed: int = 0
    slack: int = 0
    timeout: Optional[float] = None
    smoothing: float = 0.5
    check: str = "private"
    soliton: SolitonParams = SolitonParams()


@dataclass
class FullRunResult:
    product: Optional[FqMatrix] = None
    rounds_used: int = 0
    detections: int = 0
    missed_detections: int = 0
    flagged_workers: set = field(default_factory=set)
    starved_clusters: int = 0
    quarantined_rounds: int = 0
    corrupted_uses: dict = field(default_factory=dict)
    stats: TrialStats = field(default_factory=TrialStats)


def _cluster_count(active: int, z: int, c: int) -> int:
    while c > 1 and active < 2 * z + 1 + (c - 1) * (z + 1):
        c -= 1
    return c


def run_full_scheme(cfg: FullRunConfig) -> FullRunResult:
    """Run rounds until every product block is decoded or the budget runs out.

    Per round: plan, encode, simulate timed and possibly corrupted responses,
    decode each cluster from its fastest responses, run the cluster check and
    on failure flag workers individually, drop them, and re-decode from the
    spare responses. Flagged workers take no further part.
    """
    q = cfg.A.modulus
    if cfg.B.modulus != q:
        raise SchemeError("A and B use different moduli")
    if cfg.A.cols != cfg.B.rows:
        raise SchemeError(f"cannot multiply {cfg.A.shape} by {cfg.B.shape}")
    rng = make_rng(cfg.seed)
    A = pad_to_multiple(cfg.A, row_mult=cfg.m)
    B = pad_to_multiple(cfg.B, col_mult=cfg.k)
    a_blocks, b_blocks = split_rows(A, cfg.m), split_cols(B, cfg.k)
    r, s = a_blocks[0].shape
    l = b_blocks[0].shape[1]
    params = SchemeParams(n=cfg.n, z=cfg.z, c=cfg.c, m=cfg.m, k=cfg.k, r=r, s=s, l=l, q=q)
    profiles = {p.index: p for p in cfg.profiles}
    profiles = [profiles.get(i, WorkerProfile(i)) for i in range(cfg.n)]

    tracker = ResponseTimeTracker(cfg.smoothing)
    decoder = PeelingDecoder(cfg.m, cfg.k)
    result = FullRunResult()
    flag_counts: dict[int, int] = {}

    for t in range(1, cfg.rounds_budget + 1):
        result.rounds_used = t
        active = [w for w in range(cfg.n) if w not in result.flagged_workers]
        if len(active) < 2 * cfg.z + 1:
            raise RunFailed(f"only {len(active)} unflagged workers remain", decoder, result)
        if t == 1 or not tracker:
            clusters = recluster(None, active, cfg.z, cfg.c)
        else:
            clusters = recluster(tracker.estimates, active, cfg.z,
                                 _cluster_count(len(active), cfg.z, cfg.c))
        plan = plan_round(rng, params, clusters, t=t, slack=cfg.slack, soliton=cfg.soliton)
        t0 = time.process_time()
        tasks, encodings = encode_tasks(plan, a_blocks, b_blocks)
        result.stats.coding_time += time.process_time() - t0
        task_of = {tk.worker: tk for tk in tasks}

        responses, corrupted = _simulate_responses(plan, tasks, profiles, cfg, rng)
        for resp in responses:
            observed = resp.arrival_time if cfg.timeout is None else min(
                resp.arrival_time, cfg.timeout)
            tracker.update(resp.worker, observed)
        if cfg.timeout is not None:
            responses = [x for x in responses if x.arrival_time <= cfg.timeout]

        snapshot = decoder.copy()
        symbols = []
        shared = None
        for u, members in enumerate(plan.clusters):
            resp_u = [x for x in responses if x.cluster == u]
            accepted = _decode_and_verify(plan, u, resp_u, shared, encodings[u], task_of,
                                          corrupted, cfg, rng, result, flag_counts)
            if accepted is None:
                continue
            if u == 0:
                shared = accepted.mask_evals
            symbols.extend(zip(plan.specs[u], accepted.c_tildes))

        try:
            for spec, value in symbols:
                decoder.feed(spec, value)
        except DecoderInconsistency:
            decoder.restore(snapshot)
            result.quarantined_rounds += 1
            result.detections += 1
        if decoder.is_complete():
            product = decoder.decoded_product()
            result.product = crop(product, cfg.A.rows, cfg.B.cols)
            break
    result.stats.per_worker_flags = flag_counts
    result.stats.trials = result.rounds_used
    if result.product is None:
        raise RunFailed(f"round budget of {cfg.rounds_budget} exhausted", decoder, result)
    return result


def _simulate_responses(plan, tasks, profiles, cfg: FullRunConfig, rng):
    q = plan.modulus
    shape = tasks[0].f_eval.rows, tasks[0].g_eval.cols
    shared_rank1 = None
    responses, corrupted = [], set()
    attackers: dict[int, list[int]] = {}
    for tk in tasks:
        prof = profiles[tk.worker]
        arrival = prof.sample_time(plan.t, rng)
        h = tk.f_eval @ tk.g_eval
        beh = prof.behavior
        if beh.corrupts and beh.active(plan.t, rng):
            kind = WORKER_ERROR[beh.kind]
            if kind == "random":
                err = error_matrices("single_random", 1, shape, q, rng)[0]
            elif kind == "rank1":
                err = random_rank1_matrix(rng, *shape, q)
            else:
                if shared_rank1 is None:
                    shared_rank1 = random_rank1_matrix(rng, *shape, q)
                err = shared_rank1.scale(int(rng.integers(0, q.q)))
            if not err.is_zero():
                corrupted.add(tk.worker)
            h = h + err
        elif beh.kind == "observation1_attack" and beh.active(plan.t, rng):
            attackers.setdefault(tk.cluster, []).append(tk.worker)
        responses.append(WorkerResponse(tk.worker, tk.round, tk.cluster, h, arrival))

    for u, workers in attackers.items():
        if len(workers) < 2:
            continue
        members = list(plan.clusters[u])
        pos = {w: i for i, w in enumerate(members)}
        idx = [i for i, x in enumerate(responses) if x.cluster == u]
        honest = [responses[i].h_eval for i in idx]
        beh = profiles[workers[0]].behavior
        if beh.revealed_points:
            alphas, betas = plan.alphas, [plan.betas[w] for w in members]
        else:
            alphas, betas = guess_points(rng, q.q, len(plan.alphas), len(members))
        colluders = [pos[w] for w in workers][:plan.degrees[u] + plan.z]
        if plan.degrees[u] < 2 and len(colluders) > 1 + plan.z:
            colluders = colluders[:1 + plan.z]
        try:
            shifted = observation1_attack(alphas, betas, plan.z, plan.degrees[u], honest,
                                          colluders, rng)
        except ValueError:
            continue
        for i, v in shifted.items():
            x = responses[idx[i]]
            responses[idx[i]] = WorkerResponse(x.worker, x.round, x.cluster, v, x.arrival_time)
            if v != honest[i]:
                corrupted.add(x.worker)
    return responses, corrupted


def _decode_and_verify(plan, u, resp_u, shared, enc, task_of, corrupted, cfg, rng,
                       result: FullRunResult, flag_counts):
    excluded: set[int] = set()
    while True:
        try:
            dec = decode_cluster_excluding(plan, u, resp_u, excluded, shared)
        except ClusterStarved:
            result.starved_clusters += 1
            return None
        for w in dec.used_workers:
            if w in corrupted and w not in result.flagged_workers:
                result.corrupted_uses[w] = result.corrupted_uses.get(w, 0) + 1
        t0 = time.process_time()
        if cfg.check == "public":
            outcome = cluster_check_public_gamma(enc.F, enc.G, dec.H, rng)
        else:
            known = dict(zip(plan.data_points(u), dec.c_tildes))
            outcome = cluster_check(plan, u, dec.H, enc, rng, cfg.eta, known_h=known)
        result.stats.check_time += time.process_time() - t0
        if outcome.passed:
            if corrupted.intersection(dec.used_workers):
                result.missed_detections += 1
                result.stats.missed_detections += 1
            return dec
        result.detections += 1
        result.stats.corrupted_rounds += 1
        pool = [x for x in resp_u if x.worker not in excluded]
        flagged = identify_malicious([task_of[x.worker] for x in pool], pool, rng)
        for w in flagged:
            flag_counts[w] = flag_counts.get(w, 0) + 1
            if w not in corrupted:
                result.stats.false_positives += 1
        if not flagged:
            # Corruption did not come from this cluster's responses (e.g. bad
            # shared mask evaluations); drop the cluster for this round.
            return None
        result.flagged_workers |= flagged
        excluded |= flagged
