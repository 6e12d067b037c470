import math

import numpy as np
import pytest

from securematmul.field import largest_prime_below, make_rng
from securematmul.fountain import PeelingDecoder
from securematmul.matgf import FqMatrix, random_matrix, rank
from securematmul.scheme import (SchemeParams, WorkerResponse, decode_cluster,
                                 encode_tasks, plan_round)
from securematmul.security import cluster_check
from securematmul.sim.errors import (ERROR_MODELS, apply_error_model, error_matrices,
                                     model_name, observation1_attack)
from securematmul.sim.experiments import (DetectionConfig, FullRunConfig, OverheadConfig,
                                          RunFailed, TrialStats, run_detection_experiment,
                                          run_full_scheme, run_overhead_experiment)
from securematmul.sim.workers import BehaviorSpec, WorkerProfile, profile_from_dict

Q61 = largest_prime_below(1 << 61)


def test_model_names():
    assert model_name(5) == "coordinated_rank1"
    assert model_name("2") == "all_random"
    with pytest.raises(ValueError):
        model_name("nope")
    with pytest.raises(ValueError):
        model_name(9)


def test_error_models_shape():
    rng = make_rng(0)
    honest = [random_matrix(rng, 2, 3, 11) for _ in range(3)]
    assert apply_error_model("honest", honest, rng) == honest
    for _ in range(50):
        out = apply_error_model("single_random", honest, rng)
        assert sum(o != h for o, h in zip(out, honest)) == 1
        errs = error_matrices("all_rank1", 3, (2, 3), 11, rng)
        assert all(rank(e) == 1 for e in errs)
        errs = error_matrices("all_random", 3, (2, 3), 11, rng)
        assert all(not e.is_zero() for e in errs)
        errs = [e for e in error_matrices("coordinated_rank1", 3, (2, 3), 11, rng)
                if not e.is_zero()]
        if errs:
            stacked = FqMatrix(np.vstack([e.array for e in errs]), 11)
            assert rank(stacked) == 1


def test_coordinated_scalars_include_zero():
    rng = make_rng(1)
    zeros = sum(e.is_zero() for _ in range(700)
                for e in error_matrices("coordinated_rank1", 1, (1, 1), 7, rng))
    assert 60 < zeros < 140  # about 1/7 of draws


def _attack_setup(rng, q=101, n=5):
    p = SchemeParams(n=n, z=1, c=1, m=1, k=1, r=2, s=2, l=2, q=q)
    plan = plan_round(rng, p, [list(range(n))])
    tasks, (enc,) = encode_tasks(plan, [random_matrix(rng, 2, 2, q)],
                                 [random_matrix(rng, 2, 2, q)])
    honest = [t.f_eval @ t.g_eval for t in tasks]
    return plan, tasks, enc, honest


def test_observation1_attack_passes_and_corrupts():
    rng = make_rng(2)
    for _ in range(200):
        plan, tasks, enc, honest = _attack_setup(rng)
        shifted = observation1_attack(plan.alphas, plan.betas, 1, plan.degrees[0], honest,
                                      [0, 1], rng)
        evals = [shifted.get(i, h) for i, h in enumerate(honest)]
        responses = [WorkerResponse(t.worker, 1, 0, e, float(i))
                     for i, (t, e) in enumerate(zip(tasks, evals))]
        dec = decode_cluster(plan, 0, responses)
        assert cluster_check(plan, 0, dec.H, enc, rng, 1).passed
        truth = [a @ b for a, b in zip(enc.a_tildes, enc.b_tildes)]
        assert dec.c_tildes[0] == truth[0]
        assert dec.c_tildes[1] != truth[1]


def test_observation1_attack_errors():
    rng = make_rng(3)
    plan, _, _, honest = _attack_setup(rng)
    with pytest.raises(ValueError):
        observation1_attack(plan.alphas, plan.betas, 1, 2, honest, [0], rng)
    with pytest.raises(ValueError):
        observation1_attack(plan.alphas, plan.betas, 1, 2, honest, [0, 0], rng)
    with pytest.raises(ValueError):
        observation1_attack(plan.alphas, plan.betas, 1, 2, honest, [0, 1, 2, 3], rng)


def test_detection_deterministic_and_thread_invariant():
    cfg = DetectionConfig(q=7, trials=2500, seed=4)
    a = run_detection_experiment(cfg)
    b = run_detection_experiment(cfg)
    c = run_detection_experiment(DetectionConfig(q=7, trials=2500, seed=4, threads=2))
    assert a == b == c
    assert a.trials == 2500 and a.corrupted_rounds == 2500


def test_detection_honest_no_false_positives():
    for q, n_u, z in ((7, 3, 1), (101, 6, 2), (Q61, 9, 1)):
        for eta in (1, 2):
            stats = run_detection_experiment(DetectionConfig(
                q=q, n_u=n_u, z=z, error_model="honest", eta=eta, trials=300, seed=q))
            assert stats.false_positives == 0 and stats.missed_detections == 0


def test_detection_config_validation():
    with pytest.raises(ValueError):
        DetectionConfig(q=7, trials=0)
    with pytest.raises(ValueError):
        DetectionConfig(q=7, n_u=3, degree=2)
    with pytest.raises(ValueError):
        DetectionConfig(q=7, n_u=3, attack="observation1")
    with pytest.raises(ValueError):
        DetectionConfig(q=8)


def test_trial_stats_merge():
    a = TrialStats(trials=2, missed_detections=1, per_worker_flags={0: 1})
    b = TrialStats(trials=3, missed_detections=0, per_worker_flags={0: 2, 1: 1})
    m = a.merge(b)
    assert m.trials == 5 and m.miss_rate == pytest.approx(0.2)
    assert m.per_worker_flags == {0: 3, 1: 1}
    assert math.isnan(TrialStats().miss_rate)


def test_overhead_smoke():
    rows = run_overhead_experiment(OverheadConfig(dims=1, cluster_sizes=(4,), reps=10))
    (row,) = rows
    assert row.n_u == 4
    for v in (row.per_cluster_ratio, row.per_worker_ratio):
        assert math.isfinite(v) and v > 0


def test_worker_profiles():
    rng = make_rng(5)
    p = WorkerProfile(0, mean_response=2.0)
    times = [p.sample_time(1, rng) for _ in range(5000)]
    assert min(times) >= 1.0 and abs(np.mean(times) - 2.0) < 0.1
    slow = WorkerProfile(0, behavior=BehaviorSpec("straggler", delay_factor=10))
    assert min(slow.sample_time(1, rng) for _ in range(100)) >= 5.0
    drift = WorkerProfile(0, drift_per_round=2.0)
    assert drift.sample_time(3, rng) >= 2.0
    once = BehaviorSpec("all_random_error", rounds=[2])
    assert not once.active(1, rng) and once.active(2, rng)
    d = profile_from_dict({"index": 3, "mean_response": 1.5,
                           "behavior": {"kind": "straggler", "rounds": [1, 2]}})
    assert d.index == 3 and d.behavior.rounds == frozenset({1, 2})
    with pytest.raises(ValueError):
        BehaviorSpec("sleepy")


def _mats(seed, q, r=6, s=5, l=7):
    rng = make_rng(seed)
    return random_matrix(rng, r, s, q), random_matrix(rng, s, l, q)


def test_full_scheme_honest():
    A, B = _mats(0, 101)
    res = run_full_scheme(FullRunConfig(A=A, B=B, n=6, z=1, c=2, m=2, k=2, seed=1))
    assert res.product == A @ B
    assert res.detections == 0 and not res.flagged_workers
    assert res.stats.false_positives == 0


def test_full_scheme_flags_persistent_worker():
    A, B = _mats(1, Q61)
    profiles = [WorkerProfile(i) for i in range(8)]
    profiles[0] = WorkerProfile(0, mean_response=0.5, behavior=BehaviorSpec("all_random_error"))
    res = run_full_scheme(FullRunConfig(A=A, B=B, n=8, z=1, c=2, m=2, k=2,
                                        profiles=profiles, seed=2))
    assert res.product == A @ B
    assert res.flagged_workers == {0}
    assert res.corrupted_uses[0] <= 2
    assert res.missed_detections == 0


def test_full_scheme_all_straggle_round_retried():
    A, B = _mats(2, 101)
    profiles = [WorkerProfile(i, behavior=BehaviorSpec("straggler", delay_factor=100,
                                                       rounds=[1])) for i in range(6)]
    res = run_full_scheme(FullRunConfig(A=A, B=B, n=6, c=1, m=2, k=2, profiles=profiles,
                                        timeout=10.0, seed=3))
    assert res.product == A @ B
    assert res.starved_clusters >= 1


def test_full_scheme_budget_exhausted():
    A, B = _mats(3, 101)
    with pytest.raises(RunFailed, match="budget") as info:
        run_full_scheme(FullRunConfig(A=A, B=B, n=6, m=3, k=3, rounds_budget=1, seed=0))
    assert isinstance(info.value.decoder, PeelingDecoder)
    assert info.value.result.rounds_used == 1


def test_full_scheme_deterministic():
    A, B = _mats(4, Q61)
    profiles = [WorkerProfile(i, mean_response=1 + i / 3) for i in range(9)]
    profiles[4] = WorkerProfile(4, behavior=BehaviorSpec("coordinated_rank1_error"))
    profiles[5] = WorkerProfile(5, behavior=BehaviorSpec("coordinated_rank1_error"))
    cfg = FullRunConfig(A=A, B=B, n=9, c=3, m=3, k=2, profiles=profiles, seed=9)
    r1, r2 = run_full_scheme(cfg), run_full_scheme(cfg)
    assert r1.product == r2.product == A @ B
    assert (r1.rounds_used, r1.flagged_workers, r1.stats.per_worker_flags) == \
        (r2.rounds_used, r2.flagged_workers, r2.stats.per_worker_flags)


def test_errors_to_erasures():
    """Detection with spare honest responses always ends in exact recovery."""
    for seed in range(10):
        A, B = _mats(seed, Q61)
        profiles = [WorkerProfile(i) for i in range(9)]
        for w in (1, 2):
            profiles[w] = WorkerProfile(w, mean_response=0.3,
                                        behavior=BehaviorSpec("all_rank1_error"))
        res = run_full_scheme(FullRunConfig(A=A, B=B, n=9, c=1, m=2, k=2,
                                            profiles=profiles, seed=seed))
        assert res.detections >= 1 and res.flagged_workers == {1, 2}
        assert res.product == A @ B


def test_full_scheme_observation1_colluders_with_public_check():
    A, B = _mats(5, Q61)
    profiles = [WorkerProfile(i) for i in range(7)]
    for w in (0, 1):
        profiles[w] = WorkerProfile(w, mean_response=0.2,
                                    behavior=BehaviorSpec("observation1_attack"))
    res = run_full_scheme(FullRunConfig(A=A, B=B, n=7, c=1, m=2, k=2, profiles=profiles,
                                        check="public", seed=6))
    assert res.product == A @ B
    assert res.flagged_workers == {0, 1}


def test_full_scheme_rejects_bad_shapes():
    A, _ = _mats(6, 101)
    with pytest.raises(ValueError):
        run_full_scheme(FullRunConfig(A=A, B=A, n=6))
