"""Shared oracles for the test-suite."""

from collections import Counter
from itertools import permutations, product

from securematmul.field import PrimeModulus
from securematmul.fountain import FountainSymbolSpec
from securematmul.matgf import FqMatrix, random_matrix
from securematmul.scheme import (RoundPlan, SchemeParams, encode_tasks, plan_round,
                                 recover_masks_from_tasks)


def task_view_histogram(a: int, b: int, q: int = 5) -> Counter:
    """Distribution of worker 0's task over every choice of points and masks.

    Single cluster, n=2, z=1, d=1, scalar blocks. Each outcome is equally
    likely, so the counter is the exact distribution up to normalisation.
    """
    mod = PrimeModulus(q)
    A, B = FqMatrix([[a]], mod), FqMatrix([[b]], mod)
    spec = ((FountainSymbolSpec({0}, {0}),),)
    hist = Counter()
    for a1, a2, b1, b2 in permutations(range(q), 4):
        for r, s in product(range(q), repeat=2):
            plan = RoundPlan(t=1, clusters=((0, 1),), degrees=(1,), alphas=(a1, a2),
                             betas=(b1, b2), masks_R=(FqMatrix([[r]], mod),),
                             masks_S=(FqMatrix([[s]], mod),), specs=spec, z=1, modulus=mod)
            tasks, _ = encode_tasks(plan, [A], [B])
            hist[(int(tasks[0].f_eval.array[0, 0]), int(tasks[0].g_eval.array[0, 0]))] += 1
    return hist


def mask_recovery_trial(rng, q: int) -> bool:
    """Random geometry; any z tasks plus the private points pin down the masks."""
    z = int(rng.integers(1, 4))
    n = 2 * z + 1 + int(rng.integers(0, 6))
    m, k = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    r, s, l = (int(v) for v in rng.integers(1, 4, size=3))
    params = SchemeParams(n=n, z=z, c=1, m=m, k=k, r=r, s=s, l=l, q=q)
    plan = plan_round(rng, params, [list(range(n))])
    a = [random_matrix(rng, r, s, q) for _ in range(m)]
    b = [random_matrix(rng, s, l, q) for _ in range(k)]
    tasks, (enc,) = encode_tasks(plan, a, b)
    pick = [tasks[int(i)] for i in rng.choice(n, size=z, replace=False)]
    betas = {w: plan.betas[w] for w in range(n)}
    R, S = recover_masks_from_tasks(pick, plan.alphas, betas, enc.a_tildes, enc.b_tildes,
                                    z, q)
    return list(R) == list(plan.masks_R) and list(S) == list(plan.masks_S)
