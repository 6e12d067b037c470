"""Secure, straggler-tolerant distributed matrix multiplication over F_q.

Lagrange-coded tasks with random masks keep inputs private from up to ``z``
colluding workers, a factored fountain code lets clusters of heterogeneous
speed contribute to the product, and Freivalds-style checks catch workers
that return wrong results.
"""

from .field import FieldElement, PrimeModulus, is_prime, largest_prime_below
from .fountain import PeelingDecoder, SolitonParams
from .matgf import FqMatrix, random_matrix, read_matrix, write_matrix
from .scheme import (ClusterStarved, SchemeError, SchemeParams, decode_cluster,
                     encode_tasks, plan_round, recluster)
from .security import (bound_public_gamma, bound_repeated_distinct, bound_repeated_iid,
                        bound_single, cluster_check, freivalds, identify_malicious)

__version__ = "0.1.0"

__all__ = [
    "FieldElement", "PrimeModulus", "is_prime", "largest_prime_below",
    "PeelingDecoder", "SolitonParams",
    "FqMatrix", "random_matrix", "read_matrix", "write_matrix",
    "ClusterStarved", "SchemeError", "SchemeParams", "decode_cluster", "encode_tasks",
    "plan_round", "recluster",
    "bound_public_gamma", "bound_repeated_distinct", "bound_repeated_iid", "bound_single",
    "cluster_check", "freivalds", "identify_malicious",
]
