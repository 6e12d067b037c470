"""Simulated worker timing and behaviour."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

BEHAVIOR_KINDS = (
    "honest",
    "straggler",
    "single_random_error",
    "all_random_error",
    "single_rank1_error",
    "all_rank1_error",
    "coordinated_rank1_error",
    "observation1_attack",
)

# error each corrupting kind adds to the worker's own response
WORKER_ERROR = {
    "single_random_error": "random",
    "all_random_error": "random",
    "single_rank1_error": "rank1",
    "all_rank1_error": "rank1",
    "coordinated_rank1_error": "coordinated",
}


@dataclass(frozen=True)
class BehaviorSpec:
    kind: str = "honest"
    delay_factor: float = 1.0
    num_colluders: int = 2
    revealed_points: bool = True
    rounds: Optional[frozenset] = None
    probability: float = 1.0

    def __post_init__(self):
        if self.kind not in BEHAVIOR_KINDS:
            raise ValueError(f"unknown behaviour {self.kind!r}")
        if self.delay_factor <= 0:
            raise ValueError("delay_factor must be positive")
        if self.rounds is not None:
            object.__setattr__(self, "rounds", frozenset(self.rounds))

    def active(self, t: int, rng: np.random.Generator) -> bool:
        if self.kind == "honest":
            return False
        if self.rounds is not None and t not in self.rounds:
            return False
        return self.probability >= 1.0 or rng.random() < self.probability

    @property
    def corrupts(self) -> bool:
        return self.kind in WORKER_ERROR


@dataclass(frozen=True)
class WorkerProfile:
    """Shifted-exponential response time: half the mean is a fixed shift."""

    index: int
    mean_response: float = 1.0
    jitter: float = 0.0
    drift_per_round: float = 1.0
    behavior: BehaviorSpec = field(default_factory=BehaviorSpec)

    def __post_init__(self):
        if self.mean_response <= 0:
            raise ValueError("mean_response must be positive")
        if self.jitter < 0 or self.drift_per_round <= 0:
            raise ValueError("jitter must be >= 0 and drift positive")

    def sample_time(self, t: int, rng: np.random.Generator) -> float:
        mean = self.mean_response * self.drift_per_round ** (t - 1)
        shift = 0.5 * mean
        out = shift + rng.exponential(mean - shift)
        if self.jitter:
            out += rng.uniform(0.0, self.jitter)
        if self.behavior.kind == "straggler" and self.behavior.active(t, rng):
            out *= self.behavior.delay_factor
        return float(out)


def profile_from_dict(d: dict) -> WorkerProfile:
    beh = dict(d.get("behavior", {}))
    if "rounds" in beh and beh["rounds"] is not None:
        beh["rounds"] = frozenset(beh["rounds"])
    return WorkerProfile(index=int(d["index"]),
                         mean_response=float(d.get("mean_response", 1.0)),
                         jitter=float(d.get("jitter", 0.0)),
                         drift_per_round=float(d.get("drift_per_round", 1.0)),
                         behavior=BehaviorSpec(**beh))
