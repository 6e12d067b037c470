"""Factored fountain code over the m x k grid of product blocks.

A symbol picks a subset of A-blocks and a subset of B-blocks; the product of
their sums is the sum of every covered C-block, so symbol products behave like
LT symbols over the grid and a peeling decoder recovers the blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .matgf import FqMatrix, assemble_blocks, sum_matrices


class DecoderInconsistency(ArithmeticError):
    """A fully reduced symbol had a nonzero residual."""


class DecoderIncomplete(RuntimeError):
    pass


@dataclass(frozen=True)
class SolitonParams:
    c: float = 0.1
    delta: float = 0.5


def robust_soliton_pmf(k: int, c: float = 0.1, delta: float = 0.5) -> np.ndarray:
    """Probabilities of degrees 1..k (index 0 is degree 1)."""
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        return np.ones(1)
    rho = np.array([1.0 / k] + [1.0 / (d * (d - 1)) for d in range(2, k + 1)])
    ripple = c * math.log(k / delta) * math.sqrt(k)
    tau = np.zeros(k)
    spike = int(k / ripple) if ripple > 0 else k + 1
    for d in range(1, k + 1):
        if d < spike:
            tau[d - 1] = ripple / (d * k)
        elif d == spike:
            tau[d - 1] = ripple * math.log(ripple / delta) / k
    mu = rho + np.maximum(tau, 0.0)
    return mu / mu.sum()


@dataclass(frozen=True)
class FountainSymbolSpec:
    """Covered A-block indices and B-block indices (0-based)."""

    a_set: frozenset
    b_set: frozenset

    def __init__(self, a_set, b_set):
        a, b = frozenset(int(i) for i in a_set), frozenset(int(j) for j in b_set)
        if not a or not b:
            raise ValueError("symbol subsets must be non-empty")
        if min(a) < 0 or min(b) < 0:
            raise ValueError("block indices must be non-negative")
        object.__setattr__(self, "a_set", a)
        object.__setattr__(self, "b_set", b)

    def cells(self) -> frozenset:
        return frozenset((i, j) for i in self.a_set for j in self.b_set)

    def check_grid(self, m: int, k: int) -> None:
        if max(self.a_set) >= m or max(self.b_set) >= k:
            raise ValueError(f"symbol {self} exceeds {m}x{k} grid")


def _sample_side(rng: np.random.Generator, n: int, params: SolitonParams) -> frozenset:
    pmf = robust_soliton_pmf(n, params.c, params.delta)
    degree = int(rng.choice(n, p=pmf)) + 1
    return frozenset(int(i) for i in rng.choice(n, size=degree, replace=False))


def sample_spec(rng: np.random.Generator, m: int, k: int,
                params: SolitonParams = SolitonParams()) -> FountainSymbolSpec:
    if m < 1 or k < 1:
        raise ValueError("grid dimensions must be positive")
    return FountainSymbolSpec(_sample_side(rng, m, params), _sample_side(rng, k, params))


def encode_block_sum(blocks: Sequence[FqMatrix], subset) -> FqMatrix:
    subset = sorted(subset)
    if not subset:
        raise ValueError("empty subset")
    return sum_matrices([blocks[i] for i in subset])


class PeelingDecoder:
    """Iterative decoder for symbols over the m x k grid of C-blocks."""

    def __init__(self, m: int, k: int):
        if m < 1 or k < 1:
            raise ValueError("grid dimensions must be positive")
        self.m = m
        self.k = k
        self.recovered: dict[tuple[int, int], FqMatrix] = {}
        # each entry: (unknown cells, residual)
        self.pending: list[tuple[frozenset, FqMatrix]] = []

    def copy(self) -> "PeelingDecoder":
        other = PeelingDecoder(self.m, self.k)
        other.recovered = dict(self.recovered)
        other.pending = list(self.pending)
        return other

    def restore(self, snapshot: "PeelingDecoder") -> None:
        self.recovered = dict(snapshot.recovered)
        self.pending = list(snapshot.pending)

    def is_complete(self) -> bool:
        return len(self.recovered) == self.m * self.k

    def _reduce(self, cells: frozenset, value: FqMatrix) -> tuple[frozenset, FqMatrix]:
        known = [self.recovered[c] for c in cells if c in self.recovered]
        if known:
            value = value - sum_matrices(known)
            cells = frozenset(c for c in cells if c not in self.recovered)
        return cells, value

    def feed(self, spec: FountainSymbolSpec, value: FqMatrix) -> "PeelingDecoder":
        """Add one symbol; all-or-nothing on :class:`DecoderInconsistency`."""
        spec.check_grid(self.m, self.k)
        if self.recovered:
            shape = next(iter(self.recovered.values())).shape
            if value.shape != shape:
                raise ValueError(f"symbol shape {value.shape} != block shape {shape}")
        recovered = dict(self.recovered)
        work = [(spec.cells(), value)] + list(self.pending)
        saved = self.recovered, self.pending
        self.recovered = recovered
        try:
            self.pending = self._peel(work)
        except DecoderInconsistency:
            self.recovered, self.pending = saved
            raise
        return self

    def _peel(self, work: list) -> list:
        progress = True
        while progress:
            progress = False
            remaining = []
            for cells, value in work:
                cells, value = self._reduce(cells, value)
                if not cells:
                    if not value.is_zero():
                        raise DecoderInconsistency("decoder inconsistency")
                    continue
                if len(cells) == 1:
                    (cell,) = cells
                    self.recovered[cell] = value
                    progress = True
                    continue
                remaining.append((cells, value))
            work = remaining
        return work

    def decoded_product(self) -> FqMatrix:
        if not self.is_complete():
            missing = self.m * self.k - len(self.recovered)
            raise DecoderIncomplete(f"{missing} blocks still unknown")
        return assemble_blocks([[self.recovered[(i, j)] for j in range(self.k)]
                                for i in range(self.m)])


def feed_symbol(state: PeelingDecoder, spec: FountainSymbolSpec,
                value: FqMatrix) -> PeelingDecoder:
    return state.feed(spec, value)


def is_complete(state: PeelingDecoder) -> bool:
    return state.is_complete()


def decoded_product(state: PeelingDecoder) -> FqMatrix:
    return state.decoded_product()
