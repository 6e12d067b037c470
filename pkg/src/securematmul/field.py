"""Prime-field arithmetic and seeded sampling of field elements."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

# Deterministic Miller-Rabin witnesses valid for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)

MAX_MODULUS_BITS = 62


class FieldError(ValueError):
    pass


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin test (exact for all 64-bit inputs)."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def largest_prime_below(bound: int, divisor_of_q_minus_1: int = 1) -> int:
    """Largest prime q < bound with ``divisor_of_q_minus_1 | q - 1``."""
    step = divisor_of_q_minus_1
    q = ((bound - 2) // step) * step + 1
    while q >= 2:
        if is_prime(q):
            return q
        q -= step
    raise FieldError(f"no prime below {bound} with {step} | q - 1")


@dataclass(frozen=True)
class PrimeModulus:
    q: int

    def __post_init__(self):
        q = int(self.q)
        object.__setattr__(self, "q", q)
        if q.bit_length() > MAX_MODULUS_BITS:
            raise FieldError(f"modulus must be below 2^{MAX_MODULUS_BITS}, got {q}")
        if not is_prime(q):
            raise FieldError(f"{q} is not prime")

    def __int__(self) -> int:
        return self.q

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(value, self)


def as_modulus(q: Union[int, PrimeModulus]) -> PrimeModulus:
    return q if isinstance(q, PrimeModulus) else PrimeModulus(q)


class FieldElement:
    """Immutable element of F_q."""

    __slots__ = ("value", "modulus")

    def __init__(self, value: int, modulus: Union[int, PrimeModulus]):
        modulus = as_modulus(modulus)
        object.__setattr__(self, "modulus", modulus)
        object.__setattr__(self, "value", int(value) % modulus.q)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise FieldError(
                    f"modulus mismatch: {self.modulus.q} vs {other.modulus.q}")
            return other.value
        if isinstance(other, (int, np.integer)):
            return int(other)
        return NotImplemented

    def _new(self, value: int) -> "FieldElement":
        return FieldElement(value, self.modulus)

    def __add__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._new(self.value + v)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._new(self.value - v)

    def __rsub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._new(v - self.value)

    def __mul__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._new(self.value * v)

    __rmul__ = __mul__

    def __truediv__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return self * self._new(v).inverse()

    def __neg__(self):
        return self._new(-self.value)

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.inverse() ** (-exponent)
        return self._new(pow(self.value, exponent, self.modulus.q))

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("no inverse of zero")
        return self._new(pow(self.value, -1, self.modulus.q))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.modulus == other.modulus and self.value == other.value
        if isinstance(other, (int, np.integer)):
            return self.value == int(other) % self.modulus.q
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.modulus.q))

    def __int__(self):
        return self.value

    __index__ = __int__

    def __repr__(self):
        return f"FieldElement({self.value}, q={self.modulus.q})"

    def __str__(self):
        return str(self.value)


def arith(a: FieldElement, b: FieldElement, op: str) -> FieldElement:
    if a.modulus != b.modulus:
        raise FieldError(f"modulus mismatch: {a.modulus.q} vs {b.modulus.q}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def inverse(a: FieldElement) -> FieldElement:
    return a.inverse()


def inv_mod(a: int, q: int) -> int:
    a %= q
    if a == 0:
        raise ZeroDivisionError("no inverse of zero")
    return pow(a, -1, q)


# -- randomness ---------------------------------------------------------------

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def make_rng(seed: SeedLike = None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def split_rng(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Independent child streams; the parent stream advances deterministically."""
    return rng.spawn(n)


def sample_uniform(rng: np.random.Generator, q: Union[int, PrimeModulus]) -> FieldElement:
    modulus = as_modulus(q)
    return FieldElement(int(rng.integers(0, modulus.q)), modulus)


def sample_distinct_ints(rng: np.random.Generator, q: int, count: int,
                         exclude: Iterable[int] = ()) -> list[int]:
    """``count`` distinct residues mod q avoiding ``exclude``, uniform over ordered tuples."""
    excluded = {int(e) % q for e in exclude}
    if count + len(excluded) > q:
        raise FieldError(
            f"field too small: need {count} values outside {len(excluded)} excluded, q={q}")
    if count == 0:
        return []
    if q <= 4 * (count + len(excluded)) or q <= 64:
        pool = np.array([v for v in range(q) if v not in excluded], dtype=np.int64)
        return [int(v) for v in rng.choice(pool, size=count, replace=False)]
    out: list[int] = []
    seen = set(excluded)
    while len(out) < count:
        for v in rng.integers(0, q, size=count - len(out) + 2):
            v = int(v)
            if v not in seen:
                seen.add(v)
                out.append(v)
                if len(out) == count:
                    break
    return out


def sample_distinct(rng: np.random.Generator, q: Union[int, PrimeModulus], count: int,
                    exclude: Iterable = ()) -> list[FieldElement]:
    modulus = as_modulus(q)
    values = sample_distinct_ints(rng, modulus.q, count, (int(e) for e in exclude))
    return [FieldElement(v, modulus) for v in values]
