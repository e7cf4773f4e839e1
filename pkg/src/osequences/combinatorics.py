"""Exact definitions and brute-force oracles for finite O-sequences.

Everything here is deliberately naive.  These functions exist to pin down
the definitions and to validate the layered engine on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Iterator

DEFAULT_ENUMERATION_CAP = 20


class EnumerationBudgetError(ValueError):
    """Raised when an exhaustive search is requested beyond its cap."""


@dataclass(frozen=True)
class BinomialExpansion:
    """``a = C(k_t, t) + C(k_{t-1}, t-1) + ... + C(k_j, j)``.

    ``terms`` holds ``(k_i, i)`` pairs with ``i`` descending.
    """

    a: int
    base: int
    terms: tuple[tuple[int, int], ...]

    def value(self) -> int:
        return sum(comb(k, i) for k, i in self.terms)


@dataclass(frozen=True)
class OSequence:
    values: tuple[int, ...]
    multiplicity: int = field(init=False)
    socle_degree: int = field(init=False)

    def __post_init__(self) -> None:
        if not is_o_sequence(self.values):
            raise ValueError(f"not an O-sequence: {self.values}")
        object.__setattr__(self, "multiplicity", sum(self.values))
        object.__setattr__(self, "socle_degree", len(self.values) - 1)

    @property
    def last(self) -> int:
        return self.values[-1]


def _check_positive(**kwargs: int) -> None:
    for name, v in kwargs.items():
        if not isinstance(v, int) or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")


@lru_cache(maxsize=65536)
def _expansion_terms(a: int, t: int) -> tuple[tuple[int, int], ...]:
    terms = []
    i = t
    while a > 0 and i >= 1:
        # largest k with C(k, i) <= a; k >= i always works since C(i, i) = 1
        k = i
        while comb(k + 1, i) <= a:
            k += 1
        terms.append((k, i))
        a -= comb(k, i)
        i -= 1
    return tuple(terms)


def binomial_expansion(a: int, t: int) -> BinomialExpansion:
    """Greedy expansion of ``a`` in base ``t``."""
    _check_positive(a=a, t=t)
    return BinomialExpansion(a, t, _expansion_terms(a, t))


def macaulay_bound(a: int, t: int) -> int:
    """Largest admissible ``h_{t+1}`` after ``h_t = a``."""
    _check_positive(a=a, t=t)
    return sum(comb(k + 1, i + 1) for k, i in _expansion_terms(a, t))


def is_o_sequence(values) -> bool:
    try:
        h = [int(v) for v in values]
    except (TypeError, ValueError):
        return False
    if not h or h[0] != 1 or any(v < 1 for v in h):
        return False
    # the step h_0 -> h_1 is free: the number of variables is arbitrary
    return all(h[t + 1] <= macaulay_bound(h[t], t) for t in range(1, len(h) - 1))


def _extensions(prefix: list[int], remaining: int) -> Iterator[tuple[int, ...]]:
    if remaining == 0:
        yield tuple(prefix)
        return
    t = len(prefix) - 1
    top = remaining if t == 0 else min(remaining, macaulay_bound(prefix[-1], t))
    for h in range(1, top + 1):
        prefix.append(h)
        yield from _extensions(prefix, remaining - h)
        prefix.pop()


def iter_o_sequences(d: int) -> Iterator[tuple[int, ...]]:
    """Depth-first generation of all O-sequences of multiplicity ``d``, in lexicographic order."""
    _check_positive(d=d)
    yield from _extensions([1], d - 1)


def enumerate_o_sequences(d: int, cap: int = DEFAULT_ENUMERATION_CAP) -> list[OSequence]:
    _check_positive(d=d)
    if d > cap:
        raise EnumerationBudgetError(f"d={d} exceeds the enumeration cap {cap}")
    return [OSequence(h) for h in iter_o_sequences(d)]


def _ring_dim(p: int, i: int) -> int:
    """Hilbert function of the polynomial ring in ``p`` variables, degree ``i``."""
    return comb(p - 1 + i, i)


def in_m_pnkd(h: tuple[int, ...], p: int, n: int, k: int) -> bool:
    """Membership of an O-sequence ``h`` in M(p, n, k, d)."""
    s = len(h) - 1
    if s > n or (s >= 1 and h[1] > p):
        return False
    for i in range(k + 1):
        hi = h[i] if i <= s else 0
        if hi != _ring_dim(p, i):
            return False
    return all(h[i] < _ring_dim(p, i) for i in range(k + 1, s + 1))


def count_opnkd_oracle(p: int, n: int, k: int, d: int, cap: int = DEFAULT_ENUMERATION_CAP) -> int:
    """O(p, n, k, d) by filtering the exhaustive enumeration."""
    if p < 0 or n < 0 or k < 0 or d <= 0:
        return 0
    if p == 0:
        return 1 if (k == 0 and d == 1) else 0
    if d > cap:
        raise EnumerationBudgetError(f"d={d} exceeds the enumeration cap {cap}")
    return _count_opnkd_cached(p, n, k, d)


@lru_cache(maxsize=None)
def _sequences(d: int) -> tuple[tuple[int, ...], ...]:
    return tuple(iter_o_sequences(d))


@lru_cache(maxsize=None)
def _count_opnkd_cached(p: int, n: int, k: int, d: int) -> int:
    return sum(1 for h in _sequences(d) if in_m_pnkd(h, p, n, k))


def partition_numbers(m: int) -> list[int]:
    """``[p(0), ..., p(m)]`` via Euler's pentagonal-number recurrence."""
    if m < 0:
        raise ValueError("m must be non-negative")
    p = [1] + [0] * m
    for n in range(1, m + 1):
        total = 0
        j = 1
        while True:
            g1 = j * (3 * j - 1) // 2
            if g1 > n:
                break
            sign = 1 if j % 2 else -1
            total += sign * p[n - g1]
            g2 = g1 + j
            if g2 <= n:
                total += sign * p[n - g2]
            j += 1
        p[n] = total
    return p


def partition_number(m: int) -> int:
    return partition_numbers(m)[m]
