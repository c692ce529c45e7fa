"""Divisor-graph groundwork: smooth numbers, interval divisor graphs, rooted components."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import reduce
from math import gcd
from typing import Iterator


def largest_prime_factor(d: int) -> int:
    """Largest prime dividing d; by convention 1 for d = 1."""
    if d < 1:
        raise ValueError(f"expected a positive integer, got {d!r}")
    best = 1
    if d % 2 == 0:
        best = 2
        while d % 2 == 0:
            d //= 2
    p = 3
    while p * p <= d:
        if d % p == 0:
            best = p
            while d % p == 0:
                d //= p
        p += 2
    return d if d > 1 else best


def primes_up_to(n: int) -> list[int]:
    """All primes <= n, by byte sieve."""
    if n < 2:
        return []
    sieve = bytearray(b"\x01") * (n + 1)
    sieve[0] = sieve[1] = 0
    p = 2
    while p * p <= n:
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
        p += 1
    return [v for v in range(2, n + 1) if sieve[v]]


def smooth_numbers(i: int, limit: int) -> Iterator[int]:
    """Yield every d <= limit all of whose prime factors are <= i, in increasing order.

    Heap-driven merge; memory scales with the output count, not with limit.
    """
    if i < 1:
        raise ValueError(f"smoothness bound must be >= 1, got {i!r}")
    if limit < 1:
        return
    primes = primes_up_to(i)
    heap = [1]
    seen = {1}
    while heap:
        d = heapq.heappop(heap)
        yield d
        for p in primes:
            m = d * p
            if m <= limit and m not in seen:
                seen.add(m)
                heapq.heappush(heap, m)


def divisor_connected_component(elements: tuple[int, ...] | list[int] | set[int], root: int) -> tuple[int, ...]:
    """Component of `root` in the divisor graph restricted to the given element set."""
    pool = set(elements)
    if root not in pool:
        raise ValueError(f"root {root} is not among the elements")
    seen = {root}
    stack = [root]
    while stack:
        v = stack.pop()
        for u in pool:
            if u not in seen and u != v and (u % v == 0 or v % u == 0):
                seen.add(u)
                stack.append(u)
    return tuple(sorted(seen))


@dataclass(frozen=True)
class RootedComponent:
    """Finite divisor-connected set of positive integers with one distinguished element."""

    elements: tuple[int, ...]
    root_index: int

    def __post_init__(self) -> None:
        elems = self.elements
        if not elems:
            raise ValueError("a rooted component needs at least one element")
        if elems[0] < 1 or any(b <= a for a, b in zip(elems, elems[1:])):
            raise ValueError("elements must be strictly increasing positive integers")
        if not 0 <= self.root_index < len(elems):
            raise ValueError(f"root index {self.root_index} out of range")
        if len(divisor_connected_component(elems, elems[0])) != len(elems):
            raise ValueError("the divisor graph on the elements is not connected")

    @property
    def root(self) -> int:
        return self.elements[self.root_index]


@dataclass(frozen=True)
class CanonicalKey:
    """Scale-normalized component: elements divided by their gcd, plus the scaled root."""

    normalized_elements: tuple[int, ...]
    root_value: int


def canonical_key(component: RootedComponent) -> CanonicalKey:
    """Identify components up to integer dilation: divide everything by the gcd."""
    g = reduce(gcd, component.elements)
    return CanonicalKey(tuple(e // g for e in component.elements), component.root // g)


def rooted_component(d: int, t: int) -> RootedComponent:
    """Connected component of d in the divisor graph on {d, ..., t}, rooted at d.

    Search from d, generating neighbours arithmetically: multiples k*v <= t and
    divisors v/k >= d. Cost scales with the component size times the ratio t/d,
    never with the interval length, so large d with bounded t/d stays cheap.
    """
    if d < 1 or t < d:
        raise ValueError(f"need 1 <= d <= t, got d={d!r}, t={t!r}")
    seen = {d}
    stack = [d]
    while stack:
        v = stack.pop()
        m = 2 * v
        while m <= t:
            if m not in seen:
                seen.add(m)
                stack.append(m)
            m += v
        k = 2
        while v >= k * d:
            if v % k == 0:
                u = v // k
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
            k += 1
    elements = tuple(sorted(seen))
    return RootedComponent(elements, elements.index(d))


class IntervalGraph:
    """Divisor graph on {lo, ..., hi} with adjacency built by sieving multiples.

    Every edge is stored oriented from divisor to multiple: `multiples[v]` holds the
    multiples of v inside the range and `divisors[v]` the divisors of v inside it.
    """

    def __init__(self, lo: int, hi: int, multiples: dict[int, tuple[int, ...]], divisors: dict[int, tuple[int, ...]]):
        self.lo = lo
        self.hi = hi
        self.multiples = multiples
        self.divisors = divisors

    @classmethod
    def over_range(cls, lo: int, hi: int) -> "IntervalGraph":
        if not 1 <= lo <= hi:
            raise ValueError(f"need 1 <= lo <= hi, got lo={lo!r}, hi={hi!r}")
        mult: dict[int, list[int]] = {v: [] for v in range(lo, hi + 1)}
        divs: dict[int, list[int]] = {v: [] for v in range(lo, hi + 1)}
        for u in range(lo, hi + 1):
            for m in range(2 * u, hi + 1, u):
                if m >= lo:
                    mult[u].append(m)
                    divs[m].append(u)
        return cls(lo, hi, {v: tuple(e) for v, e in mult.items()}, {v: tuple(e) for v, e in divs.items()})

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.divisors[v] + self.multiples[v]

    def component(self, v: int) -> tuple[int, ...]:
        """Connected component of v, as a sorted tuple."""
        seen = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for w in self.neighbors(u):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return tuple(sorted(seen))

    def components(self) -> list[tuple[int, ...]]:
        """All components, ordered by least element; they partition the range."""
        out = []
        seen: set[int] = set()
        for v in range(self.lo, self.hi + 1):
            if v not in seen:
                comp = self.component(v)
                seen.update(comp)
                out.append(comp)
        return out
