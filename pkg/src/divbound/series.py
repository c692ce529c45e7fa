"""Truncated series evaluation: enumerate retained (i, d, t) triples, weight the
exact local increments, and emit a certified two-sided bound with a block cache.

The truncation keeps triples with d * i**alpha <= budget_B, P+(d) <= i and
t in [i*d, (i+1)*d). Within one (i, d) pair the rooted component of d in [d, t]
can only change when t arrives at an element of the widest component, so the
t-range is processed in constant-component segments whose weight sums telescope
exactly. The per-triple stream is still exposed for small budgets and testing.
"""

from __future__ import annotations

import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from threading import Lock
from typing import Iterable, Iterator

from .numtheory import (
    CanonicalKey,
    RootedComponent,
    canonical_key,
    primes_up_to,
    rooted_component,
    smooth_numbers,
)
from .solver import BlockRecord, Mode, local_increment, solve_block

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TruncationParams:
    alpha: float = 10.0
    budget_B: float = 1e8

    def __post_init__(self) -> None:
        if not self.alpha >= 1:
            raise ValueError(f"alpha must be at least 1, got {self.alpha!r}")
        if not self.budget_B >= 1:
            raise ValueError(f"budget must be at least 1, got {self.budget_B!r}")

    def d_limit(self, i: int) -> int:
        """Largest d with d * i**alpha <= budget_B (0 when no d qualifies)."""
        if float(self.alpha).is_integer():
            # exact integer path so boundary cases like d * 2**10 == 1024 are kept
            bound = Fraction(self.budget_B) / i ** int(self.alpha)
            return max(0, math.floor(bound))
        return max(0, math.floor(self.budget_B / i ** self.alpha))


@dataclass(frozen=True)
class SeriesEstimate:
    """Certified bracket [lower, upper] for the series value in the given mode."""

    mode: Mode
    S: float
    W: float
    M: float
    lower: float
    upper: float
    blocks: int
    id_pairs: int
    terms: int
    slack: float


@lru_cache(maxsize=None)
def euler_factor_exact(i: int) -> Fraction:
    """Product of (p-1)/p over primes p <= i, as an exact rational."""
    out = Fraction(1)
    for p in primes_up_to(i):
        out *= Fraction(p - 1, p)
    return out


@lru_cache(maxsize=None)
def euler_factor(i: int) -> float:
    return float(euler_factor_exact(i))


def term_weight(i: int, d: int, t: int) -> float:
    """Weight of one (i, d, t) triple: the Euler factor over t(t+1)."""
    assert i * d <= t < (i + 1) * d, (i, d, t)
    return euler_factor(i) / (t * (t + 1))


def term_weight_exact(i: int, d: int, t: int) -> Fraction:
    assert i * d <= t < (i + 1) * d, (i, d, t)
    return euler_factor_exact(i) / (t * (t + 1))


def block_weight(i: int, d: int) -> float:
    """Total weight of the whole t-range of an (i, d) pair; telescopes to
    1/(i(i+1)d) times the Euler factor."""
    return euler_factor(i) / (i * (i + 1) * d)


def block_weight_exact(i: int, d: int) -> Fraction:
    return euler_factor_exact(i) / (i * (i + 1) * d)


def retained_pairs(params: TruncationParams) -> Iterator[tuple[int, int]]:
    """All (i, d) pairs surviving truncation, i ascending then d ascending."""
    i = 1
    while True:
        limit = params.d_limit(i)
        if limit < 1:
            return
        for d in smooth_numbers(i, limit):
            yield (i, d)
        i += 1


def enumerate_triples(params: TruncationParams) -> Iterator[tuple[int, int, int]]:
    """Every retained (i, d, t) triple in deterministic order.

    Intended for small budgets; evaluate() aggregates whole t-segments instead.
    """
    for i, d in retained_pairs(params):
        yield from ((i, d, t) for t in range(i * d, (i + 1) * d))


class BlockCache:
    """Insert-only map from (family hash, mode, canonical key) to solved records.

    Optionally persisted as append-only TSV lines; unreadable or invalid lines are
    skipped with a warning, and I/O failures degrade to memory-only operation.
    Partition-mode records stay in memory (their values are not integers).
    """

    _PERSISTED_MODES = ("density", "counting")

    def __init__(self, path: str | None = None):
        self.path = path
        self.hits = 0
        self.misses = 0
        self._records: dict[tuple[str, str, CanonicalKey], BlockRecord] = {}
        self._lock = Lock()
        if path:
            self._load(path)

    def _load(self, path: str) -> None:
        try:
            fh = open(path, encoding="utf-8")
        except FileNotFoundError:
            return
        except OSError as exc:
            log.warning("cannot read cache file %s (%s); continuing in memory", path, exc)
            self.path = None
            return
        with fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                rec_key, rec = self._parse_line(line, lineno, path)
                if rec is not None:
                    self._records.setdefault(rec_key, rec)

    def _parse_line(self, line: str, lineno: int, path: str):
        try:
            family_hash, mode_tag, elems_csv, root_s, pf, pd, qf, qd = line.split("\t")
            elements = tuple(int(v) for v in elems_csv.split(","))
            root = int(root_s)
            if root not in elements or list(elements) != sorted(set(elements)):
                raise ValueError("malformed component")
            key = CanonicalKey(normalized_elements=elements, root_value=root)
            if mode_tag == "density":
                full, deleted = int(pf), int(pd)
                if not 0 <= full - deleted <= 1:
                    raise ValueError("size pair out of range")
                rec = BlockRecord(key=key, size_full=full, size_deleted=deleted)
            elif mode_tag == "counting":
                full, deleted = int(qf), int(qd)
                if not 1 <= deleted <= full <= 2 * deleted:
                    raise ValueError("count pair out of range")
                rec = BlockRecord(key=key, count_full=full, count_deleted=deleted)
            else:
                raise ValueError(f"unknown mode {mode_tag!r}")
            return (family_hash, mode_tag, key), rec
        except ValueError as exc:
            log.warning("skipping unreadable cache line %d in %s (%s)", lineno, path, exc)
            return None, None

    def _append(self, family_hash: str, mode_tag: str, rec: BlockRecord) -> None:
        if not self.path or mode_tag not in self._PERSISTED_MODES:
            return
        key = rec.key
        if mode_tag == "density":
            fields = (rec.size_full, rec.size_deleted, "-", "-")
        else:
            fields = ("-", "-", rec.count_full, rec.count_deleted)
        line = "\t".join(
            [
                family_hash,
                mode_tag,
                ",".join(map(str, key.normalized_elements)),
                str(key.root_value),
                *map(str, fields),
            ]
        )
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        except OSError as exc:
            log.warning("cannot append to cache file %s (%s); continuing in memory", self.path, exc)
            self.path = None

    def lookup_or_solve(
        self,
        key: CanonicalKey,
        fam,
        mode: Mode,
        *,
        node_limit: int | None = None,
    ) -> BlockRecord:
        map_key = (fam.family_hash, mode.tag, key)
        with self._lock:
            rec = self._records.get(map_key)
            if rec is not None:
                self.hits += 1
                return rec
        component = RootedComponent(
            elements=key.normalized_elements,
            root_index=key.normalized_elements.index(key.root_value),
        )
        rec = solve_block(component, fam, mode, node_limit=node_limit)
        with self._lock:
            if map_key not in self._records:
                self._records[map_key] = rec
                self.misses += 1
                self._append(fam.family_hash, mode.tag, rec)
            else:
                rec = self._records[map_key]
        return rec

    def __len__(self) -> int:
        return len(self._records)


def _segment_boundaries(d: int, t_lo: int, t_hi: int) -> list[int]:
    """Start points of the maximal t-subranges on which the component of d is constant.

    The component C(d, t) is monotone in t and any change at t puts t itself inside
    the new component, so changes can only happen when t reaches an element of the
    widest component C(d, t_hi).
    """
    widest = rooted_component(d, t_hi)
    return [t_lo] + [v for v in widest.elements if t_lo < v <= t_hi]


def _pair_contribution(i, d, fam, mode, cache, node_limit):
    """Deterministic per-(i, d) data: float partial sum, keys touched, segment count."""
    t_lo, t_hi = i * d, (i + 1) * d - 1
    bounds = _segment_boundaries(d, t_lo, t_hi)
    acc = 0.0
    keys = []
    for idx, start in enumerate(bounds):
        end = bounds[idx + 1] - 1 if idx + 1 < len(bounds) else t_hi
        comp = rooted_component(d, start)
        rec = cache.lookup_or_solve(canonical_key(comp), fam, mode, node_limit=node_limit)
        keys.append(rec.key)
        inc = local_increment(rec, mode)
        if inc:
            # sum of 1/(t(t+1)) over [start, end], telescoped exactly
            acc += inc * ((end + 1 - start) / (start * (end + 1)))
    return acc * euler_factor(i), keys, len(bounds)


def evaluate(
    fam,
    mode: Mode,
    params: TruncationParams,
    cache: BlockCache | None = None,
    *,
    threads: int = 1,
    node_limit: int | None = None,
) -> SeriesEstimate:
    """Evaluate the truncated series and return the certified interval.

    The partial sum S is a lower bound for the full series value; the upper bound
    adds M times the unretained coefficient mass plus a float summation allowance.
    Work is split over (i, d) pairs; each pair's contribution is a pure function of
    the pair, and the final reduction runs sequentially in enumeration order, so the
    result is bit-identical for every thread count.
    """
    if cache is None:
        cache = BlockCache(None)
    pairs = list(retained_pairs(params))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(lambda p: _pair_contribution(*p, fam, mode, cache, node_limit), pairs)
            )
    else:
        results = [_pair_contribution(i, d, fam, mode, cache, node_limit) for i, d in pairs]

    seen: set[CanonicalKey] = set()
    s_sum = _Neumaier()
    w_sum = _Neumaier()
    magnitude = 0.0
    segments = 0
    terms = 0
    for (i, d), (contrib, keys, n_segments) in zip(pairs, results):
        s_sum.add(contrib)
        w_sum.add(block_weight(i, d))
        magnitude += abs(contrib)
        segments += n_segments
        terms += d
        seen.update(keys)

    S = s_sum.total()
    W = w_sum.total()
    eps = sys.float_info.epsilon
    # allowance for every float add/multiply on the S path, scaled by the magnitude
    slack = eps * (3 * segments + 4 * len(pairs)) * max(1.0, magnitude)
    if not 0.0 <= W <= 1.0 + slack:
        raise RuntimeError(f"retained mass {W} outside [0, 1]")
    M = fam.increment_bound(mode)
    upper = S + M * max(0.0, 1.0 - W) + slack
    return SeriesEstimate(
        mode=mode,
        S=S,
        W=W,
        M=M,
        lower=S,
        upper=upper,
        blocks=len(seen),
        id_pairs=len(pairs),
        terms=terms,
        slack=slack,
    )


class _Neumaier:
    """Compensated sequential summation; order-sensitive by design."""

    __slots__ = ("s", "c")

    def __init__(self) -> None:
        self.s = 0.0
        self.c = 0.0

    def add(self, v: float) -> None:
        t = self.s + v
        if abs(self.s) >= abs(v):
            self.c += (self.s - t) + v
        else:
            self.c += (v - t) + self.s
        self.s = t

    def total(self) -> float:
        return self.s + self.c


def collect_blocks(
    fam,
    mode: Mode,
    params: TruncationParams,
    cache: BlockCache | None = None,
    *,
    node_limit: int | None = None,
) -> list[tuple[CanonicalKey, float, int | float]]:
    """Per-block aggregate weight and increment, heaviest block first."""
    if cache is None:
        cache = BlockCache(None)
    weights: dict[CanonicalKey, float] = {}
    increments: dict[CanonicalKey, int | float] = {}
    for i, d in retained_pairs(params):
        t_lo, t_hi = i * d, (i + 1) * d - 1
        bounds = _segment_boundaries(d, t_lo, t_hi)
        for idx, start in enumerate(bounds):
            end = bounds[idx + 1] - 1 if idx + 1 < len(bounds) else t_hi
            comp = rooted_component(d, start)
            rec = cache.lookup_or_solve(canonical_key(comp), fam, mode, node_limit=node_limit)
            key = rec.key
            mass = euler_factor(i) * ((end + 1 - start) / (start * (end + 1)))
            weights[key] = weights.get(key, 0.0) + mass
            increments.setdefault(key, local_increment(rec, mode))
    ranked = sorted(
        weights,
        key=lambda k: (-weights[k], k.normalized_elements, k.root_value),
    )
    return [(k, weights[k], increments[k]) for k in ranked]
