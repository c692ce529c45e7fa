"""Exact solvers on finite integer sets: maximum admissible subset size, admissible
subset counts, partition functions, and per-component increment records.

All values are exact (machine integers, arbitrary-precision integers, rationals when
the pressure is rational). No floating-point error can enter an increment; floats
appear only when taking logarithms of exact ratios.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from threading import Lock
from typing import Iterable

from .numtheory import CanonicalKey, RootedComponent, canonical_key
from .patterns import AdmissibleFamily, is_admissible_with

DEFAULT_NODE_LIMIT = 10**6
NODE_LIMIT_ENV = "DIVBOUND_NODE_LIMIT"

# component recursions nest two frames per element; default 1000 is too shallow
# for the deepest components seen at large budgets
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))


class ResourceLimitError(RuntimeError):
    """Search exceeded its node budget. No answer is returned, never a wrong one."""

    def __init__(self, message: str, key: CanonicalKey | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class Mode:
    """What a block solve must produce: sizes, counts, or pressure-weighted sums."""

    kind: str
    pressure: Fraction | float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("density", "counting", "partition"):
            raise ValueError(f"unknown mode kind {self.kind!r}")
        if self.kind == "partition":
            if self.pressure is None or not self.pressure > 0:
                raise ValueError("partition mode needs a positive pressure")
        elif self.pressure is not None:
            raise ValueError(f"{self.kind} mode takes no pressure")

    @property
    def tag(self) -> str:
        if self.kind == "partition":
            return f"partition:{self.pressure}"
        return self.kind

    @property
    def increment_bound(self) -> float:
        """Uniform bound M on a single local increment in this mode."""
        if self.kind == "density":
            return 1.0
        if self.kind == "counting":
            return math.log(2.0)
        return math.log1p(float(self.pressure))


DENSITY = Mode("density")
COUNTING = Mode("counting")


def partition_mode(z: Fraction | float | int) -> Mode:
    if isinstance(z, int):
        z = Fraction(z)
    return Mode("partition", z)


@dataclass(frozen=True)
class BlockRecord:
    """Exactly computed values for one canonical rooted component.

    Only the field pair for the requested mode is filled; counts are plain integers,
    partition values are Fractions when the pressure is rational and floats otherwise.
    """

    key: CanonicalKey
    size_full: int | None = None
    size_deleted: int | None = None
    count_full: int | None = None
    count_deleted: int | None = None
    partition_full: Fraction | float | None = None
    partition_deleted: Fraction | float | None = None


def _resolve_limit(node_limit: int | None) -> int:
    if node_limit is None:
        raw = os.environ.get(NODE_LIMIT_ENV)
        node_limit = int(raw) if raw else DEFAULT_NODE_LIMIT
    if node_limit < 1:
        raise ValueError(f"node limit must be positive, got {node_limit!r}")
    return node_limit


def _validated_elements(S: Iterable[int]) -> tuple[int, ...]:
    out = sorted(set(S))
    for v in out:
        if not isinstance(v, int) or v < 1:
            raise ValueError(f"elements must be positive integers, got {v!r}")
    return tuple(out)


def _split_components(rest: tuple[int, ...], chosen: tuple[int, ...]):
    """Partition rest+chosen by divisor-graph connectivity.

    Admissibility of chosen+A factors over these components because every forbidden
    structure is connected, so each component can be solved independently.
    """
    union = sorted(rest + chosen)
    parent = list(range(len(union)))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for j in range(len(union)):
        for k in range(j):
            if union[j] % union[k] == 0:
                ra, rb = find(j), find(k)
                if ra != rb:
                    parent[ra] = rb
    groups: dict[int, tuple[list[int], list[int]]] = {}
    rest_set = set(rest)
    for idx, v in enumerate(union):
        bucket = groups.setdefault(find(idx), ([], []))
        bucket[0 if v in rest_set else 1].append(v)
    return [groups[r] for r in sorted(groups, key=lambda r: union[r])]


_MEMO: dict[tuple, dict] = {}
_MEMO_LOCK = Lock()


def clear_caches() -> None:
    """Drop all in-process memo tables (cache files are untouched)."""
    with _MEMO_LOCK:
        _MEMO.clear()


class _Search:
    """Include/exclude recursion over (undecided, chosen) states.

    The chosen part is always admissible. States are memoized per family and value
    kind after dividing each component by its gcd (dilation invariance). The memo is
    insert-only and idempotent, so concurrent solvers may share it.
    """

    __slots__ = ("family", "kind", "z", "memo", "nodes_left", "limit", "label")

    def __init__(self, family: AdmissibleFamily, kind: str, z, node_limit: int, label: str):
        self.family = family
        self.kind = kind
        self.z = z
        self.limit = node_limit
        self.nodes_left = node_limit
        self.label = label
        memo_key = (family.family_hash, kind, None if z is None else str(z))
        with _MEMO_LOCK:
            self.memo = _MEMO.setdefault(memo_key, {})

    def _unit(self):
        if self.kind == "size":
            return 0
        if self.kind == "count":
            return 1
        return Fraction(1) if isinstance(self.z, Fraction) else 1.0

    def value(self, rest: tuple[int, ...], chosen: tuple[int, ...]):
        if not rest:
            return self._unit()
        total = self._unit()
        for comp_rest, comp_chosen in _split_components(rest, chosen):
            if not comp_rest:
                continue
            g = math.gcd(*comp_rest, *comp_chosen)
            key = (tuple(v // g for v in comp_rest), tuple(v // g for v in comp_chosen))
            val = self.memo.get(key)
            if val is None:
                val = self._branch(key[0], key[1])
                self.memo[key] = val
            if self.kind == "size":
                total += val
            else:
                total *= val
        return total

    def _branch(self, rest: tuple[int, ...], chosen: tuple[int, ...]):
        self.nodes_left -= 1
        if self.nodes_left < 0:
            raise ResourceLimitError(
                f"search budget of {self.limit} nodes exhausted while solving {self.label}"
            )
        union = rest + chosen
        degree = dict.fromkeys(union, 0)
        for j, a in enumerate(union):
            for b in union[:j]:
                if a % b == 0 or b % a == 0:
                    degree[a] += 1
                    degree[b] += 1
        x = max(rest, key=lambda v: (degree[v], -v))
        rest2 = tuple(v for v in rest if v != x)
        result = self.value(rest2, chosen)
        if is_admissible_with(chosen, x, self.family):
            with_x = self.value(rest2, tuple(sorted(chosen + (x,))))
            if self.kind == "size":
                result = max(result, 1 + with_x)
            elif self.kind == "count":
                result += with_x
            else:
                result += self.z * with_x
        return result


def _solve(S: Iterable[int], family: AdmissibleFamily, kind: str, z, node_limit: int | None):
    elements = _validated_elements(S)
    label = f"{family.name} ({kind}) on {len(elements)} elements"
    search = _Search(family, kind, z, _resolve_limit(node_limit), label)
    return search.value(elements, ())


def max_admissible_size(S: Iterable[int], fam: AdmissibleFamily, *, node_limit: int | None = None) -> int:
    """Largest cardinality of an admissible subset of S, exactly."""
    return _solve(S, fam, "size", None, node_limit)


def count_admissible(S: Iterable[int], fam: AdmissibleFamily, *, node_limit: int | None = None) -> int:
    """Number of admissible subsets of S (the empty set always counts)."""
    return _solve(S, fam, "count", None, node_limit)


def partition_function(
    S: Iterable[int],
    fam: AdmissibleFamily,
    z: Fraction | float | int,
    *,
    node_limit: int | None = None,
) -> Fraction | float:
    """Sum of z**|B| over admissible subsets B of S.

    Exact rational when z is an int or Fraction; float arithmetic otherwise.
    At z = 1 this equals count_admissible.
    """
    if isinstance(z, int):
        z = Fraction(z)
    if isinstance(z, float) and not (math.isfinite(z) and z > 0):
        raise ValueError(f"pressure must be positive and finite, got {z!r}")
    if isinstance(z, Fraction) and z <= 0:
        raise ValueError(f"pressure must be positive, got {z!r}")
    return _solve(S, fam, "poly", z, node_limit)


def solve_block(
    c: RootedComponent,
    fam: AdmissibleFamily,
    mode: Mode,
    *,
    node_limit: int | None = None,
) -> BlockRecord:
    """Solve one rooted component in canonical form, returning the mode's value pair.

    The component is normalized first, so scaled copies produce identical records.
    Resource errors are re-raised with the canonical key attached.
    """
    key = canonical_key(c)
    full = key.normalized_elements
    deleted = tuple(v for v in full if v != key.root_value)
    try:
        if mode.kind == "density":
            rec = BlockRecord(
                key=key,
                size_full=max_admissible_size(full, fam, node_limit=node_limit),
                size_deleted=max_admissible_size(deleted, fam, node_limit=node_limit),
            )
            diff = rec.size_full - rec.size_deleted
            if not 0 <= diff <= 1:
                raise RuntimeError(f"size increment {diff} out of range for key {key}")
        elif mode.kind == "counting":
            rec = BlockRecord(
                key=key,
                count_full=count_admissible(full, fam, node_limit=node_limit),
                count_deleted=count_admissible(deleted, fam, node_limit=node_limit),
            )
            if not 1 <= rec.count_deleted <= rec.count_full <= 2 * rec.count_deleted:
                raise RuntimeError(f"count pair {rec.count_full}/{rec.count_deleted} out of range for key {key}")
        else:
            z = mode.pressure
            zf = partition_function(full, fam, z, node_limit=node_limit)
            zd = partition_function(deleted, fam, z, node_limit=node_limit)
            rec = BlockRecord(key=key, partition_full=zf, partition_deleted=zd)
            ceiling = (1 + z) * zd
            if isinstance(zf, float):
                ceiling *= 1.0 + 1e-12
            if not zd <= zf <= ceiling:
                raise RuntimeError(f"partition pair {zf}/{zd} out of range for key {key}")
    except ResourceLimitError as exc:
        raise ResourceLimitError(
            f"{exc} [component {','.join(map(str, full))} root {key.root_value}]", key=key
        ) from None
    return rec


def local_increment(rec: BlockRecord, mode: Mode) -> int | float:
    """The root's marginal contribution: size difference, or log of the value ratio."""
    if mode.kind == "density":
        if rec.size_full is None or rec.size_deleted is None:
            raise ValueError("record lacks density fields")
        return rec.size_full - rec.size_deleted
    if mode.kind == "counting":
        if rec.count_full is None or rec.count_deleted is None:
            raise ValueError("record lacks counting fields")
        return math.log(Fraction(rec.count_full, rec.count_deleted))
    if rec.partition_full is None or rec.partition_deleted is None:
        raise ValueError("record lacks partition fields")
    return math.log(rec.partition_full / rec.partition_deleted)
