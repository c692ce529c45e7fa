"""Forbidden substructures of divisor graphs and the admissibility predicate.

An admissible family is a downward-closed, dilation-invariant collection of finite
integer sets, described here by a finite list of forbidden connected patterns plus
an optional acyclicity requirement on the divisor graph (the "forest" family).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable

MAX_PATTERN_VERTICES = 8

# relation of a candidate image to an already placed one, used in placement plans
REL_MULTIPLE = 0  # candidate must be a proper multiple
REL_DIVISOR = 1  # candidate must be a proper divisor
REL_EITHER = 2  # comparable in either direction


class PatternError(ValueError):
    """Raised for structurally invalid patterns or pattern files."""


@dataclass(frozen=True)
class Pattern:
    """A small connected graph matched against divisor graphs.

    A directed edge (u, v, True) requires the image of u to properly divide the
    image of v; an undirected edge accepts either orientation. Matching is not
    induced: extra divisibility between matched elements is allowed.
    """

    vertex_count: int
    edges: tuple[tuple[int, int, bool], ...]

    def __post_init__(self) -> None:
        v = self.vertex_count
        if not 1 <= v <= MAX_PATTERN_VERTICES:
            raise PatternError(f"vertex count must be in 1..{MAX_PATTERN_VERTICES}, got {v!r}")
        norm = []
        pairs = set()
        for e in self.edges:
            try:
                a, b, directed = e
                a, b, directed = int(a), int(b), bool(directed)
            except (TypeError, ValueError) as exc:
                raise PatternError(f"malformed edge {e!r}") from exc
            if not (0 <= a < v and 0 <= b <= v - 1):
                raise PatternError(f"edge {e!r} references a vertex outside 0..{v - 1}")
            if a == b:
                raise PatternError(f"self-loop on vertex {a}")
            pair = (a, b) if a < b else (b, a)
            if pair in pairs:
                raise PatternError(f"duplicate edge on vertex pair {pair}")
            pairs.add(pair)
            norm.append((a, b, True) if directed else (pair[0], pair[1], False))
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        if v > 1:
            adj: dict[int, set[int]] = {i: set() for i in range(v)}
            for a, b, _ in self.edges:
                adj[a].add(b)
                adj[b].add(a)
            seen = {0}
            stack = [0]
            while stack:
                i = stack.pop()
                for j in adj[i]:
                    if j not in seen:
                        seen.add(j)
                        stack.append(j)
            if len(seen) != v:
                raise PatternError(
                    "pattern must be connected: a disconnected forbidden subgraph could "
                    "straddle divisor-graph components and break component decomposition"
                )

    def degree(self, vertex: int) -> int:
        return sum(1 for a, b, _ in self.edges if vertex in (a, b))


@lru_cache(maxsize=None)
def placement_plan(pattern: Pattern, anchor: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Backtracking schedule for matching `pattern` with the anchor vertex placed first.

    Returns one step per remaining vertex, in an order where every step has at least
    one already placed neighbour (the pattern is connected, so such an order exists).
    Each step is a tuple of (slot, relation) constraints: the candidate must relate to
    the image placed at position `slot` by `relation` (REL_MULTIPLE / REL_DIVISOR / REL_EITHER).
    Vertices are taken greedily by most placed neighbours, then by degree, then index.
    """
    v = pattern.vertex_count
    order = [anchor]
    slot_of = {anchor: 0}
    steps = []
    while len(order) < v:
        best = None
        best_rank = None
        for w in range(v):
            if w in slot_of:
                continue
            placed_nbrs = 0
            for a, b, _ in pattern.edges:
                if w == a and b in slot_of or w == b and a in slot_of:
                    placed_nbrs += 1
            rank = (-placed_nbrs, -pattern.degree(w), w)
            if best_rank is None or rank < best_rank:
                best, best_rank = w, rank
        constraints = []
        for a, b, directed in pattern.edges:
            if best == a and b in slot_of:
                # edge best -> b or undirected
                constraints.append((slot_of[b], REL_DIVISOR if directed else REL_EITHER))
            elif best == b and a in slot_of:
                constraints.append((slot_of[a], REL_MULTIPLE if directed else REL_EITHER))
        slot_of[best] = len(order)
        order.append(best)
        steps.append(tuple(constraints))
    return tuple(steps)


def _eligible(value: int, images: list[int], constraints: tuple[tuple[int, int], ...]) -> bool:
    for slot, rel in constraints:
        a = images[slot]
        if rel == REL_MULTIPLE:
            if value % a:
                return False
        elif rel == REL_DIVISOR:
            if a % value:
                return False
        elif value % a and a % value:
            return False
    return True


def _extend(plan, step_idx: int, images: list[int], used: set[int], pool: tuple[int, ...]) -> bool:
    if step_idx == len(plan):
        return True
    constraints = plan[step_idx]
    for cand in pool:
        if cand in used or not _eligible(cand, images, constraints):
            continue
        images.append(cand)
        used.add(cand)
        if _extend(plan, step_idx + 1, images, used, pool):
            return True
        images.pop()
        used.remove(cand)
    return False


def contains_pattern(S: Iterable[int], pattern: Pattern) -> bool:
    """Does the divisor graph on S contain a (not necessarily induced) copy of the pattern?"""
    pool = tuple(sorted(set(S)))
    if len(pool) < pattern.vertex_count:
        return False
    anchor = max(range(pattern.vertex_count), key=lambda w: (pattern.degree(w), -w))
    plan = placement_plan(pattern, anchor)
    for first in pool:
        if _extend(plan, 0, [first], {first}, pool):
            return True
    return False


def _creates_copy_with(pool: tuple[int, ...], x: int, pattern: Pattern) -> bool:
    """Copy of the pattern inside pool + {x} whose image uses x."""
    if len(pool) + 1 < pattern.vertex_count:
        return False
    for anchor in range(pattern.vertex_count):
        plan = placement_plan(pattern, anchor)
        if _extend(plan, 0, [x], {x}, pool):
            return True
    return False


def _divisor_components(pool: tuple[int, ...]) -> dict[int, int]:
    """Map element -> component representative in the divisor graph on pool."""
    parent = {v: v for v in pool}

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, a in enumerate(pool):
        for b in pool[i + 1 :]:
            if b % a == 0:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
    return {v: find(v) for v in pool}


def _has_divisor_cycle(pool: tuple[int, ...]) -> bool:
    parent = {v: v for v in pool}

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, a in enumerate(pool):
        for b in pool[i + 1 :]:
            if b % a == 0:
                ra, rb = find(a), find(b)
                if ra == rb:
                    return True
                parent[ra] = rb
    return False


@dataclass(frozen=True)
class AdmissibleFamily:
    """A decidable admissibility predicate: forbidden patterns plus optional acyclicity.

    The empty set is always admissible, admissibility is preserved by taking subsets
    and by integer dilation, and membership decomposes over divisor-graph components;
    these follow from every forbidden structure being a connected, scale-free graph.
    """

    name: str
    patterns: tuple[Pattern, ...] = ()
    forbid_cycles: bool = False

    @cached_property
    def family_hash(self) -> str:
        """Stable content hash used for cache keying."""
        payload = {
            "patterns": sorted([p.vertex_count, [list(e) for e in p.edges]] for p in self.patterns),
            "forest": self.forbid_cycles,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def increment_bound(self, mode) -> float:
        """Uniform upper bound M on one root's local increment in the given mode."""
        return mode.increment_bound

    def is_admissible(self, S: Iterable[int]) -> bool:
        return is_admissible(S, self)

    def is_admissible_with(self, S: Iterable[int], x: int) -> bool:
        return is_admissible_with(S, x, self)


def is_admissible(S: Iterable[int], family: AdmissibleFamily) -> bool:
    """Does S avoid every forbidden pattern (and cycles, for forest families)?"""
    pool = tuple(sorted(set(S)))
    if family.forbid_cycles and _has_divisor_cycle(pool):
        return False
    return not any(contains_pattern(pool, p) for p in family.patterns)


def is_admissible_with(S: Iterable[int], x: int, family: AdmissibleFamily) -> bool:
    """Given admissible S and x not in S, decide whether S + {x} stays admissible.

    Only structures through x need checking: any new pattern copy or cycle must use x.
    """
    pool = tuple(sorted(set(S)))
    if x in pool:
        raise ValueError(f"{x} is already a member")
    if x < 1:
        raise ValueError(f"elements must be positive, got {x!r}")
    if family.forbid_cycles and pool:
        rep = _divisor_components(pool)
        seen_comps = set()
        for v in pool:
            if v != x and (v % x == 0 or x % v == 0):
                r = rep[v]
                if r in seen_comps:
                    return False
                seen_comps.add(r)
    for p in family.patterns:
        if _creates_copy_with(pool, x, p):
            return False
    return True


def r_fork(r: int) -> Pattern:
    """One element properly dividing r distinct others."""
    if r < 2:
        raise PatternError(f"fork arity must be at least 2, got {r!r}")
    return Pattern(r + 1, tuple((0, j, True) for j in range(1, r + 1)))


def two_fork() -> Pattern:
    return r_fork(2)


def in_fork(r: int) -> Pattern:
    """r distinct elements all properly dividing a common one."""
    if r < 2:
        raise PatternError(f"fork arity must be at least 2, got {r!r}")
    return Pattern(r + 1, tuple((j, 0, True) for j in range(1, r + 1)))


def chain(k: int) -> Pattern:
    """Divisibility chain on k elements; k = 2 forbids any divisor pair."""
    if k < 2:
        raise PatternError(f"chain length must be at least 2, got {k!r}")
    return Pattern(k, tuple((j, j + 1, True) for j in range(k - 1)))


def builtin_family(name: str) -> AdmissibleFamily:
    """Parse a family name: two-fork, r-fork:R, in-fork:R, chain:K, or forest."""
    text = name.strip().lower().replace("_", "-")
    if text == "two-fork":
        return AdmissibleFamily("two-fork", (two_fork(),))
    if text == "forest":
        return AdmissibleFamily("forest", (), forbid_cycles=True)
    head, sep, arg = text.partition(":")
    if sep and head in ("r-fork", "in-fork", "chain"):
        try:
            k = int(arg)
        except ValueError:
            raise PatternError(f"family parameter must be an integer, got {arg!r}") from None
        if head == "r-fork":
            return AdmissibleFamily(f"r-fork:{k}", (r_fork(k),))
        if head == "in-fork":
            return AdmissibleFamily(f"in-fork:{k}", (in_fork(k),))
        return AdmissibleFamily(f"chain:{k}", (chain(k),))
    raise PatternError(f"unknown family {name!r}")


def family_from_json(doc: object, name: str = "custom") -> AdmissibleFamily:
    """Build a family from the pattern-file JSON layout.

    Expected shape: {"patterns": [{"vertices": V, "edges": [{"from": i, "to": j,
    "directed": bool}, ...]}, ...], "forest": bool} with 0-based vertex indices.
    """
    if not isinstance(doc, dict):
        raise PatternError("pattern file must contain a JSON object")
    pats = []
    raw = doc.get("patterns", [])
    if not isinstance(raw, list):
        raise PatternError("'patterns' must be a list")
    for idx, entry in enumerate(raw):
        try:
            vertices = int(entry["vertices"])
            edges = tuple((int(e["from"]), int(e["to"]), bool(e["directed"])) for e in entry["edges"])
        except (KeyError, TypeError, ValueError) as exc:
            raise PatternError(f"pattern {idx}: malformed entry ({exc!r})") from exc
        try:
            pats.append(Pattern(vertices, edges))
        except PatternError as exc:
            raise PatternError(f"pattern {idx}: {exc}") from exc
    forest = bool(doc.get("forest", False))
    return AdmissibleFamily(name, tuple(pats), forest)


def family_from_file(path: str) -> AdmissibleFamily:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PatternError(f"pattern file {path}: invalid JSON ({exc})") from exc
    return family_from_json(doc, name=f"file:{path}")
