"""Sub-repartition calculus.

A sub-repartition of {1..n} is a family of pairwise-disjoint non-empty subsets
(blocks) whose union need not cover {1..n}.  This module provides enumeration,
the three basic coarsening relations and their chain closure, the level-tagged
hierarchies used by k-entanglement and k-partite-entanglement measures, the
steering hierarchy on (untrusted, trusted) split pairs, depth-bounded block
partitions, and the complementarity set used by monogamy scans.

Everything here is exact, pure-Python combinatorics; closures are computed by
breadth-first search over constructively generated one-step coarsenings and
memoized per canonical input (build-once caches, safe for concurrent readers).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

MAX_PARSE_N = 9      # enumeration / basic relations
MAX_CLOSURE_N = 7    # BFS chain-closure queries


class PartitionError(ValueError):
    """Malformed partition input or unsupported size."""


class ComplementarityUnsupported(PartitionError):
    """Complementarity is pinned to the case where Q's blocks are blocks of P."""


@dataclass(frozen=True)
class SubRepartition:
    """Canonical family of disjoint non-empty blocks over {1..n}.

    Blocks are stored sorted ascending internally and ordered by their minimum
    element, so equality and hashing are independent of input ordering.
    """

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, n: int, blocks: Iterable[Iterable[int]]):
        if not isinstance(n, int) or n < 1:
            raise PartitionError(f"n must be a positive integer, got {n!r}")
        canon = []
        seen: set[int] = set()
        for raw in blocks:
            block = tuple(sorted(set(int(i) for i in raw)))
            if len(block) != len(tuple(raw)) and len(set(raw)) != len(tuple(raw)):
                raise PartitionError(f"duplicate index inside block {tuple(raw)}")
            if not block:
                raise PartitionError("empty block")
            for i in block:
                if i < 1 or i > n:
                    raise PartitionError(f"index {i} out of range 1..{n}")
                if i in seen:
                    raise PartitionError(f"index {i} appears in more than one block")
                seen.add(i)
            canon.append(block)
        if not canon:
            raise PartitionError("a sub-repartition needs at least one block")
        canon.sort(key=lambda b: b[0])
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "blocks", tuple(canon))

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(i for b in self.blocks for i in b)

    def block_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(b) for b in self.blocks)

    def __str__(self) -> str:
        return "|".join(",".join(str(i) for i in b) for b in self.blocks)

    def __repr__(self) -> str:
        return f"SubRepartition({self.n}, '{self}')"


def parse(text: str, n: int) -> SubRepartition:
    """Parse the grammar ``1,2|3,4|5`` (whitespace ignored, 1-based indices)."""
    if n < 1 or n > MAX_PARSE_N:
        raise PartitionError(f"n={n} outside supported range 1..{MAX_PARSE_N}")
    cleaned = "".join(text.split())
    if not cleaned:
        raise PartitionError("empty partition string")
    blocks = []
    for chunk in cleaned.split("|"):
        if not chunk:
            raise PartitionError(f"empty block in {text!r}")
        items = chunk.split(",")
        if any(not s for s in items):
            raise PartitionError(f"empty index in {text!r}")
        try:
            block = [int(s) for s in items]
        except ValueError as exc:
            raise PartitionError(f"non-integer index in {text!r}") from exc
        if len(set(block)) != len(block):
            raise PartitionError(f"duplicate index inside block {chunk!r}")
        blocks.append(block)
    return SubRepartition(n, blocks)


# ---------------------------------------------------------------------------
# enumeration helpers


def set_partitions(items: Sequence) -> Iterator[list[list]]:
    """All partitions of items into unordered non-empty groups."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def partitions_into_k(items: Sequence, k: int) -> Iterator[list[list]]:
    """All partitions of items into exactly k non-empty groups."""
    for part in set_partitions(items):
        if len(part) == k:
            yield part


def _nonempty_subsets(items: Sequence) -> Iterator[tuple]:
    items = list(items)
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


def enumerate_subrepartitions_of(indices: Sequence[int], n: int) -> list[SubRepartition]:
    """All sub-repartitions whose support lies inside the given index set."""
    indices = sorted(set(int(i) for i in indices))
    out = []
    for subset in _nonempty_subsets(indices):
        for part in set_partitions(subset):
            out.append(SubRepartition(n, part))
    return out


def enumerate_subrepartitions(n: int) -> list[SubRepartition]:
    """All sub-repartitions of {1..n}; count is Bell(n+1) - 1."""
    if n < 1 or n > MAX_PARSE_N:
        raise PartitionError(f"n={n} outside supported range 1..{MAX_PARSE_N}")
    return _enumerate_cached(n)


@lru_cache(maxsize=None)
def _enumerate_cached(n: int) -> list[SubRepartition]:
    return enumerate_subrepartitions_of(range(1, n + 1), n)


# ---------------------------------------------------------------------------
# basic coarsening relations


def coarser_basic(q: SubRepartition, p: SubRepartition, kind: str) -> bool:
    """One-step coarsening test.

    kind 'a': every block of q is literally a block of p.
    kind 'b': every block of q is a union of blocks of p.
    kind 'c': equal block counts and an injective assignment of each q-block
              into a distinct containing p-block.
    """
    if q.n != p.n:
        raise PartitionError(f"mismatched n: {q.n} vs {p.n}")
    qb, pb = q.block_sets(), p.block_sets()
    if kind == "a":
        pset = set(pb)
        return all(b in pset for b in qb)
    if kind == "b":
        for block in qb:
            covered = frozenset().union(*[c for c in pb if c <= block]) if any(
                c <= block for c in pb) else frozenset()
            if covered != block:
                return False
        return True
    if kind == "c":
        if len(qb) != len(pb):
            return False
        assigned = set()
        for block in qb:
            homes = [j for j, c in enumerate(pb) if block <= c]
            if len(homes) != 1:  # disjoint p-blocks: at most one home exists
                return False
            if homes[0] in assigned:
                return False
            assigned.add(homes[0])
        return True
    raise PartitionError(f"unknown basic relation kind {kind!r}")


def depth(p: SubRepartition) -> int:
    """Maximum block cardinality."""
    return max(len(b) for b in p.blocks)


# ---------------------------------------------------------------------------
# chain closure of the basic relations


def _succ_a(p: SubRepartition) -> Iterator[SubRepartition]:
    for fam in _nonempty_subsets(p.blocks):
        yield SubRepartition(p.n, fam)


def _succ_b(p: SubRepartition) -> Iterator[SubRepartition]:
    for fam in _nonempty_subsets(p.blocks):
        for groups in set_partitions(fam):
            yield SubRepartition(p.n, [sorted(itertools.chain(*g)) for g in groups])


def _succ_c(p: SubRepartition) -> Iterator[SubRepartition]:
    per_block = [list(_nonempty_subsets(b)) for b in p.blocks]
    for choice in itertools.product(*per_block):
        yield SubRepartition(p.n, choice)


def _one_step_coarser(p: SubRepartition) -> set[SubRepartition]:
    out: set[SubRepartition] = set()
    out.update(_succ_a(p))
    out.update(_succ_b(p))
    out.update(_succ_c(p))
    return out


@lru_cache(maxsize=None)
def _downset(p: SubRepartition) -> frozenset[SubRepartition]:
    """Everything reachable from p by chains of basic coarsening steps."""
    seen = {p}
    queue = [p]
    while queue:
        cur = queue.pop()
        for nxt in _one_step_coarser(cur):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return frozenset(seen)


def coarser(q: SubRepartition, p: SubRepartition) -> bool:
    """Chain closure: true iff finitely many basic steps lead from q up to p."""
    if q.n != p.n:
        raise PartitionError(f"mismatched n: {q.n} vs {p.n}")
    if q.n > MAX_CLOSURE_N:
        raise PartitionError(f"closure queries supported up to n={MAX_CLOSURE_N}")
    if q == p:
        return True
    if not q.support <= p.support:
        return False
    return q in _downset(p)


def bounded_coarsenings(p: SubRepartition, k: int) -> list[SubRepartition]:
    """All partitions of p's blocks where each group unions at most k blocks."""
    if k < 1:
        raise PartitionError(f"bound k must be >= 1, got {k}")
    out = []
    for groups in set_partitions(p.blocks):
        if max(len(g) for g in groups) <= k:
            out.append(SubRepartition(p.n, [sorted(itertools.chain(*g)) for g in groups]))
    out.sort(key=str)
    return out


# ---------------------------------------------------------------------------
# k-entanglement hierarchy


@dataclass(frozen=True)
class TaggedPartition:
    """A sub-repartition with an entanglement level tag k >= 2."""

    k: int
    part: SubRepartition

    def __post_init__(self):
        if self.k < 2:
            raise PartitionError(f"level k must be >= 2, got {self.k}")


@lru_cache(maxsize=None)
def _k_groupings(p: SubRepartition, k: int) -> tuple[SubRepartition, ...]:
    """All ways to group p's blocks into exactly k unioned groups."""
    out = []
    for part in partitions_into_k(p.blocks, k):
        out.append(SubRepartition(p.n, [sorted(itertools.chain(*g)) for g in part]))
    return tuple(out)


def _ke_condition(q: SubRepartition, k1: int, p: SubRepartition, k2: int) -> bool:
    """Universal grouping condition of the tagged (a)/(b) relations: every
    grouping of p's blocks into k2 parts refines some grouping of q's blocks
    into k1 parts.  (The raw hit-count phrasing fails the required reduction
    to the plain closure at full levels; this refinement reading satisfies
    it.)"""
    s_cands = _k_groupings(q, k1)
    if not s_cands:
        return False
    for r_part in _k_groupings(p, k2):
        if not any(coarser(s, r_part) for s in s_cands):
            return False
    return True


def _ke_successors(node: TaggedPartition) -> set[TaggedPartition]:
    k2, p = node.k, node.part
    m = p.block_count
    out: set[TaggedPartition] = set()
    if 2 <= k2 <= m:
        # types (a) and (b): sub-family / block-union coarsenings plus the
        # universal grouping condition
        cands = set(_succ_a(p)) | set(_succ_b(p))
        for q in cands:
            r = q.block_count
            top = min(k2, r)
            if top < 2:
                continue
            for k1 in range(2, top + 1):
                if _ke_condition(q, k1, p, k2):
                    out.add(TaggedPartition(k1, q))
        # type (c): element removal at equal block count
        for q in _succ_c(p):
            for k1 in range(2, k2 + 1):
                out.add(TaggedPartition(k1, q))
    return out


@lru_cache(maxsize=None)
def _ke_downset(node: TaggedPartition) -> frozenset[TaggedPartition]:
    seen = {node}
    queue = [node]
    while queue:
        cur = queue.pop()
        for nxt in _ke_successors(cur):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return frozenset(seen)


def ke_hierarchy(q: TaggedPartition, p: TaggedPartition) -> bool:
    """k-entanglement hierarchy: (q.k, q.part) coarser than (p.k, p.part)."""
    if q.part.n != p.part.n:
        raise PartitionError("mismatched n")
    if q.k > q.part.block_count:
        raise PartitionError(f"level {q.k} exceeds block count {q.part.block_count}")
    if p.k > p.part.block_count:
        raise PartitionError(f"level {p.k} exceeds block count {p.part.block_count}")
    if q == p:
        return True
    return q in _ke_downset(p)


# ---------------------------------------------------------------------------
# k-partite entanglement hierarchy (levels run the other way: k1 >= k2)


def _kpe_max_touch(p: SubRepartition, k2: int, q: SubRepartition) -> int:
    """max over depth-bounded partitions R of p and q-blocks i of the number
    of q-blocks touched by the union of R-groups meeting block i."""
    qb = q.block_sets()
    worst = 0
    for r_part in bounded_coarsenings(p, k2 - 1):
        rb = r_part.block_sets()
        for qi in qb:
            union = frozenset()
            for g in rb:
                if g & qi:
                    union |= g
            touched = sum(1 for qs in qb if qs & union)
            worst = max(worst, touched)
    return worst


def _kpe_successors(node: TaggedPartition) -> set[TaggedPartition]:
    k2, p = node.k, node.part
    m = p.block_count
    out: set[TaggedPartition] = set()
    if k2 > m:
        return out
    # type (a): sub-family selection
    for q in _succ_a(p):
        r = q.block_count
        for k1 in range(max(2, k2), r + 1):
            out.add(TaggedPartition(k1, q))
    # type (b): block unions plus the touch-count condition
    for q in _succ_b(p):
        r = q.block_count
        lo = max(2, k2, _kpe_max_touch(p, k2, q) + 1)
        for k1 in range(lo, r + 1):
            out.add(TaggedPartition(k1, q))
    # type (c): element removal
    for q in _succ_c(p):
        for k1 in range(max(2, k2), q.block_count + 1):
            out.add(TaggedPartition(k1, q))
    return out


@lru_cache(maxsize=None)
def _kpe_downset(node: TaggedPartition) -> frozenset[TaggedPartition]:
    seen = {node}
    queue = [node]
    while queue:
        cur = queue.pop()
        for nxt in _kpe_successors(cur):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return frozenset(seen)


def kpe_hierarchy(q: TaggedPartition, p: TaggedPartition) -> bool:
    """k-partite-entanglement hierarchy; requires 2 <= p.k <= q.k."""
    if q.part.n != p.part.n:
        raise PartitionError("mismatched n")
    if not (2 <= p.k <= q.k):
        raise PartitionError(f"levels must satisfy 2 <= {p.k} <= {q.k}")
    if q == p:
        return True
    return q in _kpe_downset(p)


# ---------------------------------------------------------------------------
# steering hierarchy on (untrusted, trusted) pairs


@dataclass(frozen=True)
class SteeringSplit:
    """A pair of sub-repartitions: untrusted over {1..t}, trusted over {t+1..n}."""

    t: int
    n: int
    untrusted: SubRepartition
    trusted: SubRepartition

    def __post_init__(self):
        if not (1 <= self.t < self.n):
            raise PartitionError(f"need 1 <= t < n, got t={self.t}, n={self.n}")
        if self.untrusted.n != self.n or self.trusted.n != self.n:
            raise PartitionError("split members must share the global n")
        if not self.untrusted.support <= frozenset(range(1, self.t + 1)):
            raise PartitionError("untrusted support must lie in {1..t}")
        if not self.trusted.support <= frozenset(range(self.t + 1, self.n + 1)):
            raise PartitionError("trusted support must lie in {t+1..n}")


def _steer_side_candidates(t: int, n: int, trusted: bool) -> list[SubRepartition]:
    rng = range(t + 1, n + 1) if trusted else range(1, t + 1)
    return enumerate_subrepartitions_of(rng, n)


def _steer_successors(node: SteeringSplit) -> set[SteeringSplit]:
    p1, q1 = node.untrusted, node.trusted
    u_side = []
    for cand in _steer_side_candidates(node.t, node.n, trusted=False):
        # untrusted side: forward types a and c, reversed type b
        if (coarser_basic(cand, p1, "a") or coarser_basic(cand, p1, "c")
                or coarser_basic(p1, cand, "b")):
            u_side.append(cand)
    t_side = []
    for cand in _steer_side_candidates(node.t, node.n, trusted=True):
        if any(coarser_basic(cand, q1, kind) for kind in "abc"):
            t_side.append(cand)
    return {SteeringSplit(node.t, node.n, u, t) for u in u_side for t in t_side}


@lru_cache(maxsize=None)
def _steer_downset(node: SteeringSplit) -> frozenset[SteeringSplit]:
    seen = {node}
    queue = [node]
    while queue:
        cur = queue.pop()
        for nxt in _steer_successors(cur):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return frozenset(seen)


def steering_hierarchy(x: SteeringSplit, y: SteeringSplit) -> bool:
    """True iff a chain of the nine basic steering relations links x to y."""
    if (x.t, x.n) != (y.t, y.n):
        raise PartitionError("mismatched steering index ranges")
    if x == y:
        return True
    return x in _steer_downset(y)


# ---------------------------------------------------------------------------
# complementarity set for monogamy scans


def _strict_outside_parts(n: int, t_blocks: Sequence[tuple[int, ...]],
                          min_blocks: int) -> set[SubRepartition]:
    """Coarsenings of the outside blocks where every result block is either a
    subset of one outside block or an exact union of several whole ones."""
    out: set[SubRepartition] = set()
    for fam in _nonempty_subsets(t_blocks):
        for groups in set_partitions(fam):
            per_group = []
            for g in groups:
                if len(g) == 1:
                    per_group.append(list(_nonempty_subsets(g[0])))
                else:
                    per_group.append([tuple(sorted(itertools.chain(*g)))])
            for choice in itertools.product(*per_group):
                if len(choice) >= min_blocks:
                    out.add(SubRepartition(n, choice))
    return out


def _block_level_parts(n: int, t_blocks: Sequence[tuple[int, ...]]) -> set[SubRepartition]:
    """Partitions of non-empty sub-families of the outside blocks, no removals."""
    out: set[SubRepartition] = set()
    for fam in _nonempty_subsets(t_blocks):
        for groups in set_partitions(fam):
            out.add(SubRepartition(n, [sorted(itertools.chain(*g)) for g in groups]))
    return out


def complementarity(p: SubRepartition, q: SubRepartition) -> set[SubRepartition]:
    """The complementarity of q up to p: sub-repartitions coarser than p that
    are incomparable with q, with q's blocks merged into a single party when
    they appear together.

    Pinned to the case where q's blocks form a sub-family of p's blocks; other
    q <= p configurations raise ComplementarityUnsupported instead of guessing.
    Only members with at least two blocks are returned (one-party families
    carry no correlation to measure).
    """
    if not coarser(q, p):
        raise PartitionError("complementarity requires q coarser than p")
    p_blocks = set(p.blocks)
    if not set(q.blocks) <= p_blocks:
        raise ComplementarityUnsupported(
            f"q={q} is not a sub-family of p={p}; reading not pinned for this case")
    outside = tuple(b for b in p.blocks if b not in set(q.blocks))
    result: set[SubRepartition] = set()
    # no q content: >= 2 outside blocks
    result |= _strict_outside_parts(p.n, outside, min_blocks=2)
    # exactly one q-block joins an outside coarsening
    if outside:
        singles = _strict_outside_parts(p.n, outside, min_blocks=1)
        for qb in q.blocks:
            for rest in singles:
                result.add(SubRepartition(p.n, (qb,) + rest.blocks))
        # all q-blocks merged into one party next to whole outside blocks
        if q.block_count >= 2:
            merged = tuple(sorted(itertools.chain(*q.blocks)))
            for rest in _block_level_parts(p.n, outside):
                result.add(SubRepartition(p.n, (merged,) + rest.blocks))
    # safety net: drop anything comparable with q in either direction
    return {r for r in result
            if r.block_count >= 2 and not coarser(r, q) and not coarser(q, r)}
