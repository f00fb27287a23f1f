"""Discrete synchronisation propagation and the fused-graph sufficiency test."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import Snapshot, TemporalNetwork, build_fused, roots, topological_order


@dataclass(frozen=True)
class SyncState:
    """``sets[k]`` is the synchronised set at time ``k * tau`` (``k = 0..T``)."""

    sets: tuple[frozenset[int], ...]

    @property
    def initial(self) -> frozenset[int]:
        return self.sets[0]

    @property
    def final(self) -> frozenset[int]:
        return self.sets[-1]

    def __getitem__(self, k: int) -> frozenset[int]:
        return self.sets[k]

    def __len__(self) -> int:
        return len(self.sets)

    def indicator(self, num_nodes: int) -> list[list[int]]:
        """0/1 matrix ``s[k][i-1]``."""
        return [[int(i in s) for i in range(1, num_nodes + 1)] for s in self.sets]


def propagate_snapshot(prev, g: Snapshot, order=None) -> frozenset[int]:
    """Synchronised set at the end of snapshot ``g`` given the set at its start.

    Roots keep their previous status. Any other node is synchronised exactly
    when all of its in-neighbours are; its own previous status is discarded.
    """
    prev = frozenset(prev)
    if order is None:
        order = topological_order(g)
    preds = g.in_neighbors
    synced = set()
    for v in order:
        p = preds[v]
        if not p:
            if v in prev:
                synced.add(v)
        elif all(u in synced for u in p):
            synced.add(v)
    return frozenset(synced)


def propagate(tn: TemporalNetwork, s0) -> SyncState:
    sets = [frozenset(s0)]
    for g in tn.snapshots:
        sets.append(propagate_snapshot(sets[-1], g))
    return SyncState(tuple(sets))


@dataclass(frozen=True)
class SufficiencyCheck:
    satisfied: bool
    required: frozenset[int]

    def __bool__(self) -> bool:
        return self.satisfied


def check_sufficient(tn: TemporalNetwork, s0) -> SufficiencyCheck:
    """Sufficient condition for full synchronisation at ``T * tau``.

    Collects the roots of ``G_1`` from which some root copy in layer ``T`` of
    the fused graph is reachable, and reports whether all of them are pinned.
    """
    fg = build_fused(tn)
    T = tn.T
    preds: list[list[int]] = [[] for _ in range(fg.size)]
    for (u, ku), (v, kv) in fg.edges():
        preds[fg.index(v, kv)].append(fg.index(u, ku))

    seen = set()
    stack = [fg.index(r, T) for r in fg.layer_roots[T]]
    seen.update(stack)
    while stack:
        b = stack.pop()
        for a in preds[b]:
            if a not in seen:
                seen.add(a)
                stack.append(a)

    required = frozenset(r for r in roots(tn.snapshots[0]) if fg.index(r, 1) in seen)
    return SufficiencyCheck(required <= frozenset(s0), required)
