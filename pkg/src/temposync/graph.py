"""Temporal networks built from DAG snapshots.

Nodes are numbered ``1..N``. Edges are stored in the direction influence
flows: ``(u, v)`` means ``u`` drives ``v``. In adjacency terms that is
``A[v, u] = 1``, so row ``v`` of the Laplacian ``L = D - A`` carries the
in-degree of ``v`` on the diagonal and ``-1`` in every in-neighbour column.
(Texts that write edges as ``(receiver, sender)`` tuples use the reverse
order; translate ``(i, j)`` to the stored edge ``(j, i)``.)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


class GraphError(ValueError):
    """Base class for malformed snapshots and network files."""


class NetworkFormatError(GraphError):
    """The document is not a well-formed network file (as opposed to an invalid graph)."""


class CycleDetected(GraphError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        path = " -> ".join(str(v) for v in self.cycle + self.cycle[:1])
        super().__init__(f"directed cycle: {path}")


class SelfLoop(GraphError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"self-loop on node {node}")


class DuplicateEdge(GraphError):
    def __init__(self, edge):
        self.edge = tuple(edge)
        super().__init__(f"duplicate edge {self.edge[0]}->{self.edge[1]}")


class NodeOutOfRange(GraphError):
    def __init__(self, node, num_nodes):
        self.node = node
        self.num_nodes = num_nodes
        super().__init__(f"node {node} outside 1..{num_nodes}")


@dataclass(frozen=True)
class Snapshot:
    """One interaction graph. Construction does not validate; see
    :func:`validate_snapshot`."""

    num_nodes: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))

    @cached_property
    def in_neighbors(self) -> tuple[tuple[int, ...], ...]:
        """``in_neighbors[v]`` lists the sources of edges into ``v`` (index 0 unused)."""
        preds: list[list[int]] = [[] for _ in range(self.num_nodes + 1)]
        for u, v in self.edges:
            preds[v].append(u)
        return tuple(tuple(sorted(p)) for p in preds)

    @cached_property
    def out_neighbors(self) -> tuple[tuple[int, ...], ...]:
        succ: list[list[int]] = [[] for _ in range(self.num_nodes + 1)]
        for u, v in self.edges:
            succ[u].append(v)
        return tuple(tuple(sorted(s)) for s in succ)

    def in_degree(self, v: int) -> int:
        return len(self.in_neighbors[v])

    @property
    def nodes(self) -> range:
        return range(1, self.num_nodes + 1)


def _find_cycle(g: Snapshot) -> list[int] | None:
    """Return one directed cycle as a node list, or None."""
    white, grey, black = 0, 1, 2
    colour = [white] * (g.num_nodes + 1)
    parent = [0] * (g.num_nodes + 1)
    succ = g.out_neighbors
    for start in g.nodes:
        if colour[start] != white:
            continue
        colour[start] = grey
        stack = [(start, iter(succ[start]))]
        while stack:
            u, it = stack[-1]
            for v in it:
                if colour[v] == white:
                    colour[v] = grey
                    parent[v] = u
                    stack.append((v, iter(succ[v])))
                    break
                if colour[v] == grey:
                    cycle = [u]
                    while cycle[-1] != v:
                        cycle.append(parent[cycle[-1]])
                    cycle.reverse()
                    return cycle
            else:
                colour[u] = black
                stack.pop()
    return None


def validate_snapshot(g: Snapshot) -> None:
    """Raise a :class:`GraphError` subclass unless ``g`` is a simple DAG on ``1..N``."""
    if g.num_nodes < 1:
        raise GraphError("a snapshot needs at least one node")
    seen = set()
    for u, v in g.edges:
        for w in (u, v):
            if not 1 <= w <= g.num_nodes:
                raise NodeOutOfRange(w, g.num_nodes)
        if u == v:
            raise SelfLoop(u)
        if (u, v) in seen:
            raise DuplicateEdge((u, v))
        seen.add((u, v))
    cycle = _find_cycle(g)
    if cycle is not None:
        raise CycleDetected(cycle)


def roots(g: Snapshot) -> frozenset[int]:
    """Nodes with no incoming edge."""
    preds = g.in_neighbors
    return frozenset(v for v in g.nodes if not preds[v])


def topological_order(g: Snapshot, reverse_ties: bool = False) -> list[int]:
    """Kahn's algorithm. Ties go to the smallest id, or the largest if
    ``reverse_ties`` (handy for checking order independence)."""
    import heapq

    sign = -1 if reverse_ties else 1
    indeg = [0] * (g.num_nodes + 1)
    for _, v in g.edges:
        indeg[v] += 1
    heap = [sign * v for v in g.nodes if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = sign * heapq.heappop(heap)
        order.append(u)
        for v in g.out_neighbors[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, sign * v)
    if len(order) != g.num_nodes:
        raise CycleDetected(_find_cycle(g) or [])
    return order


def ancestors_or_self(g: Snapshot, nodes) -> set[int]:
    """Every node with a directed path (possibly empty) into ``nodes``."""
    out = set(nodes)
    stack = list(out)
    preds = g.in_neighbors
    while stack:
        v = stack.pop()
        for u in preds[v]:
            if u not in out:
                out.add(u)
                stack.append(u)
    return out


def laplacian(g: Snapshot) -> np.ndarray:
    """``D - A`` with ``A[v, u] = 1`` for every stored edge ``u -> v``."""
    n = g.num_nodes
    L = np.zeros((n, n))
    for u, v in g.edges:
        L[v - 1, u - 1] -= 1.0
        L[v - 1, v - 1] += 1.0
    return L


def propagation_depth(g: Snapshot) -> int:
    """Number of edges on the longest directed path (0 when edgeless)."""
    longest = [0] * (g.num_nodes + 1)
    for u in topological_order(g):
        for v in g.out_neighbors[u]:
            longest[v] = max(longest[v], longest[u] + 1)
    return max(longest[1:], default=0)


@dataclass(frozen=True)
class TemporalNetwork:
    num_nodes: int
    snapshots: tuple[Snapshot, ...]
    tau: float = 1.0

    def __post_init__(self):
        snaps = tuple(
            s if isinstance(s, Snapshot) else Snapshot(self.num_nodes, tuple(s))
            for s in self.snapshots
        )
        object.__setattr__(self, "snapshots", snaps)
        if self.num_nodes < 1:
            raise GraphError("num_nodes must be >= 1")
        if not snaps:
            raise GraphError("a temporal network needs at least one snapshot")
        if not self.tau > 0:
            raise GraphError(f"tau must be positive, got {self.tau}")
        for k, s in enumerate(snaps, start=1):
            if s.num_nodes != self.num_nodes:
                raise GraphError(
                    f"snapshot {k} has {s.num_nodes} nodes, network has {self.num_nodes}"
                )
            validate_snapshot(s)

    @classmethod
    def from_edge_lists(cls, num_nodes: int, edge_lists, tau: float = 1.0) -> TemporalNetwork:
        return cls(num_nodes, tuple(Snapshot(num_nodes, tuple(map(tuple, e))) for e in edge_lists), tau)

    @property
    def T(self) -> int:
        return len(self.snapshots)

    @property
    def nodes(self) -> range:
        return range(1, self.num_nodes + 1)

    @property
    def all_nodes(self) -> frozenset[int]:
        return frozenset(self.nodes)

    def to_dict(self) -> dict:
        return {
            "num_nodes": self.num_nodes,
            "tau": self.tau,
            "snapshots": [{"edges": [list(e) for e in s.edges]} for s in self.snapshots],
        }

    @classmethod
    def from_dict(cls, data: dict) -> TemporalNetwork:
        n, tau, snaps = parse_network_document(data)
        if n < 1:
            raise NetworkFormatError("num_nodes must be >= 1")
        if not snaps:
            raise NetworkFormatError("a temporal network needs at least one snapshot")
        if not tau > 0:
            raise NetworkFormatError(f"tau must be positive, got {tau}")
        return cls(n, tuple(snaps), tau)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> TemporalNetwork:
        return cls.from_dict(_decode(text))


def _decode(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"not valid JSON: {exc}") from None


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def parse_network_document(data) -> tuple[int, float, list[Snapshot]]:
    """Check the document layout and return ``(num_nodes, tau, snapshots)``
    without validating the graphs themselves."""
    if not isinstance(data, dict):
        raise NetworkFormatError("network document must be a JSON object")
    for key in ("num_nodes", "snapshots"):
        if key not in data:
            raise NetworkFormatError(f"missing field {key!r}")
    n = data["num_nodes"]
    tau = data.get("tau", 1.0)
    raw = data["snapshots"]
    if not _is_int(n):
        raise NetworkFormatError("num_nodes must be an integer")
    if not isinstance(tau, (int, float)) or isinstance(tau, bool):
        raise NetworkFormatError("tau must be a number")
    if not isinstance(raw, list):
        raise NetworkFormatError("snapshots must be an array")
    snaps = []
    for k, s in enumerate(raw, start=1):
        edges = s.get("edges") if isinstance(s, dict) else None
        if not isinstance(edges, list):
            raise NetworkFormatError(f"snapshot {k}: 'edges' must be an array")
        for e in edges:
            if not isinstance(e, list) or len(e) != 2 or not all(_is_int(w) for w in e):
                raise NetworkFormatError(f"snapshot {k}: edge {e!r} is not an integer pair")
        snaps.append(Snapshot(n, tuple(tuple(e) for e in edges)))
    return n, tau, snaps


def read_network_document(path) -> tuple[int, float, list[Snapshot]]:
    return parse_network_document(_decode(Path(path).read_text()))


def load_network(path) -> TemporalNetwork:
    return TemporalNetwork.loads(Path(path).read_text())


def save_network(tn: TemporalNetwork, path) -> None:
    Path(path).write_text(tn.dumps())


def vdp5_network(tau: float = 1.0) -> TemporalNetwork:
    """The five-oscillator, five-snapshot reference network shipped as ``networks/vdp5.json``."""
    return TemporalNetwork.from_edge_lists(
        5,
        [
            [(2, 3), (5, 4)],
            [(4, 2), (5, 4)],
            [(2, 4), (3, 5)],
            [(2, 5), (2, 4)],
            [(1, 4), (3, 5), (3, 2)],
        ],
        tau=tau,
    )


# -- fused graph --------------------------------------------------------------


@dataclass(frozen=True)
class FusedGraph:
    """Layered stack of the snapshots plus a pinning layer 0.

    Fused node ``(i, k)`` has flat index ``k * N + (i - 1)``. Layer ``k >= 1``
    holds the edges of ``G_k``; each root ``r`` of ``G_k`` additionally gets an
    edge ``(r, k-1) -> (r, k)``.
    """

    num_nodes: int
    num_layers: int
    intra_edges: tuple[tuple[tuple[int, int], ...], ...]
    inter_edges: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    layer_roots: tuple[frozenset[int], ...] = field(default=())

    def index(self, node: int, layer: int) -> int:
        return layer * self.num_nodes + (node - 1)

    def node_of(self, idx: int) -> tuple[int, int]:
        layer, i = divmod(idx, self.num_nodes)
        return i + 1, layer

    @property
    def size(self) -> int:
        return self.num_nodes * self.num_layers

    def edges(self):
        """All fused edges as ``((u, ku), (v, kv))`` pairs."""
        for k, layer in enumerate(self.intra_edges):
            for u, v in layer:
                yield (u, k), (v, k)
        yield from self.inter_edges


def build_fused(tn: TemporalNetwork) -> FusedGraph:
    intra = [()]
    inter = []
    layer_roots = [frozenset()]
    for k, g in enumerate(tn.snapshots, start=1):
        intra.append(g.edges)
        r = roots(g)
        layer_roots.append(r)
        inter.extend(((i, k - 1), (i, k)) for i in sorted(r))
    return FusedGraph(tn.num_nodes, tn.T + 1, tuple(intra), tuple(inter), tuple(layer_roots))


def fused_laplacian(fg: FusedGraph) -> np.ndarray:
    m = fg.size
    L = np.zeros((m, m))
    for (u, ku), (v, kv) in fg.edges():
        a, b = fg.index(u, ku), fg.index(v, kv)
        L[b, a] -= 1.0
        L[b, b] += 1.0
    return L
