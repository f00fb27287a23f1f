from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from temposync.graph import Snapshot, TemporalNetwork, vdp5_network
from temposync.greedy import RandomSpec, random_temporal_network

NETWORKS = Path(__file__).resolve().parent.parent / "networks"


@pytest.fixture
def vdp5():
    return vdp5_network()


@pytest.fixture
def vdp5_file():
    return NETWORKS / "vdp5.json"


def three_node_network():
    # 3 nodes, 3 snapshots; roots are {3}, {1, 2}, {2, 3}
    return TemporalNetwork.from_edge_lists(3, [[(3, 1), (1, 2)], [(2, 3)], [(3, 1), (2, 1)]])


def random_network(seed, n_range=(5, 12), t_range=(2, 6), probs=(0.1, 0.2, 0.3)):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    t = int(rng.integers(t_range[0], t_range[1] + 1))
    p = float(rng.choice(probs))
    return random_temporal_network(RandomSpec(n, t, p, int(rng.integers(2**31))))


def naive_step(prev, g: Snapshot):
    """Fixed-point iteration of the synchronisation rule; no topological order."""
    roots = {v for v in g.nodes if not any(e[1] == v for e in g.edges)}
    preds = {v: {a for a, b in g.edges if b == v} for v in g.nodes}
    cur = set(prev) & roots
    changed = True
    while changed:
        changed = False
        for v in g.nodes:
            if v not in cur and v not in roots and preds[v] <= cur:
                cur.add(v)
                changed = True
    return cur


def naive_final(tn, s0):
    s = set(s0)
    for g in tn.snapshots:
        s = naive_step(s, g)
    return s


def all_subsets(nodes, max_size=None):
    nodes = sorted(nodes)
    top = len(nodes) if max_size is None else min(max_size, len(nodes))
    for r in range(top + 1):
        yield from (set(c) for c in combinations(nodes, r))
