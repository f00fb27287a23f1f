"""Budgeted pinning: greedy target selection, exhaustive oracle, random study."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import Snapshot, TemporalNetwork
from .pinning import PinCostOracle, from_mask
from .propagation import propagate

DEFAULT_ENUMERATION_CAP = 10**7


class BudgetTooLarge(RuntimeError):
    def __init__(self, count, cap):
        self.count = count
        self.cap = cap
        super().__init__(f"brute force would enumerate {count} pin sets (cap {cap})")


@dataclass(frozen=True)
class GreedyResult:
    target_set: frozenset[int]
    pin_set: frozenset[int]
    synced_count: int


def greedy_max_sync(tn: TemporalNetwork, p: int) -> GreedyResult:
    """Grow a target set ``X`` one node at a time, always taking the node whose
    addition needs the fewest pins, while the pin count stays within ``p``.

    Ties go to the smallest node id. The headline number is the size of the
    synchronised set produced by pinning ``f~(X)``, which may exceed ``|X|``.
    """
    if p < 0:
        raise ValueError("budget must be non-negative")
    oracle = PinCostOracle(tn)
    N = tn.num_nodes
    X = 0
    cand = 0  # the node chosen last round, as a mask (empty on entry)
    while oracle.pins_mask(X | cand).bit_count() <= p and X.bit_count() <= N:
        X |= cand
        rest = [j for j in range(N) if not X >> j & 1]
        if not rest:
            break
        costs = [oracle.pins_mask(X | 1 << j).bit_count() for j in rest]
        cand = 1 << rest[int(np.argmin(costs))]
    pins = from_mask(oracle.pins_mask(X))
    synced = propagate(tn, pins).final
    return GreedyResult(from_mask(X), pins, len(synced))


def brute_force_max_sync(
    tn: TemporalNetwork, p: int, cap: int = DEFAULT_ENUMERATION_CAP, backend=None
) -> tuple[int, frozenset[int]]:
    """Best ``|S_T|`` over every pin set of size at most ``p``.

    Returns the count and the lexicographically smallest optimal pin set
    (comparing sorted node tuples).
    """
    if p < 0:
        raise ValueError("budget must be non-negative")
    N = tn.num_nodes
    total = kernels.count_subsets(N, p)
    if total > cap:
        raise BudgetTooLarge(total, cap)
    masks = kernels.subset_masks(N, p)
    order, pred, is_root = kernels.compile_network(tn)
    final = kernels.propagate_batch(masks, order, pred, is_root, backend)
    counts = kernels.popcount(final)
    best = int(counts.max())
    winners = [tuple(sorted(from_mask(int(m)))) for m in masks[counts == best]]
    return best, frozenset(min(winners))


def best_over_targets(tn: TemporalNetwork, p: int) -> int:
    """max over target sets ``X`` with ``f(X) <= p`` of ``|S_T(f~(X))|``; exponential in N."""
    oracle = PinCostOracle(tn)
    order, pred, is_root = kernels.compile_network(tn)
    best = 0
    for X in range(1 << tn.num_nodes):
        pins = oracle.pins_mask(X)
        if pins.bit_count() <= p:
            fin = kernels.propagate_batch(np.array([pins]), order, pred, is_root)[0]
            best = max(best, int(fin).bit_count())
    return best


# -- random instances ---------------------------------------------------------


@dataclass(frozen=True)
class RandomSpec:
    num_nodes: int
    num_snapshots: int = 5
    edge_prob: float = 0.2
    seed: int = 0
    tau: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge_prob must lie in [0, 1]")
        if self.num_nodes < 1 or self.num_snapshots < 1:
            raise ValueError("need at least one node and one snapshot")


def random_temporal_network(spec: RandomSpec) -> TemporalNetwork:
    """Random DAG snapshots drawn with numpy's PCG64 (``default_rng(seed)``).

    Per snapshot: shuffle the nodes into a random order, then keep each pair
    ``(order[a], order[b])`` with ``a < b`` as an edge with probability
    ``edge_prob``, scanning pairs row by row.
    """
    rng = np.random.default_rng(spec.seed)
    N = spec.num_nodes
    iu, ju = np.triu_indices(N, k=1)
    snaps = []
    for _ in range(spec.num_snapshots):
        perm = rng.permutation(N) + 1
        keep = rng.random(iu.size) < spec.edge_prob
        edges = tuple((int(perm[a]), int(perm[b])) for a, b in zip(iu[keep], ju[keep]))
        snaps.append(Snapshot(N, edges))
    return TemporalNetwork(N, tuple(snaps), spec.tau)


# -- the greedy-vs-optimal study ------------------------------------------------

STUDY_COLUMNS = ("instance_index", "seed", "N", "T", "p", "greedy_count", "optimal_count", "match")


@dataclass(frozen=True)
class StudyRow:
    instance_index: int
    seed: int
    N: int
    T: int
    p: int
    greedy_count: int
    optimal_count: int

    @property
    def match(self) -> bool:
        return self.greedy_count == self.optimal_count


@dataclass(frozen=True)
class StudyReport:
    rows: tuple[StudyRow, ...]

    @property
    def match_rate(self) -> float:
        return sum(r.match for r in self.rows) / len(self.rows) if self.rows else float("nan")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(STUDY_COLUMNS)
        for r in self.rows:
            w.writerow(
                [r.instance_index, r.seed, r.N, r.T, r.p, r.greedy_count, r.optimal_count, int(r.match)]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> StudyReport:
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(h.strip() for h in header) != STUDY_COLUMNS:
            raise ValueError(f"unexpected study header {header}")
        rows = []
        for rec in reader:
            if not rec:
                continue
            vals = [int(x) for x in rec]
            row = StudyRow(*vals[:7])
            if int(row.match) != vals[7]:
                raise ValueError(f"inconsistent match flag in row {rec}")
            rows.append(row)
        return cls(tuple(rows))


def _study_instance(args):
    idx, seed, n, t, p, edge_prob, cap = args
    tn = random_temporal_network(RandomSpec(n, t, edge_prob, seed))
    g = greedy_max_sync(tn, p)
    best, _ = brute_force_max_sync(tn, p, cap)
    return StudyRow(idx, seed, n, t, p, g.synced_count, best)


def study_plan(count, n_range=(15, 20), t=5, p_range=(1, 5), edge_prob=0.2, seed=0, cap=DEFAULT_ENUMERATION_CAP):
    """Instance parameters; node counts, budgets and per-instance seeds are
    drawn uniformly (inclusive ranges) from ``default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    plan = []
    for idx in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        p = int(rng.integers(p_range[0], p_range[1] + 1))
        inst_seed = int(rng.integers(0, 2**63 - 1))
        plan.append((idx, inst_seed, n, t, min(p, n), edge_prob, cap))
    return plan


def reproduce_study(
    count=120, n_range=(15, 20), t=5, p_range=(1, 5), edge_prob=0.2, seed=0,
    cap=DEFAULT_ENUMERATION_CAP, jobs=1,
) -> StudyReport:
    plan = study_plan(count, n_range, t, p_range, edge_prob, seed, cap)
    for _, _, n, _, p, _, _ in plan:
        total = kernels.count_subsets(n, p)
        if total > cap:
            raise BudgetTooLarge(total, cap)
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_study_instance, plan))
    else:
        rows = [_study_instance(a) for a in plan]
    rows.sort(key=lambda r: r.instance_index)
    return StudyReport(tuple(rows))
