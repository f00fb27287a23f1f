"""Minimum pinning sets: backward requirement closure and its LP relaxation.

The combinatorial solver is authoritative. The LP is built from the fused
Laplacian, solved with :mod:`temposync.simplex`, and cross-checked against the
closure to confirm the relaxation is integral.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import TemporalNetwork, ancestors_or_self, build_fused, fused_laplacian, roots
from .simplex import NumericalFailure, linprog_bounded

INTEGRALITY_TOL = 1e-9

PinSet = frozenset


def min_pin_set(tn: TemporalNetwork, target=None) -> frozenset[int]:
    """Smallest pin set whose forward propagation contains ``target`` at time T.

    ``target`` defaults to every node. Walking back from layer T, the nodes
    required in a snapshot are closed under ancestors; only the roots of that
    snapshot carry the requirement to the previous layer.
    """
    req = set(tn.nodes if target is None else target)
    for g in reversed(tn.snapshots):
        if not req:
            break
        closure = ancestors_or_self(g, req)
        req = closure & roots(g)
        # a DAG closure always contains at least one root
        assert req or not closure
    return frozenset(req)


def f_cost(tn: TemporalNetwork, x) -> int:
    return len(min_pin_set(tn, x))


class PinCostOracle:
    """Bitmask version of :func:`min_pin_set` for repeated queries.

    For each snapshot and node, precomputes the mask of that snapshot's roots
    among the node's ancestors-or-self; one backward step is then an OR over
    the required nodes.
    """

    def __init__(self, tn: TemporalNetwork):
        self.num_nodes = tn.num_nodes
        self._layers = []
        for g in tn.snapshots:
            r = roots(g)
            masks = [0] * (tn.num_nodes + 1)
            for v in tn.nodes:
                m = 0
                for u in ancestors_or_self(g, (v,)) & r:
                    m |= 1 << (u - 1)
                masks[v] = m
            self._layers.append(masks)
        self._layers.reverse()

    def pins_mask(self, target_mask: int) -> int:
        req = target_mask
        for masks in self._layers:
            nxt = 0
            v = 1
            while req:
                if req & 1:
                    nxt |= masks[v]
                req >>= 1
                v += 1
            req = nxt
        return req

    def pins(self, target) -> frozenset[int]:
        m = self.pins_mask(to_mask(target))
        return from_mask(m)

    def cost(self, target) -> int:
        return self.pins_mask(to_mask(target)).bit_count()


def to_mask(nodes) -> int:
    m = 0
    for v in nodes:
        m |= 1 << (v - 1)
    return m


def from_mask(m: int) -> frozenset[int]:
    out = []
    v = 1
    while m:
        if m & 1:
            out.append(v)
        m >>= 1
        v += 1
    return frozenset(out)


# -- LP relaxation ------------------------------------------------------------


@dataclass(frozen=True)
class LpProblem:
    """``min c@s`` s.t. ``A_ub@s <= 0``, ``A_eq@s == b_eq``, ``0 <= s <= upper``.

    Variable ``s[k*N + i-1]`` is the synchronisation indicator of node ``i`` at
    time ``k * tau``; ``A_ub`` is the fused Laplacian.
    """

    num_nodes: int
    num_layers: int
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    upper: np.ndarray
    eq_names: tuple[str, ...] = ()

    @property
    def num_vars(self) -> int:
        return self.c.size

    def var_name(self, idx: int) -> str:
        k, i = divmod(idx, self.num_nodes)
        return f"s_{i + 1}_{k}"

    def to_lp_format(self) -> str:
        """CPLEX LP text. Rows ``lap_i_k`` are fused-Laplacian rows,
        ``sync_all``/``target_i`` the terminal equalities."""

        def expr(row):
            terms = []
            for j in np.flatnonzero(row):
                a = row[j]
                sign = "-" if a < 0 else "+"
                mag = abs(a)
                coef = "" if mag == 1 else f"{mag:g} "
                terms.append(f"{sign} {coef}{self.var_name(j)}")
            if not terms:
                return "0 " + self.var_name(0)
            s = " ".join(terms)
            return s[2:] if s.startswith("+ ") else "-" + s[2:]

        lines = ["\\ minimum pinning set relaxation", "Minimize", f" pins: {expr(self.c)}", "Subject To"]
        for r in range(self.A_ub.shape[0]):
            k, i = divmod(r, self.num_nodes)
            lines.append(f" lap_{i + 1}_{k}: {expr(self.A_ub[r])} <= {self.b_ub[r]:g}")
        for r in range(self.A_eq.shape[0]):
            lines.append(f" {self.eq_names[r]}: {expr(self.A_eq[r])} = {self.b_eq[r]:g}")
        lines.append("Bounds")
        for j in range(self.num_vars):
            lines.append(f" 0 <= {self.var_name(j)} <= {self.upper[j]:g}")
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible"
    values: np.ndarray
    objective_value: float
    num_nodes: int
    num_layers: int

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def layer(self, k: int) -> np.ndarray:
        n = self.num_nodes
        return self.values[k * n : (k + 1) * n]

    def pins(self, tol: float = INTEGRALITY_TOL) -> frozenset[int]:
        """Layer-0 support: nodes whose pin variable exceeds ``tol``."""
        return frozenset(int(i) + 1 for i in np.flatnonzero(self.layer(0) > tol))


def build_lp(tn: TemporalNetwork, targets=None, forbidden_pins=(), fix_non_targets=True) -> LpProblem:
    """Assemble the relaxation.

    With ``targets=None`` every node must be synchronised at time T (a single
    equality on the sum of layer-T variables). With a target set, layer-T
    variables are fixed individually: 1 inside the set, 0 outside.

    Fixing non-targets to 0 makes the LP infeasible whenever a target's
    in-neighbours in ``G_T`` lie outside the set. ``fix_non_targets=False``
    drops those rows, leaving one equality per target; the optimum is then
    ``f_cost(tn, targets)``.

    ``forbidden_pins`` fixes the listed layer-0 variables to zero through
    their upper bounds.
    """
    N, layers = tn.num_nodes, tn.T + 1
    nv = N * layers
    L = fused_laplacian(build_fused(tn))
    c = np.zeros(nv)
    c[:N] = 1.0
    last = (layers - 1) * N
    if targets is None:
        A_eq = np.zeros((1, nv))
        A_eq[0, last:] = 1.0
        b_eq = np.array([float(N)])
        names = ("sync_all",)
    else:
        targets = frozenset(targets)
        rows = [i for i in tn.nodes if fix_non_targets or i in targets]
        A_eq = np.zeros((len(rows), nv))
        A_eq[np.arange(len(rows)), last + np.array(rows, dtype=int) - 1] = 1.0
        b_eq = np.array([1.0 if i in targets else 0.0 for i in rows])
        names = tuple(f"target_{i}" for i in rows)
    upper = np.ones(nv)
    for i in forbidden_pins:
        upper[i - 1] = 0.0
    return LpProblem(N, layers, c, L, np.zeros(nv), A_eq, b_eq, upper, names)


def solve_lp(lp: LpProblem) -> LpSolution:
    res = linprog_bounded(lp.c, lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq, lp.upper)
    if res.status != "optimal":
        return LpSolution("infeasible", res.x, float("nan"), lp.num_nodes, lp.num_layers)
    x = res.x
    slack = max(
        float(np.max(lp.A_ub @ x - lp.b_ub, initial=0.0)),
        float(np.max(np.abs(lp.A_eq @ x - lp.b_eq), initial=0.0)),
        float(np.max(-x, initial=0.0)),
        float(np.max(x - lp.upper, initial=0.0)),
    )
    if slack > INTEGRALITY_TOL:
        raise NumericalFailure(f"LP solution violates constraints by {slack:.3g}")
    return LpSolution("optimal", x, res.fun, lp.num_nodes, lp.num_layers)


def verify_integrality(lp_sol: LpSolution, comb, tol: float = INTEGRALITY_TOL) -> bool:
    """True iff the LP optimum is 0/1 everywhere and pins exactly ``comb``."""
    if not lp_sol.optimal:
        return False
    v = lp_sol.values
    if not np.all(np.minimum(np.abs(v), np.abs(v - 1.0)) <= tol):
        return False
    return lp_sol.pins(0.5) == frozenset(comb)
