import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from temposync.graph import TemporalNetwork
from temposync.pinning import (
    PinCostOracle,
    build_lp,
    f_cost,
    from_mask,
    min_pin_set,
    solve_lp,
    to_mask,
    verify_integrality,
)
from temposync.propagation import propagate

from conftest import all_subsets, naive_final, random_network


def test_min_pin_examples(vdp5):
    assert min_pin_set(vdp5) == {1, 2}
    assert min_pin_set(vdp5, set(range(1, 6))) == {1, 2}
    assert min_pin_set(vdp5, set()) == set()
    assert min_pin_set(vdp5, {4}) == {1}


def test_edgeless_needs_every_node():
    tn = TemporalNetwork.from_edge_lists(4, [[], []])
    assert min_pin_set(tn) == {1, 2, 3, 4}


def test_f_cost(vdp5):
    assert f_cost(vdp5, set()) == 0
    assert f_cost(vdp5, set(range(1, 6))) == 2
    assert f_cost(vdp5, {4}) == 1


def test_masks_roundtrip():
    assert to_mask({1, 3}) == 0b101
    assert from_mask(0b101) == {1, 3}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_min_pin_set_against_exhaustive_search(seed, data):
    tn = random_network(seed, n_range=(3, 7), t_range=(1, 4))
    target = data.draw(st.sets(st.integers(1, tn.num_nodes)))
    best = min_pin_set(tn, target)
    feasible = [s for s in all_subsets(tn.nodes) if target <= naive_final(tn, s)]
    smallest = min(len(s) for s in feasible)
    assert len(best) == smallest
    assert target <= naive_final(tn, best)
    # every working pin set contains the minimum one
    assert all(best <= s for s in feasible)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_oracle_matches_closure(seed, data):
    tn = random_network(seed)
    oracle = PinCostOracle(tn)
    target = data.draw(st.sets(st.integers(1, tn.num_nodes)))
    assert oracle.pins(target) == min_pin_set(tn, target)
    assert oracle.cost(target) == f_cost(tn, target)


def test_lp_dimensions(vdp5):
    lp = build_lp(vdp5)
    assert lp.num_vars == 30
    assert lp.A_ub.shape == (30, 30)
    assert lp.A_eq.shape == (1, 30)
    assert build_lp(vdp5, {4}).A_eq.shape == (5, 30)
    assert (lp.c >= 0).all()


def test_lp_trivial_single_node():
    tn = TemporalNetwork.from_edge_lists(1, [[]])
    lp = build_lp(tn)
    sol = solve_lp(lp)
    assert sol.optimal and sol.objective_value == pytest.approx(1.0, abs=1e-12)
    assert sol.pins() == {1}


def test_lp_vdp5(vdp5):
    sol = solve_lp(build_lp(vdp5))
    assert sol.optimal
    assert abs(sol.objective_value - 2) <= 1e-9
    assert sol.pins() == {1, 2}
    assert verify_integrality(sol, min_pin_set(vdp5))
    assert not verify_integrality(sol, {1})


def test_lp_targets_fixing_non_targets_can_be_infeasible(vdp5):
    # reaching node 4 forces node 1 synchronised at the end as well
    sol = solve_lp(build_lp(vdp5, {4}))
    assert sol.status == "infeasible"
    assert not verify_integrality(sol, {1})
    free = solve_lp(build_lp(vdp5, {4}, fix_non_targets=False))
    assert free.pins() == {1}
    assert abs(free.objective_value - 1) <= 1e-9


def test_lp_forbidden_pins_infeasible(vdp5):
    sol = solve_lp(build_lp(vdp5, forbidden_pins=range(1, 6)))
    assert sol.status == "infeasible"
    assert not verify_integrality(sol, set())


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_lp_matches_combinatorial(seed):
    tn = random_network(seed, n_range=(5, 9))
    sol = solve_lp(build_lp(tn))
    comb = min_pin_set(tn)
    assert sol.optimal
    assert abs(sol.objective_value - len(comb)) <= 1e-9
    assert verify_integrality(sol, comb)
    # the LP's layer-k support is a valid synchronised trajectory
    s = propagate(tn, comb)
    for k in range(tn.T + 1):
        assert {i + 1 for i in np.flatnonzero(sol.layer(k) > 0.5)} <= s[k]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.data())
def test_lp_targets_free_mode_matches(seed, data):
    tn = random_network(seed, n_range=(4, 8))
    target = data.draw(st.sets(st.integers(1, tn.num_nodes)))
    sol = solve_lp(build_lp(tn, target, fix_non_targets=False))
    assert verify_integrality(sol, min_pin_set(tn, target))


def test_lp_format(vdp5):
    text = build_lp(vdp5).to_lp_format()
    lines = text.splitlines()
    assert lines[0].startswith("\\") and lines[1] == "Minimize"
    assert "Subject To" in lines and "Bounds" in lines and lines[-1] == "End"
    assert sum(ln.strip().startswith("lap_") for ln in lines) == 30
    assert any(ln.strip().startswith("sync_all:") for ln in lines)
    assert " 0 <= s_5_5 <= 1" in lines
