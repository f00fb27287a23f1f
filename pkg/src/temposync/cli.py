"""``temposync`` command-line front end.

Exit codes: 0 success, 1 domain failure (invalid graph, condition false,
budget too large, expectation not met), 2 usage or parse error, 3 numeric
failure (LP disagreement, non-finite simulation state).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _fmt_set(nodes) -> str:
    return "{" + ", ".join(str(v) for v in sorted(nodes)) + "}"


def _parse_nodes(text: str) -> set[int]:
    text = text.strip()
    if not text:
        return set()
    try:
        return {int(t) for t in text.replace(" ", "").strip("{}").split(",") if t}
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated node ids, got {text!r}") from None


def _default_seed() -> int:
    env = os.environ.get("TEMPOSYNC_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"TEMPOSYNC_SEED must be an integer, got {env!r}") from None


def _load(path):
    from .graph import GraphError, load_network

    try:
        return load_network(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except GraphError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _check_nodes(nodes, tn, what):
    bad = sorted(v for v in nodes if not 1 <= v <= tn.num_nodes)
    if bad:
        raise UsageError(f"{what} {bad} outside 1..{tn.num_nodes}")


# -- commands -----------------------------------------------------------------


def cmd_validate(args) -> int:
    from .graph import GraphError, read_network_document, validate_snapshot

    try:
        n, tau, snaps = read_network_document(args.file)
    except OSError as exc:
        raise UsageError(f"cannot read {args.file}: {exc.strerror or exc}") from None
    except GraphError as exc:
        raise UsageError(f"{args.file}: {exc}") from None
    if n < 1 or not snaps or not tau > 0:
        raise UsageError(f"{args.file}: need num_nodes >= 1, tau > 0 and at least one snapshot")
    failures = 0
    for k, g in enumerate(snaps, start=1):
        try:
            validate_snapshot(g)
            print(f"snapshot {k}: ok ({len(g.edges)} edges)")
        except GraphError as exc:
            failures += 1
            print(f"snapshot {k}: INVALID - {exc}")
    if failures:
        print(f"{failures} of {len(snaps)} snapshots invalid")
        return EXIT_DOMAIN
    print(f"{len(snaps)} snapshots valid")
    return EXIT_OK


def cmd_analyze(args) -> int:
    from .dynamics import theta_budget
    from .graph import propagation_depth, roots
    from .pinning import min_pin_set
    from .propagation import check_sufficient, propagate

    tn = _load(args.file)
    pins = args.pins if args.pins is not None else set(min_pin_set(tn))
    _check_nodes(pins, tn, "pins")
    print(f"network: N={tn.num_nodes}, T={tn.T}, tau={tn.tau:g}")
    for k, g in enumerate(tn.snapshots, start=1):
        print(f"  G_{k}: roots {_fmt_set(roots(g))}, depth {propagation_depth(g)}")
    print(f"theta budget: {theta_budget(tn):g}")
    state = propagate(tn, pins)
    for k, s in enumerate(state.sets):
        print(f"S_{k} = {_fmt_set(s)}")
    chk = check_sufficient(tn, pins)
    print(f"sufficient condition: required roots {_fmt_set(chk.required)} -> {'satisfied' if chk else 'NOT satisfied'}")
    print(f"propagation: |S_T| = {len(state.final)} of {tn.num_nodes}")
    return EXIT_OK if chk else EXIT_DOMAIN


def cmd_min_pin(args) -> int:
    from .pinning import build_lp, min_pin_set, solve_lp, verify_integrality
    from .simplex import NumericalFailure

    tn = _load(args.file)
    if args.target is not None:
        _check_nodes(args.target, tn, "target")
    pins = min_pin_set(tn, args.target)
    lp = build_lp(tn) if args.target is None else build_lp(tn, args.target, fix_non_targets=False)
    if args.lp_out:
        try:
            Path(args.lp_out).write_text(lp.to_lp_format())
        except OSError as exc:
            raise UsageError(f"cannot write {args.lp_out}: {exc.strerror or exc}") from None
    try:
        sol = solve_lp(lp)
    except NumericalFailure as exc:
        print(f"{_fmt_set(pins)}, size {len(pins)}, LP FAILED: {exc}")
        return EXIT_NUMERIC
    agrees = verify_integrality(sol, pins) and abs(sol.objective_value - len(pins)) <= 1e-9
    verdict = "LP agrees" if agrees else f"LP DISAGREES (objective {sol.objective_value:g}, status {sol.status})"
    print(f"{_fmt_set(pins)}, size {len(pins)}, {verdict}")
    return EXIT_OK if agrees else EXIT_NUMERIC


def cmd_greedy(args) -> int:
    from .greedy import BudgetTooLarge, brute_force_max_sync, greedy_max_sync

    tn = _load(args.file)
    res = greedy_max_sync(tn, args.budget)
    print(f"target set: {_fmt_set(res.target_set)} (|X| = {len(res.target_set)})")
    print(f"pin set: {_fmt_set(res.pin_set)} (size {len(res.pin_set)})")
    print(f"synced count: {res.synced_count}")
    if args.oracle:
        try:
            best, best_pins = brute_force_max_sync(tn, args.budget, cap=args.cap)
        except BudgetTooLarge as exc:
            print(f"oracle: {exc}")
            return EXIT_DOMAIN
        print(f"oracle: best count {best} with pins {_fmt_set(best_pins)}; gap {best - res.synced_count}")
    return EXIT_OK


def cmd_study(args) -> int:
    from .greedy import BudgetTooLarge, reproduce_study

    seed = args.seed if args.seed is not None else _default_seed()
    if args.nodes_min > args.nodes_max or args.budget_min > args.budget_max:
        raise UsageError("range minimum exceeds maximum")
    if args.nodes_min < 1 or args.budget_min < 0 or args.snapshots < 1 or args.count < 1:
        raise UsageError("counts must be positive and budgets non-negative")
    if not 0 <= args.edge_prob <= 1:
        raise UsageError("--edge-prob must lie in [0, 1]")
    try:
        report = reproduce_study(
            args.count, (args.nodes_min, args.nodes_max), args.snapshots,
            (args.budget_min, args.budget_max), args.edge_prob, seed, args.cap, args.jobs,
        )
    except BudgetTooLarge as exc:
        print(f"study aborted: {exc}")
        return EXIT_DOMAIN
    try:
        Path(args.out).write_text(report.to_csv())
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc.strerror or exc}") from None
    matches = sum(r.match for r in report.rows)
    print(f"{len(report.rows)} instances, greedy optimal on {matches}")
    print(f"match rate: {report.match_rate:.4f}")
    print(f"report written to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .dynamics import (
        VDP5_INITIAL_STATES, MODELS, NonFiniteState, SimConfig, StepTooLarge,
        controlled_gain, limit_cycle_point, simulate,
    )

    tn = _load(args.file)
    if args.tau is not None:
        if not args.tau > 0:
            raise UsageError("--tau must be positive")
        from .graph import TemporalNetwork

        tn = TemporalNetwork(tn.num_nodes, tn.snapshots, args.tau)
    _check_nodes(args.pins, tn, "pins")
    model = MODELS[args.model]
    ref0 = limit_cycle_point(model)
    if tn.num_nodes == VDP5_INITIAL_STATES.shape[0] and model.state_dim == 2 and args.initial == "preset":
        x0 = VDP5_INITIAL_STATES.copy()
    else:
        seed = args.seed if args.seed is not None else _default_seed()
        rng = np.random.default_rng(seed)
        x0 = rng.uniform(-3.0, 3.0, size=(tn.num_nodes, model.state_dim))
    kappa = args.kappa
    if args.pin_mode == "controlled" and kappa is None:
        kappa = controlled_gain(model, x0, ref0, args.pins, args.pre_phase)
    try:
        cfg = SimConfig(
            coupling_c=args.c, pin_gain=kappa or 1.0, tau=tn.tau, step_h=args.step,
            sync_tol=args.sync_tol, pin_mode=args.pin_mode, pre_phase=args.pre_phase,
            decimation=args.decimation,
        )
        cfg.check()
    except (StepTooLarge, ValueError) as exc:
        raise UsageError(str(exc)) from None
    try:
        run = simulate(tn, args.pins, model, x0, ref0, cfg)
    except NonFiniteState as exc:
        print(f"simulation diverged: {exc}")
        return EXIT_NUMERIC
    if args.out:
        try:
            run.to_csv(args.out)
        except OSError as exc:
            raise UsageError(f"cannot write {args.out}: {exc.strerror or exc}") from None
    print(f"pins {_fmt_set(args.pins)}, c={cfg.coupling_c:g}, tau={cfg.tau:g}, step={cfg.resolved_step():.3g}, mode={cfg.pin_mode}")
    for i, (err, ts) in enumerate(zip(run.final_errors, run.sync_times), start=1):
        flag = "synced" if err < cfg.sync_tol else "NOT synced"
        when = "-" if ts is None else f"{ts:.4g}"
        print(f"node {i}: final error {err:.3e} ({flag}), sync time {when}")
    above = [i for i, e in enumerate(run.final_errors, start=1) if not e < cfg.sync_tol]
    if args.expect_full and above:
        print(f"expected full synchronisation; above tolerance: {_fmt_set(above)}")
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_gen_random(args) -> int:
    from .graph import save_network
    from .greedy import RandomSpec, random_temporal_network

    seed = args.seed if args.seed is not None else _default_seed()
    try:
        tn = random_temporal_network(RandomSpec(args.nodes, args.snapshots, args.edge_prob, seed, args.tau))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        save_network(tn, args.out)
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc.strerror or exc}") from None
    print(f"wrote {args.out}: N={tn.num_nodes}, T={tn.T}, {sum(len(g.edges) for g in tn.snapshots)} edges")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="temposync", description="Pinning-control analysis for temporal networks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="check every snapshot is a DAG")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("analyze", help="propagation and sufficient-condition report")
    s.add_argument("file")
    s.add_argument("--pins", type=_parse_nodes, default=None, help="comma-separated (default: minimum pin set)")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("min-pin", help="minimum pin set with LP cross-check")
    s.add_argument("file")
    s.add_argument("--target", type=_parse_nodes, default=None)
    s.add_argument("--lp-out", default=None, help="write the LP in CPLEX LP format")
    s.set_defaults(func=cmd_min_pin)

    s = sub.add_parser("greedy", help="budgeted greedy pinning")
    s.add_argument("file")
    s.add_argument("--budget", type=int, required=True)
    s.add_argument("--oracle", action="store_true", help="also run exhaustive search")
    s.add_argument("--cap", type=int, default=10**7)
    s.set_defaults(func=cmd_greedy)

    s = sub.add_parser("study", help="greedy vs exhaustive search on random networks")
    s.add_argument("--count", type=int, default=120)
    s.add_argument("--nodes-min", type=int, default=15)
    s.add_argument("--nodes-max", type=int, default=20)
    s.add_argument("--snapshots", type=int, default=5)
    s.add_argument("--budget-min", type=int, default=1)
    s.add_argument("--budget-max", type=int, default=5)
    s.add_argument("--edge-prob", type=float, default=0.2)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--cap", type=int, default=10**7)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", default="study.csv")
    s.set_defaults(func=cmd_study)

    s = sub.add_parser("simulate", help="integrate the oscillator network")
    s.add_argument("file")
    s.add_argument("--pins", type=_parse_nodes, required=True)
    s.add_argument("--model", choices=["vdp"], default="vdp")
    s.add_argument("--c", type=float, default=225.0)
    s.add_argument("--tau", type=float, default=None, help="override the file's tau")
    s.add_argument("--out", default=None, help="trajectory CSV path")
    s.add_argument("--pin-mode", choices=["ideal", "controlled"], default="ideal")
    s.add_argument("--kappa", type=float, default=None, help="pinning gain (controlled mode)")
    s.add_argument("--pre-phase", type=float, default=1.0)
    s.add_argument("--step", type=float, default=None)
    s.add_argument("--sync-tol", type=float, default=1e-2)
    s.add_argument("--decimation", type=int, default=100)
    s.add_argument("--initial", choices=["preset", "random"], default="preset")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--expect-full", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("gen-random", help="write a random temporal network")
    s.add_argument("--nodes", type=int, required=True)
    s.add_argument("--snapshots", type=int, default=5)
    s.add_argument("--edge-prob", type=float, default=0.2)
    s.add_argument("--tau", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_random)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"temposync: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
