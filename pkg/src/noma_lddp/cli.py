"""Batch experiment driver.

Subcommands:
  solve     run one solver on an instance file, print a report
  sweep     run a seeded parameter sweep from a YAML config, emit CSV
  schedule  run the proportional-fair multi-slot harness, emit CSVs
  verify    run randomized self-checks (oracle equivalence, invariants)

Exit codes: 0 success, 1 failure, 2 bad configuration/usage.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import baselines, lddp, oracle, scheduler
from .instance import (
    ChannelModelConfig,
    InstanceFormatError,
    generate_instance,
    read_instance,
    sic_order,
)
from .rates import PowerGrid
from .sc_noma import solve_sc_sr
from .rates import sr_utility, wsr_utility

LN2 = math.log(2.0)
SOLVER_NAMES = ("lddp", "noma-ftpc", "ofdma-ftpc", "sc-exact")


def _fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.12g}"


def _channel_config(cfg: dict, seed: int) -> ChannelModelConfig:
    return ChannelModelConfig(
        cell_radius_m=cfg.get("cell_radius_m", 200.0),
        carrier_hz=cfg.get("carrier_frequency_hz", 2.0e9),
        bandwidth_hz=cfg.get("total_bandwidth_hz", 4.5e6),
        shadowing_db=cfg.get("shadowing_db", 8.0),
        noise_psd_dbm_hz=cfg.get("noise_psd_dbm_hz", -173.0),
        seed=seed,
        edge_fraction=cfg.get("edge_fraction"),
    )


# --- solve -----------------------------------------------------------------

def cmd_solve(args) -> int:
    try:
        inst = read_instance(args.instance)
    except (OSError, InstanceFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        if args.solver == "lddp":
            report = lddp.solve(inst, c_max=args.c_max)
            writer.writerow(["metric", "value"])
            writer.writerow(["v_lb", _fmt(report.v_lb)])
            writer.writerow(["v_ub", _fmt(report.v_ub)])
            writer.writerow(["gap", _fmt(report.gap)])
            writer.writerow(["iterations", report.iterations])
            writer.writerow(["utility_bits", _fmt(report.v_lb / LN2)])
        elif args.solver in ("noma-ftpc", "ofdma-ftpc"):
            fn = baselines.noma_ftpc if args.solver == "noma-ftpc" else baselines.ofdma_ftpc
            alloc = fn(inst)
            u = wsr_utility(inst, alloc.p)
            writer.writerow(["metric", "value"])
            writer.writerow(["utility", _fmt(u)])
            writer.writerow(["utility_bits", _fmt(u / LN2)])
        elif args.solver == "sc-exact":
            if inst.N != 1:
                print("error: sc-exact requires a single-subcarrier instance", file=sys.stderr)
                return 2
            order = sic_order(inst)
            ranked = order.ranked[:, 0]
            p_desc = solve_sc_sr(inst.gains[ranked, 0], inst.P_tot, inst.P_user[ranked], inst.M)
            p = np.zeros((inst.K, 1))
            p[ranked, 0] = p_desc
            u = sr_utility(inst, p)
            writer.writerow(["metric", "value"])
            writer.writerow(["utility", _fmt(u)])
            writer.writerow(["utility_bits", _fmt(u / LN2)])
        else:
            print(f"error: unknown solver '{args.solver}'", file=sys.stderr)
            return 2
    finally:
        if args.out:
            out.close()
    return 0


# --- sweep -----------------------------------------------------------------

def _sweep_cell(task):
    """One (seed, K, M, J, solver) cell; top level so worker pools can pick it up."""
    cfg, seed, K, M, J, solver = task
    n_sc = 25 if solver == "ofdma-ftpc" else cfg.get("subcarriers", 5)
    channel = _channel_config(cfg, seed)
    inst = generate_instance(
        channel, K, n_sc, M=1 if solver == "ofdma-ftpc" else M, J=J,
        P_tot=cfg.get("total_power_w", 1.0), P_user=cfg.get("user_power_w", 0.2),
    )
    bw_sc = channel.bandwidth_hz / n_sc
    t0 = time.perf_counter()
    if solver == "lddp":
        report = lddp.solve(inst, eps=cfg.get("tolerance", 1e-5), c_max=cfg.get("c_max", 200))
        utility, v_lb, v_ub, gap, iters = report.v_lb, report.v_lb, report.v_ub, report.gap, report.iterations
    elif solver == "noma-ftpc":
        utility = wsr_utility(inst, baselines.noma_ftpc(inst).p)
        v_lb = v_ub = gap = None
        iters = 0
    elif solver == "ofdma-ftpc":
        utility = wsr_utility(inst, baselines.ofdma_ftpc(inst).p)
        v_lb = v_ub = gap = None
        iters = 0
    else:
        raise ValueError(f"unknown solver '{solver}'")
    wall = time.perf_counter() - t0
    throughput_bps = utility * bw_sc / LN2
    return {
        "seed": seed, "K": K, "N": n_sc, "M": M, "J": J, "solver": solver,
        "utility_nats": utility, "throughput_bps": throughput_bps,
        "v_lb": v_lb, "v_ub": v_ub, "gap": gap, "iterations": iters,
        "wall_s": wall,
    }


def run_sweep(cfg: dict, threads: int = 1, timing: bool = False):
    """Run all sweep cells and return CSV rows (header first)."""
    base_seed = int(cfg.get("seed", 0))
    n_inst = int(cfg.get("instances", 1))
    users = cfg.get("users", [20])
    ms = cfg.get("max_multiplexed", [2])
    js = cfg.get("power_levels", [100])
    solvers = cfg.get("solvers", ["lddp"])
    for s in solvers:
        if s not in ("lddp", "noma-ftpc", "ofdma-ftpc"):
            raise ValueError(f"unknown solver '{s}' in config")
    tasks = [
        (cfg, base_seed + i, K, M, J, solver)
        for i in range(n_inst)
        for K in users
        for M in ms
        for J in js
        for solver in solvers
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_cell, tasks))
    else:
        results = [_sweep_cell(t) for t in tasks]

    cols = ["seed", "K", "N", "M", "J", "solver", "utility_nats",
            "throughput_bps", "v_lb", "v_ub", "gap", "iterations"]
    if timing:
        cols.append("wall_s")
    rows = [cols]
    for r in results:
        rows.append([
            r[c] if c in ("seed", "K", "N", "M", "J", "solver", "iterations") else _fmt(r[c])
            for c in cols
        ])
    return rows


def cmd_sweep(args) -> int:
    try:
        cfg = yaml.safe_load(Path(args.config).read_text())
        if not isinstance(cfg, dict):
            raise ValueError("config must be a mapping")
        if args.seed is not None:
            cfg["seed"] = args.seed
        rows = run_sweep(cfg, threads=args.threads, timing=args.timing)
    except (OSError, ValueError, yaml.YAMLError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        csv.writer(out).writerows(rows)
    finally:
        if args.out:
            out.close()
    return 0


# --- schedule --------------------------------------------------------------

def cmd_schedule(args) -> int:
    try:
        cfg = yaml.safe_load(Path(args.config).read_text())
        if not isinstance(cfg, dict):
            raise ValueError("config must be a mapping")
        if args.seed is not None:
            cfg["seed"] = args.seed
    except (OSError, ValueError, yaml.YAMLError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    base_seed = int(cfg.get("seed", 0))
    n_seeds = int(cfg.get("instances", 1))
    schemes = cfg.get("schemes", ["lddp", "noma-ftpc", "ofdma-ftpc"])
    slots = int(cfg.get("slots", 100))
    window = int(cfg.get("window", 50))
    resolve_per = args.resolve_per or cfg.get("resolve_per", "slot")

    fairness_rows = [["seed", "scheme", "jain", "mean_rate_bps"]]
    edge_rows = [["seed", "scheme", "zone", "mean_rate_bps"]]
    grouping: dict[str, np.ndarray] = {}
    slot_rows = [["seed", "scheme", "slot", "user", "rate_bps", "weight", "avg_rate_bps"]]
    for i in range(n_seeds):
        for scheme in schemes:
            sc_cfg = scheduler.ScheduleConfig(
                channel=_channel_config(cfg, base_seed + i),
                K=int(cfg.get("users", 20)),
                N=int(cfg.get("subcarriers", 5)),
                M=int(cfg.get("max_multiplexed", 2)),
                J=int(cfg.get("power_levels", 100)),
                P_tot=cfg.get("total_power_w", 1.0),
                P_user=cfg.get("user_power_w", 0.2),
                bandwidth_hz=cfg.get("total_bandwidth_hz", 4.5e6),
                lddp_c_max=int(cfg.get("c_max", 12)),
            )
            trace = scheduler.run_schedule(sc_cfg, scheme, slots, window, resolve_per)
            final = trace.final_averages
            fairness_rows.append([
                base_seed + i, scheme, _fmt(scheduler.jain_index(final)),
                _fmt(final.mean() / LN2),
            ])
            if sc_cfg.channel.edge_fraction is not None and trace.distances is not None:
                edge = trace.distances >= 0.7 * sc_cfg.channel.cell_radius_m
                for zone, mask in (("edge", edge), ("center", ~edge)):
                    if mask.any():
                        edge_rows.append([
                            base_seed + i, scheme, zone, _fmt(final[mask].mean() / LN2)
                        ])
            hist = scheduler.grouping_histogram(trace.allocations)
            grouping[scheme] = grouping.get(scheme, 0) + hist
            for t in range(slots):
                for k in range(sc_cfg.K):
                    slot_rows.append([
                        base_seed + i, scheme, t, k,
                        _fmt(trace.rates[t, k] / LN2),
                        _fmt(trace.weights[t, k]),
                        _fmt(trace.averages[t + 1, k] / LN2),
                    ])

    grouping_rows = [["scheme", "index_difference", "count"]]
    for scheme, hist in grouping.items():
        for d in range(1, hist.size):
            grouping_rows.append([scheme, d, int(hist[d])])

    for name, rows in (
        ("fairness.csv", fairness_rows),
        ("edge.csv", edge_rows),
        ("grouping.csv", grouping_rows),
        ("slots.csv", slot_rows),
    ):
        with open(out_dir / name, "w", newline="") as f:
            csv.writer(f).writerows(rows)
    return 0


# --- verify ----------------------------------------------------------------

def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 7)
    failures = []

    def check(name, ok):
        print(f"{'ok  ' if ok else 'FAIL'} {name}")
        if not ok:
            failures.append(name)

    for trial in range(5):
        K = int(rng.integers(1, 4))
        N = int(rng.integers(1, 3))
        M = int(rng.integers(1, min(K, 2) + 1))
        J = int(rng.integers(2, 7))
        inst = generate_instance(
            _channel_config({}, 1000 + trial), K, N, M=M, J=J, P_tot=1.0, P_user=0.4,
        )
        grid = PowerGrid.for_instance(inst)
        order = sic_order(inst)
        lam = rng.exponential(2.0 / inst.P_tot, size=K)
        from .dp import solve_lr_d

        z_dp, _, _ = solve_lr_d(inst, order, grid, lam)
        z_bf, _ = oracle.brute_force_discrete(inst, grid, lam=lam)
        check(
            f"dp equals brute force (trial {trial}, K={K} N={N} M={M} J={J})",
            math.isclose(z_dp, z_bf, rel_tol=1e-9, abs_tol=1e-9),
        )
        opt, _ = oracle.brute_force_discrete(inst, grid)
        v_ub = lddp.upper_bound(inst, np.zeros(K), order, grid)
        check(f"upper bound covers discrete optimum (trial {trial})", v_ub >= opt - 1e-9)

        report = lddp.solve(inst, c_max=30)
        check(f"repaired solution feasible (trial {trial})", report.allocation.feasible_for(inst))
        check(f"bounds ordered (trial {trial})", report.v_ub >= report.v_lb - 1e-9)

    if failures:
        print(f"{len(failures)} check(s) failed", file=sys.stderr)
        return 1
    print("all checks passed")
    return 0


# --- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noma-lddp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--solver", default="lddp", choices=SOLVER_NAMES)
    p.add_argument("--c-max", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a parameter sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--timing", action="store_true",
                   help="append a wall-clock column (breaks byte-identical reruns)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("schedule", help="run the proportional-fair harness")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--resolve-per", choices=("slot", "frame"))
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("verify", help="run randomized self-checks")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
