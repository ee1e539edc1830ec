"""Acceptance suite: end-to-end checks at the evaluation scale.

These tests exercise the full pipeline (channel generation, dual loop,
upper bound, baselines, PF scheduler, CLI) against exact oracles on small
instances and against directional/aggregate targets at the paper scale
(K=20, N=5, M=2).  They are slower than the unit suites; the heavy
computations are shared through module-scope fixtures.
"""
import time

import numpy as np
import pytest

from noma_lddp import (
    ChannelModelConfig,
    PowerGrid,
    ScheduleConfig,
    brute_force_continuous_sc,
    brute_force_discrete,
    generate_instance,
    grouping_histogram,
    jain_index,
    noma_ftpc,
    ofdma_ftpc,
    repair,
    run_schedule,
    sic_order,
    solve,
    solve_lr_d,
    solve_sc_sr,
    sr_utility,
    upper_bound,
)
from noma_lddp.cli import run_sweep
from noma_lddp.rates import (
    PowerAllocation,
    rate_continuous,
    rate_discrete,
    rate_overestimate,
    subcarrier_rates,
)

from conftest import random_instance

PAPER_K, PAPER_N, PAPER_M = 20, 5, 2
PAPER_P_TOT, PAPER_P_USER = 1.0, 0.2


def paper_instance(seed: int, J: int = 100, N: int = PAPER_N, M: int = PAPER_M):
    return generate_instance(
        ChannelModelConfig(seed=seed), K=PAPER_K, N=N, M=M, J=J,
        P_tot=PAPER_P_TOT, P_user=PAPER_P_USER,
    )


# --- shared heavy computations --------------------------------------------

@pytest.fixture(scope="module")
def paper_solves():
    """Full-scale solves (no upper bound) on 50 fixed instances."""
    out = []
    for i in range(50):
        inst = paper_instance(seed=i + 1)
        out.append((inst, solve(inst, compute_ub=False)))
    return out


@pytest.fixture(scope="module")
def gap_table():
    """Mean relative gap (V_UB - V_LB)/V_UB over 20 fixed instances per J."""
    js = [20, 40, 60, 80, 100]
    t0 = time.perf_counter()
    means = {}
    for J in js:
        gaps = []
        for i in range(20):
            rep = solve(paper_instance(seed=i + 1, J=J))
            gaps.append(rep.gap)
        means[J] = float(np.mean(gaps))
    return means, time.perf_counter() - t0


@pytest.fixture(scope="module")
def fairness_runs():
    """PF harness over 20 seeds for all three solvers."""
    jains = {"lddp": [], "noma-ftpc": [], "ofdma-ftpc": []}
    for seed in range(20):
        cfg = ScheduleConfig(
            channel=ChannelModelConfig(seed=seed + 1),
            K=PAPER_K, N=PAPER_N, M=PAPER_M, J=25, lddp_c_max=8,
        )
        for solver in jains:
            tr = run_schedule(cfg, solver, slots=100, T=50)
            jains[solver].append(jain_index(tr.final_averages))
    return jains


# --- criterion 1: DP exactness on the penalized objective ------------------

def test_dp_matches_discrete_brute_force(rng):
    t0 = time.perf_counter()
    for _ in range(200):
        inst = random_instance(rng)
        grid = PowerGrid.for_instance(inst)
        order = sic_order(inst)
        lam = rng.uniform(0.0, 2.0, size=inst.K)
        opt, _ = brute_force_discrete(inst, grid, lam=lam)
        z_d, levels, _alloc = solve_lr_d(inst, order, grid, lam)
        assert np.isclose(z_d, opt, rtol=1e-9, atol=1e-12)
        # the DP's assignment respects the non-dualized constraints
        assert levels.sum() <= inst.J
        assert np.all((levels > 0).sum(axis=0) <= inst.M)
    assert time.perf_counter() - t0 < 60.0


# --- criterion 2: single-carrier solver optimality -------------------------

def test_sc_solver_beats_continuous_oracle(rng):
    for _ in range(100):
        K = int(rng.integers(2, 5))
        gains = np.sort(10.0 ** rng.uniform(-2, 2, size=K))[::-1]
        P_tot = float(rng.uniform(0.5, 2.0))
        M = int(rng.integers(1, K + 1))
        # heterogeneous caps can defeat the greedy prefix when the user
        # cardinality limit binds (a capped strong user blocks the slot), so
        # draw per-user caps only when M = K
        if M == K:
            caps = rng.uniform(0.2, 1.0, size=K) * P_tot
        else:
            caps = np.full(K, float(rng.uniform(0.2, 1.0)) * P_tot)
        noise = float(rng.uniform(0.05, 1.0))

        p = solve_sc_sr(gains, P_tot, caps, M)
        # prefix structure: powered users are consecutive from the top
        powered = p > 0
        assert powered.sum() <= M
        if powered.any():
            assert np.all(powered[: int(powered.sum())])

        def sc_value(powers):
            cum, total = 0.0, 0.0
            for k in range(K):
                total += np.log1p(powers[k] * gains[k] / (cum * gains[k] + noise))
                cum += powers[k]
            return total

        # the oracle's grid search lower-bounds the continuous optimum
        pts = 40 if K == 4 else 100
        ref = brute_force_continuous_sc(gains, P_tot, caps, M, grid_points=pts, noise=noise)
        assert sc_value(p) >= ref - 1e-9


# --- criterion 3: upper-bound validity -------------------------------------

def test_ub_dominates_discrete_optimum(rng):
    violations = 0
    for _ in range(60):
        inst = random_instance(rng)
        grid = PowerGrid.for_instance(inst)
        opt, _ = brute_force_discrete(inst, grid)
        rep = solve(inst)
        if rep.v_ub < opt - 1e-9:
            violations += 1
    assert violations == 0


def test_ub_dominates_lb_at_paper_scale():
    for i in range(100):
        inst = generate_instance(
            ChannelModelConfig(seed=1000 + i), K=PAPER_K, N=PAPER_N,
            M=PAPER_M, J=40, P_tot=PAPER_P_TOT, P_user=PAPER_P_USER,
        )
        rep = solve(inst, c_max=12)
        assert rep.v_ub >= rep.v_lb - 1e-9


# --- criterion 4: bound tightening with the grid resolution ----------------

def test_gap_nonincreasing_in_grid_resolution(gap_table):
    means, elapsed = gap_table
    gaps = [means[J] for J in (20, 40, 60, 80, 100)]
    assert all(b <= a + 1e-3 for a, b in zip(gaps, gaps[1:]))
    assert elapsed <= 600.0


def test_gap_small_at_finest_grid(gap_table):
    means, _ = gap_table
    assert means[100] <= 0.20


# --- criterion 5: dominance over the FTPC baselines ------------------------

def test_mean_sum_rate_ordering(paper_solves):
    bw = ChannelModelConfig().bandwidth_hz
    lddp_tp, noma_tp, ofdma_tp = [], [], []
    for i, (inst, rep) in enumerate(paper_solves):
        lddp_tp.append(rep.v_lb * bw / PAPER_N)
        noma_tp.append(sr_utility(inst, noma_ftpc(inst).p) * bw / PAPER_N)
        inst25 = generate_instance(
            ChannelModelConfig(seed=i + 1), K=PAPER_K, N=25, M=1, J=100,
            P_tot=PAPER_P_TOT, P_user=PAPER_P_USER,
        )
        ofdma_tp.append(sr_utility(inst25, ofdma_ftpc(inst25).p) * bw / 25)
    m_lddp, m_noma, m_ofdma = map(np.mean, (lddp_tp, noma_tp, ofdma_tp))
    assert m_lddp >= m_noma >= m_ofdma
    assert m_lddp >= 1.10 * m_noma


# --- criterion 6: dual-loop convergence ------------------------------------

def test_lb_converges_within_15_iterations(paper_solves):
    for inst, rep in paper_solves[:20]:
        trace = rep.lb_trace
        final = trace[-1]
        reached = trace[min(14, len(trace) - 1)]
        assert reached >= 0.95 * final


# --- criterion 7: fairness ordering in the PF harness ----------------------

def test_jain_ordering_and_bounds(fairness_runs):
    means = {s: float(np.mean(v)) for s, v in fairness_runs.items()}
    assert means["lddp"] > means["noma-ftpc"] > means["ofdma-ftpc"]
    for vals in fairness_runs.values():
        for j in vals:
            assert 1.0 / PAPER_K - 1e-12 <= j <= 1.0 + 1e-12


# --- criterion 8: grouping statistic ----------------------------------------

def test_multiplexed_pairs_have_large_index_difference():
    # scaled geometry: twice the subcarriers at the same per-subcarrier
    # budget (P_tot/N = 0.2) and the same cap-to-budget ratio
    allocations = []
    for seed in range(10):
        cfg = ScheduleConfig(
            channel=ChannelModelConfig(seed=seed + 1),
            K=PAPER_K, N=10, M=2, J=25, P_tot=2.0, P_user=0.4,
        )
        tr = run_schedule(cfg, "lddp", slots=100, T=50)
        allocations.extend(tr.allocations)
    counts = grouping_histogram(allocations)
    n_pairs = int(counts.sum())
    assert n_pairs >= 200
    mean_diff = float((np.arange(counts.size) * counts).sum() / n_pairs)
    assert mean_diff > PAPER_K / 2


# --- criterion 9: invariant spot checks -------------------------------------

def test_rate_monotone_in_own_power(rng):
    inst = random_instance(rng, K=3, N=2, M=3)
    order = sic_order(inst)
    p = rng.uniform(0, 0.3, size=(3, 2))
    for k in range(3):
        for n in range(2):
            r0 = rate_continuous(inst, order, p, k, n)
            bumped = p.copy()
            bumped[k, n] += 0.1
            assert rate_continuous(inst, order, bumped, k, n) >= r0


def test_telescoping_identity(rng):
    for _ in range(10):
        inst = random_instance(rng, K=3, N=1, M=3)
        order = sic_order(inst)
        p = rng.uniform(0, 0.5, size=(3, 1))
        rates = subcarrier_rates(inst, order, p, 0)
        cum, total = 0.0, 0.0
        for k in order.ranked[:, 0]:
            g = inst.gains[k, 0]
            total += np.log(cum + p[k, 0] + inst.noise / g) - np.log(cum + inst.noise / g)
            cum += p[k, 0]
        assert np.isclose(rates.sum(), total, rtol=1e-12)


def test_overestimate_dominates_discrete_rate(rng):
    for _ in range(20):
        inst = random_instance(rng, K=3, N=2, M=3)
        grid = PowerGrid.for_instance(inst)
        order = sic_order(inst)
        levels = rng.integers(0, 3, size=(3, 2, 1))  # build an x tensor
        x = np.zeros((inst.K, inst.N, inst.J))
        for k in range(inst.K):
            for n in range(inst.N):
                lvl = int(levels[k, n, 0])
                if lvl > 0:
                    x[k, n, lvl - 1] = 1
        for k in range(inst.K):
            for n in range(inst.N):
                j = int(levels[k, n, 0])
                if j == 0:
                    continue
                over = rate_overestimate(inst, order, grid, x, k, n, j)
                exact = rate_discrete(inst, order, grid, x, k, n, j)
                assert over >= exact - 1e-12


def test_repair_always_feasible(rng):
    # repair's contract: the input already satisfies the total-power and
    # per-subcarrier cardinality constraints (those are never dualized);
    # only the per-user limits may be violated
    for _ in range(25):
        inst = random_instance(rng)
        p_bad = np.zeros((inst.K, inst.N))
        for n in range(inst.N):
            users = rng.choice(inst.K, size=min(inst.M, inst.K), replace=False)
            p_bad[users, n] = rng.uniform(0.1, 1.0, size=users.size)
        p_bad *= rng.uniform(0.8, 1.0) * inst.P_tot / p_bad.sum()
        fixed = PowerAllocation(repair(inst, p_bad))
        assert fixed.feasible_for(inst)


def test_jain_bounds(rng):
    for _ in range(50):
        K = int(rng.integers(2, 30))
        r = rng.uniform(0.01, 5.0, size=K)
        j = jain_index(r)
        assert 1.0 / K - 1e-12 <= j <= 1.0 + 1e-12


def test_moving_average_identity():
    cfg = ScheduleConfig(channel=ChannelModelConfig(seed=3), K=4, N=2, M=2, J=10)
    T = 7
    tr = run_schedule(cfg, "noma-ftpc", slots=15, T=T)
    for t in range(15):
        expected = (1 - 1 / T) * tr.averages[t] + (1 / T) * tr.rates[t]
        assert np.allclose(tr.averages[t + 1], expected, rtol=1e-12)


# --- criterion 10: determinism ----------------------------------------------

def test_sweep_is_deterministic():
    cfg = {
        "seed": 3, "instances": 2, "users": [4], "max_multiplexed": [2],
        "power_levels": [20], "solvers": ["lddp", "noma-ftpc", "ofdma-ftpc"],
        "subcarriers": 2,
    }
    first = run_sweep(cfg)
    second = run_sweep(cfg)
    assert first == second
