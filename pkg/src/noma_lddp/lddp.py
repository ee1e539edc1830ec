"""Lagrangian dual loop with DP subproblem solves, feasibility repair, and
the bisection-based upper bound.

The dual loop relaxes the per-user power limits, solves the discretized
subproblem exactly by DP each iteration, repairs the subproblem solution
into a feasible allocation (best one kept as V_LB), and updates the
multipliers by projected subgradient.  Afterwards the total-power
constraint is relaxed as well with a second multiplier mu; with
over-estimated rates and deflated power penalties the resulting dual value
is a guaranteed upper bound on the global optimum for every mu >= 0, and a
bisection over mu minimizes it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dp import SubcarrierRateCache, _run_subcarrier_dp, solve_lr_d
from .instance import ProblemInstance, SicOrder, sic_order
from .rates import PowerAllocation, PowerGrid, wsr_utility

__all__ = ["DualState", "SolveReport", "repair", "solve", "upper_bound"]


@dataclass
class DualState:
    """Bookkeeping for the projected-subgradient loop."""

    lam: np.ndarray
    theta: float = 1.0
    iteration: int = 0
    best_dual: float = np.inf
    non_improving: int = 0
    best_lb: float = -np.inf
    best_alloc: np.ndarray | None = None


@dataclass
class SolveReport:
    v_lb: float
    v_ub: float | None
    allocation: PowerAllocation
    iterations: int
    lam: np.ndarray
    dual_trace: list = field(default_factory=list)  # z_D(lambda) per iteration
    lb_trace: list = field(default_factory=list)  # best V_LB per iteration

    @property
    def gap(self) -> float | None:
        if self.v_ub is None or self.v_ub == 0:
            return None
        return (self.v_ub - self.v_lb) / self.v_ub


def repair(inst: ProblemInstance, p_star: np.ndarray, order: SicOrder | None = None) -> np.ndarray:
    """Three-step conversion of a subproblem solution into a feasible one.

    1. Users within their power limit keep their allocation.
    2. Each violating user fills its subcarriers in ascending order of its
       own allocation (ties by subcarrier index) until the limit is reached.
    3. The released power is re-granted greedily by descending w_k * g_kn
       among non-violating users, capped by the per-user limits, the total
       budget, and the per-subcarrier user cap.
    """
    p = np.asarray(p_star, dtype=float).copy()
    totals = p.sum(axis=1)
    violating = np.flatnonzero(totals > inst.P_user + 1e-12)
    if violating.size == 0:
        return p

    for k in violating:
        cols = np.lexsort((np.arange(inst.N), p[k]))  # ascending power, then index
        budget = inst.P_user[k]
        kept = np.zeros(inst.N)
        for n in cols:
            take = min(p[k, n], budget)
            kept[n] = take
            budget -= take
            if budget <= 0:
                break
        p[k] = kept

    released = float(totals[violating].sum() - inst.P_user[violating].sum())
    recipients = [k for k in range(inst.K) if totals[k] > 0 and k not in set(violating.tolist())]
    if not recipients or released <= 0:
        return p

    pairs = [(k, n) for k in recipients for n in range(inst.N)]
    pairs.sort(key=lambda kn: -(inst.weights[kn[0]] * inst.gains[kn[0], kn[1]]))
    for k, n in pairs:
        if released <= 1e-15:
            break
        occupied = int((p[:, n] > 0).sum())
        if p[k, n] <= 0 and occupied >= inst.M:
            continue  # adding a new user here would break the multiplexing cap
        headroom = min(
            inst.P_user[k] - p[k].sum(),
            inst.P_tot - p.sum(),
            released,
        )
        if headroom <= 0:
            continue
        p[k, n] += headroom
        released -= headroom
    return p


class _OverestimateCache:
    """Per-(subcarrier, SIC rank, user count) over-estimated weighted rate
    matrices for the upper-bound subproblem.

    The budget axis runs to M*J because the total-power coupling is
    dualized; the interference of an extension at state (j, j', m) is
    ((j - j') - (m - 1)) * delta (each of the m-1 earlier users' powers is
    deflated by one step), clamped at zero.
    """

    def __init__(self, inst: ProblemInstance, order: SicOrder, grid: PowerGrid):
        J = grid.J
        Jb = inst.M * J
        self.Jb = Jb
        p = grid.levels  # (J+1,)
        jj_b = np.arange(Jb + 1)
        jj_l = np.arange(J + 1)
        diff = jj_b[:, None] - jj_l[None, :]
        self.invalid = (diff < 0) | (jj_l[None, :] == 0)
        self.wrate = []  # [n][rank][m-1] -> (Jb+1, J+1)
        for n in range(inst.N):
            per_rank = []
            for rank in range(inst.K):
                k = order.ranked[rank, n]
                g = inst.gains[k, n]
                per_m = []
                for m in range(1, inst.M + 1):
                    interference = np.clip(diff - (m - 1), 0, None) * grid.delta
                    R = np.log1p((p[None, :] + grid.delta) * g / (interference * g + inst.noise))
                    per_m.append(inst.weights[k] * R)
                per_rank.append(per_m)
            self.wrate.append(per_rank)


def _ub_dual_value(inst, order, grid, lam, mu, cache: _OverestimateCache):
    """Dual value of the doubly-relaxed over-estimated subproblem at
    (lambda, mu), and its subgradient with respect to mu.

    With the total-power constraint dualized, the subproblem separates per
    subcarrier, so the value is the sum of per-subcarrier maxima plus the
    constants sum_k lambda_k P_k + mu * P_tot.
    """
    deflated = grid.levels - grid.delta  # p^j - delta, (J+1,)
    total = 0.0
    consumed = 0.0  # sum over the argmax of (p^j - delta)
    for n in range(inst.N):
        ranked = order.ranked[:, n]
        per_rank = cache.wrate[n]

        def value(k, m):
            lam_k = lam[ranked[k - 1]]
            return per_rank[k - 1][m - 1] - (lam_k + mu) * deflated[None, :]

        T, _ = _run_subcarrier_dp(value, inst.K, inst.M, cache.Jb, grid.J, cache.invalid)
        flat = int(T.argmax())
        m_star, j_star = np.unravel_index(flat, T.shape)
        total += float(T[m_star, j_star])
        consumed += (int(j_star) - int(m_star)) * grid.delta
    const = float(lam @ inst.P_user) + mu * inst.P_tot
    return total + const, inst.P_tot - consumed


def upper_bound(
    inst: ProblemInstance,
    lam,
    order: SicOrder | None = None,
    grid: PowerGrid | None = None,
    max_iter: int = 60,
    rel_tol: float = 1e-6,
) -> float:
    """Guaranteed upper bound on the global optimum: min over mu >= 0 of the
    over-estimated dual value at the given lambda.

    The dual is convex piecewise-linear in mu, so the bisection runs on the
    sign of its subgradient; any evaluated mu yields a valid bound and the
    smallest one seen is returned.
    """
    lam = np.asarray(lam, dtype=float)
    if order is None:
        order = sic_order(inst)
    if grid is None:
        grid = PowerGrid.for_instance(inst)
    cache = _OverestimateCache(inst, order, grid)

    best, g0 = _ub_dual_value(inst, order, grid, lam, 0.0, cache)
    if g0 >= 0:
        return best  # dual nondecreasing in mu from the start

    hi = 1.0
    for _ in range(max_iter):
        v, g = _ub_dual_value(inst, order, grid, lam, hi, cache)
        best = min(best, v)
        if g >= 0:
            break
        hi *= 2.0
    lo = 0.0
    for _ in range(max_iter):
        if hi - lo < rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        v, g = _ub_dual_value(inst, order, grid, lam, mid, cache)
        best = min(best, v)
        if g >= 0:
            hi = mid
        else:
            lo = mid
    return best


def solve(
    inst: ProblemInstance,
    eps: float = 1e-5,
    c_max: int = 200,
    compute_ub: bool = True,
    theta0: float = 1.0,
    min_theta: float = 1e-8,
) -> SolveReport:
    """Full solve: subgradient dual loop for V_LB, then the mu-bisection
    upper bound V_UB at the terminal multipliers."""
    order = sic_order(inst)
    grid = PowerGrid.for_instance(inst)
    cache = SubcarrierRateCache(inst, order, grid)
    state = DualState(lam=np.zeros(inst.K), theta=theta0)
    dual_trace: list[float] = []
    lb_trace: list[float] = []

    prev_dual = np.inf
    iterations = 0
    for c in range(c_max):
        iterations = c + 1
        z_d, _levels, alloc = solve_lr_d(inst, order, grid, state.lam, cache)
        p_f = alloc.p
        if not alloc.feasible_for(inst):
            p_f = repair(inst, alloc.p, order)
        lb = wsr_utility(inst, p_f, order)
        if lb > state.best_lb:
            state.best_lb = lb
            state.best_alloc = p_f
        dual_trace.append(z_d)
        lb_trace.append(state.best_lb)

        if z_d < state.best_dual - 1e-12:
            state.best_dual = z_d
            state.non_improving = 0
        else:
            state.non_improving += 1
            if state.non_improving >= 5:
                state.theta *= 0.5
                state.non_improving = 0

        if abs(prev_dual - z_d) <= eps or state.theta < min_theta:
            break
        prev_dual = z_d

        subgrad = inst.P_user - alloc.p.sum(axis=1)
        norm2 = float(subgrad @ subgrad)
        if norm2 == 0.0:
            break  # per-user constraints satisfied exactly; lambda is optimal here
        gap = max(z_d - state.best_lb, eps)
        step = state.theta * gap / norm2
        state.lam = np.maximum(0.0, state.lam - step * subgrad)
        state.iteration = iterations

    v_ub = upper_bound(inst, state.lam, order, grid) if compute_ub else None
    return SolveReport(
        v_lb=state.best_lb,
        v_ub=v_ub,
        allocation=PowerAllocation(state.best_alloc),
        iterations=iterations,
        lam=state.lam,
        dual_trace=dual_trace,
        lb_trace=lb_trace,
    )
