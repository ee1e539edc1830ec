"""Exact two-stage dynamic program for the discretized Lagrangian subproblem.

The subproblem maximizes the penalized utility

    sum_k w_k sum_n sum_j x_kn^j R_kn^j  +  sum_k lambda_k (P_k - sum_n sum_j x_kn^j p^j)

subject to the total discrete power budget, at most M users per subcarrier,
and at most one level per (user, subcarrier).

Stage 1 allocates power among users within one subcarrier; stage 2 splits
the budget across subcarriers.  Tables are indexed by the power consumed
EXACTLY (in grid steps): when a user at SIC position k is added with level
j' on top of a partial solution that consumes j - j' steps, the earlier
users all occupy earlier SIC positions, so the interference it sees is
exactly (j - j') * delta * g_kn.  Because the rate depends only on this
total, the state (position, consumed budget, user count) fully determines
every rate and the recursion is exact.  Slack budget is absorbed by the
stage-2 split (a subcarrier may receive zero) and the final maximization
over the total consumption.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import ProblemInstance, SicOrder
from .rates import PowerAllocation, PowerGrid, levels_to_power

__all__ = ["Stage1Tables", "stage1", "stage2", "solve_lr_d", "SubcarrierRateCache"]

NEG = -np.inf


class SubcarrierRateCache:
    """Weighted rate matrices w_k * R_kn^{j'} for every subcarrier and SIC
    position, indexed [consumed budget j, own level j'].

    These do not depend on the multipliers, so a dual loop computes them
    once and reuses them across iterations.
    """

    def __init__(self, inst: ProblemInstance, order: SicOrder, grid: PowerGrid):
        J = grid.J
        p = grid.levels  # (J+1,)
        jj = np.arange(J + 1)
        earlier_power = np.clip(jj[:, None] - jj[None, :], 0, J) * grid.delta  # (j, j')
        self.invalid = (jj[:, None] - jj[None, :] < 0) | (jj[None, :] == 0)
        self.wrate = []  # per subcarrier: list over SIC rank of (J+1, J+1)
        for n in range(inst.N):
            mats = []
            for rank in range(inst.K):
                k = order.ranked[rank, n]
                g = inst.gains[k, n]
                R = np.log1p(p[None, :] * g / (earlier_power * g + inst.noise))
                mats.append(inst.weights[k] * R)
            self.wrate.append(mats)


@dataclass
class Stage1Tables:
    """Stage-1 result for one subcarrier: values for exact budgets plus the
    decision arrays needed to reconstruct any stored optimum."""

    V: np.ndarray  # (J+1,) best value consuming exactly j steps
    best_m: np.ndarray  # (J+1,) user count attaining V[j]
    T: np.ndarray  # (M+1, J+1) final table after all users
    choice: np.ndarray  # (K+1, M+1, J+1): level given to SIC-rank-k user, 0 = skip
    ranked: np.ndarray  # user ids in SIC order on this subcarrier

    def backtrack(self, j: int) -> list[tuple[int, int]]:
        """(user, level) pairs of the optimum stored at exact budget j."""
        pairs = []
        m = int(self.best_m[j])
        k = self.choice.shape[0] - 1
        while k > 0 and m > 0:
            c = int(self.choice[k, m, j])
            if c > 0:
                pairs.append((int(self.ranked[k - 1]), c))
                j -= c
                m -= 1
            k -= 1
        if j != 0 or m != 0:
            raise AssertionError("inconsistent stage-1 parent chain")
        return pairs


def _run_subcarrier_dp(get_value_matrix, K: int, M: int, n_budget: int, n_level: int, invalid):
    """Generic in-subcarrier DP over users in SIC order.

    get_value_matrix(k, m) returns the (n_budget+1, n_level+1) matrix of the
    rank-k user's penalized value at level j' (column) given that the m-1
    earlier users consume j - j' steps (row j).  Returns the final table and
    the decision array.
    """
    T = np.full((M + 1, n_budget + 1), NEG)
    T[0, 0] = 0.0
    choice = np.zeros((K + 1, M + 1, n_budget + 1), dtype=np.int32)
    jj = np.arange(n_budget + 1)
    gather = np.clip(jj[:, None] - jj[None, : n_level + 1], 0, n_budget)
    for k in range(1, K + 1):
        newT = T.copy()  # the skip branch
        for m in range(1, M + 1):
            C = get_value_matrix(k, m) + T[m - 1][gather]
            C[invalid] = NEG
            ext = C.max(axis=1)
            # ties go to the skip branch (fewer powered users), and argmax
            # picks the lowest level among equal extensions
            take = ext > newT[m]
            choice[k, m] = np.where(take, C.argmax(axis=1), 0)
            newT[m] = np.where(take, ext, newT[m])
        T = newT
    return T, choice


def stage1(
    inst: ProblemInstance,
    order: SicOrder,
    grid: PowerGrid,
    lam: np.ndarray,
    n: int,
    cache: SubcarrierRateCache | None = None,
) -> Stage1Tables:
    """Optimal intra-subcarrier allocation of every exact budget 0..J on
    subcarrier n, under per-user power penalties lambda."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("multipliers must be nonnegative")
    if cache is None:
        cache = SubcarrierRateCache(inst, order, grid)
    ranked = order.ranked[:, n]
    penalties = lam[ranked][:, None] * grid.levels[None, :]  # (K, J+1)
    mats = cache.wrate[n]

    def value(k, _m):
        return mats[k - 1] - penalties[k - 1][None, :]

    T, choice = _run_subcarrier_dp(value, inst.K, inst.M, grid.J, grid.J, cache.invalid)
    V = T.max(axis=0)
    best_m = T.argmax(axis=0)
    return Stage1Tables(V=V, best_m=best_m, T=T, choice=choice, ranked=ranked)


def stage2(V: np.ndarray, grid: PowerGrid, lam: np.ndarray, P_user: np.ndarray):
    """Split the total budget across subcarriers.

    V is the (N, J+1) stack of stage-1 values.  Returns the dual value
    z_D(lambda) (constant term sum_k lambda_k P_k added once), the (N, J+1)
    accumulated tables, and the per-(n, j) split decisions.
    """
    N, Jp1 = V.shape
    J = Jp1 - 1
    jj = np.arange(Jp1)
    diff = jj[:, None] - jj[None, :]
    gather = np.clip(diff, 0, J)
    mask = diff < 0
    That = np.full(Jp1, NEG)
    That[0] = 0.0
    tables = np.empty((N, Jp1))
    split = np.zeros((N, Jp1), dtype=np.int32)
    for n in range(N):
        C = V[n][None, :] + That[gather]
        C[mask] = NEG
        That = C.max(axis=1)
        split[n] = C.argmax(axis=1)  # first max: least power to this subcarrier
        tables[n] = That
    const = float(np.asarray(lam, dtype=float) @ np.asarray(P_user, dtype=float))
    z_d = float(That.max()) + const
    return z_d, tables, split


def _split_budgets(split: np.ndarray, j_star: int) -> np.ndarray:
    N = split.shape[0]
    budgets = np.zeros(N, dtype=int)
    j = j_star
    for n in reversed(range(N)):
        budgets[n] = split[n, j]
        j -= budgets[n]
    if j != 0:
        raise AssertionError("inconsistent stage-2 parent chain")
    return budgets


def solve_lr_d(
    inst: ProblemInstance,
    order: SicOrder,
    grid: PowerGrid,
    lam,
    cache: SubcarrierRateCache | None = None,
):
    """Solve the discretized Lagrangian subproblem exactly.

    Returns (z_D(lambda), level matrix, PowerAllocation).  Runtime is
    O(K N M J^2).
    """
    lam = np.asarray(lam, dtype=float)
    if cache is None:
        cache = SubcarrierRateCache(inst, order, grid)
    results = [stage1(inst, order, grid, lam, n, cache) for n in range(inst.N)]
    V = np.stack([r.V for r in results])
    z_d, tables, split = stage2(V, grid, lam, inst.P_user)
    j_star = int(tables[-1].argmax())
    budgets = _split_budgets(split, j_star)
    levels = np.zeros((inst.K, inst.N), dtype=np.int32)
    for n, res in enumerate(results):
        for user, lvl in res.backtrack(int(budgets[n])):
            levels[user, n] = lvl
    return z_d, levels, PowerAllocation(levels_to_power(levels, grid))
