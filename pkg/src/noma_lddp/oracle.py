"""Exhaustive brute-force solvers for small instances.

These are ground truth for equivalence tests: they enumerate the discrete
feasible set (or a fine continuous grid) directly, with no dynamic
programming or duality shortcuts.  Hard size guards refuse oversized
inputs instead of truncating the search.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .instance import ProblemInstance, SicOrder, sic_order
from .rates import PowerGrid

__all__ = ["OracleSizeError", "brute_force_discrete", "brute_force_continuous_sc"]

MAX_SEARCH_SPACE = int(1e8)


class OracleSizeError(ValueError):
    """Search space exceeds the safety guard."""


def _subcarrier_assignments(inst: ProblemInstance, order: SicOrder, grid: PowerGrid, n: int):
    """All ways to give at most M users on subcarrier n one level each.

    Yields (users, levels, total_steps, weighted_rate_sum, power_by_user)
    with users as a tuple of user ids.  The empty assignment is included.
    """
    K, M, J = inst.K, inst.M, grid.J
    ranked = order.ranked[:, n]
    gains = inst.gains[:, n]
    out = []
    for m in range(M + 1):
        for ranks in itertools.combinations(range(K), m):
            users = tuple(int(ranked[r]) for r in ranks)
            for levels in itertools.product(range(1, J + 1), repeat=m):
                total = sum(levels)
                if total > J:
                    continue
                # rates under SIC: interference from earlier-ranked members
                util = 0.0
                cum = 0.0
                for u, lvl in zip(users, levels):
                    p_u = lvl * grid.delta
                    g = gains[u]
                    util += inst.weights[u] * math.log1p(p_u * g / (cum * g + inst.noise))
                    cum += p_u
                out.append((users, levels, total, util))
    return out


def brute_force_discrete(inst: ProblemInstance, grid: PowerGrid | None = None, lam=None):
    """Exact maximum over all feasible discrete level assignments.

    With lam=None the objective is the WSR utility and the per-user power
    limits are enforced as constraints.  With a multiplier vector lam, the
    objective is the penalized Lagrangian (per-user limits dualized,
    constant sum_k lam_k P_k included) and only the total-power, per-
    subcarrier and one-level constraints apply.

    Returns (optimum value, level matrix).
    """
    if grid is None:
        grid = PowerGrid.for_instance(inst)
    order = sic_order(inst)
    per_sc = [_subcarrier_assignments(inst, order, grid, n) for n in range(inst.N)]
    space = 1
    for a in per_sc:
        space *= len(a)
    if space > MAX_SEARCH_SPACE:
        raise OracleSizeError(f"search space has ~{space:.2e} assignments (limit {MAX_SEARCH_SPACE:.0e})")

    penalized = lam is not None
    if penalized:
        lam = np.asarray(lam, dtype=float)
        const = float(lam @ inst.P_user)
    else:
        const = 0.0

    best = -np.inf
    best_choice = None
    for combo in itertools.product(*per_sc):
        total_steps = sum(c[2] for c in combo)
        if total_steps > grid.J:
            continue
        value = sum(c[3] for c in combo)
        if penalized:
            for (users, levels, _t, _u) in combo:
                for u, lvl in zip(users, levels):
                    value -= lam[u] * lvl * grid.delta
        else:
            user_power = np.zeros(inst.K)
            for (users, levels, _t, _u) in combo:
                for u, lvl in zip(users, levels):
                    user_power[u] += lvl * grid.delta
            if np.any(user_power > inst.P_user + 1e-12):
                continue
        if value > best:
            best = value
            best_choice = combo

    levels = np.zeros((inst.K, inst.N), dtype=np.int32)
    for n, (users, lvls, _t, _u) in enumerate(best_choice):
        for u, lvl in zip(users, lvls):
            levels[u, n] = lvl
    return best + const, levels


def brute_force_continuous_sc(
    gains_desc, P_tot: float, P_user, M: int, grid_points: int = 200, noise: float = 1.0
):
    """Grid search over the capped simplex for single-carrier sum rate.

    gains_desc must be sorted descending.  Returns the best sum rate found,
    a lower bound on the continuous optimum within grid resolution.
    Refuses K > 4.
    """
    gains = np.asarray(gains_desc, dtype=float)
    K = gains.size
    if K > 4:
        raise OracleSizeError(f"continuous oracle supports K <= 4, got K={K}")
    if K == 0:
        raise ValueError("gain vector must be nonempty")
    if (grid_points + 1) ** K > MAX_SEARCH_SPACE:
        raise OracleSizeError(f"{(grid_points + 1) ** K} grid points exceed the guard")
    caps = np.broadcast_to(np.asarray(P_user, dtype=float), (K,))

    axes = [np.linspace(0.0, min(caps[k], P_tot), grid_points + 1) for k in range(K)]
    grids = np.meshgrid(*axes, indexing="ij", sparse=True)
    total = sum(grids)
    n_users = sum((g > 0).astype(np.int8) for g in grids)
    feasible = (total <= P_tot + 1e-12) & (n_users <= M)

    # descending gains: user k is interfered by users 0..k-1
    utility = np.zeros(total.shape)
    cum = 0.0
    for k in range(K):
        utility = utility + np.log1p(grids[k] * gains[k] / (cum * gains[k] + noise))
        cum = cum + grids[k]
    utility = np.broadcast_to(utility, total.shape)
    return float(utility[feasible].max())
