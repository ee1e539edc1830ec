"""FTPC comparison schemes: greedy user grouping plus fractional transmit
power control.

Each subcarrier receives an equal share P_tot/N of the budget.  The first
group member is the best user by weighted gain; further members are added
greedily by the weighted sum rate the group would achieve under the FTPC
split, so highly weighted (starved) users win the multiplexed slots.  The
group splits its share with power proportional to gain^(-alpha), giving
weaker users more power.  NOMA-FTPC groups M users per subcarrier,
OFDMA-FTPC exactly one.
"""
from __future__ import annotations

import numpy as np

from .instance import ProblemInstance
from .rates import PowerAllocation

__all__ = ["ftpc_power", "noma_ftpc", "ofdma_ftpc", "FTPC_ALPHA"]

FTPC_ALPHA = 1.0


def ftpc_power(gains, budget: float, alpha: float = FTPC_ALPHA, caps=None) -> np.ndarray:
    """Split a power budget over users proportionally to gain^(-alpha).

    Caps (per-user limits) are honored by redistributing the excess among
    uncapped users; the total equals min(budget, sum(caps)).
    """
    gains = np.asarray(gains, dtype=float)
    if gains.size == 0:
        raise ValueError("user set must be nonempty")
    if budget <= 0:
        raise ValueError(f"budget must be positive, got {budget}")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    shares = gains ** (-alpha)
    if caps is None:
        return budget * shares / shares.sum()

    caps = np.broadcast_to(np.asarray(caps, dtype=float), gains.shape)
    p = np.zeros_like(gains)
    remaining = min(budget, float(caps.sum()))
    free = np.ones(gains.shape, dtype=bool)
    while remaining > 1e-15 and free.any():
        trial = remaining * shares * free / (shares * free).sum()
        over = free & (p + trial >= caps - 1e-15)
        if not over.any():
            p[free] += trial[free]
            break
        remaining -= float((caps[over] - p[over]).sum())
        p[over] = caps[over]
        free &= ~over
    return p


def _group_rates(gains, powers, noise: float) -> np.ndarray:
    """SIC rates within one group (descending gain decodes first)."""
    order = np.argsort(-gains, kind="stable")
    r = np.zeros(gains.size)
    cum = 0.0
    for i in order:
        r[i] = np.log1p(powers[i] * gains[i] / (cum * gains[i] + noise))
        cum += powers[i]
    return r


def _ftpc_allocation(inst: ProblemInstance, group_size: int) -> PowerAllocation:
    p = np.zeros((inst.K, inst.N))
    remaining = inst.P_user.astype(float).copy()
    per_sc = inst.P_tot / inst.N
    for n in range(inst.N):
        metric = inst.weights * inst.gains[:, n]
        eligible = np.flatnonzero(remaining > 1e-12)
        if eligible.size == 0:
            break
        group = [int(eligible[np.argmax(metric[eligible])])]
        while len(group) < group_size:
            best, best_val = None, -np.inf
            for k in eligible:
                if k in group:
                    continue
                trial = group + [int(k)]
                g = inst.gains[trial, n]
                powers = ftpc_power(g, per_sc, FTPC_ALPHA, caps=remaining[trial])
                val = float(inst.weights[trial] @ _group_rates(g, powers, inst.noise))
                if val > best_val:
                    best, best_val = int(k), val
            if best is None:
                break
            group.append(best)
        g = inst.gains[group, n]
        powers = ftpc_power(g, per_sc, FTPC_ALPHA, caps=remaining[group])
        p[group, n] = powers
        remaining[group] -= powers
    return PowerAllocation(p)


def noma_ftpc(inst: ProblemInstance) -> PowerAllocation:
    """Greedy M-user grouping per subcarrier with FTPC power allocation."""
    return _ftpc_allocation(inst, inst.M)


def ofdma_ftpc(inst: ProblemInstance) -> PowerAllocation:
    """Single-user-per-subcarrier variant (orthogonal access)."""
    return _ftpc_allocation(inst, 1)
