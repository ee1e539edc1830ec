"""SIC-aware SINR and rate computation.

All rates are in nats with normalized per-subcarrier bandwidth; physical
throughput scaling (B/N, bits) happens only at reporting time.  A user is
interfered by the users at strictly earlier SIC positions (better gains)
on the same subcarrier; signals of later users are decoded and cancelled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import ProblemInstance, SicOrder

__all__ = [
    "PowerAllocation",
    "PowerGrid",
    "rate_continuous",
    "subcarrier_rates",
    "wsr_utility",
    "sr_utility",
    "rate_discrete",
    "rate_overestimate",
    "levels_to_power",
    "x_to_levels",
]


@dataclass
class PowerAllocation:
    """A K x N nonnegative power matrix."""

    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if np.any(self.p < 0):
            raise ValueError("power allocation must be nonnegative")

    def users_on(self, n: int) -> np.ndarray:
        """Indices of users with positive power on subcarrier n."""
        return np.flatnonzero(self.p[:, n] > 0)

    def feasible_for(self, inst: ProblemInstance, tol: float = 1e-9) -> bool:
        """Total power, per-user limits, and the per-subcarrier user cap."""
        if self.p.shape != (inst.K, inst.N):
            return False
        if self.p.sum() > inst.P_tot + tol:
            return False
        if np.any(self.p.sum(axis=1) > inst.P_user + tol):
            return False
        counts = (self.p > 0).sum(axis=0)
        return bool(np.all(counts <= inst.M))


@dataclass(frozen=True)
class PowerGrid:
    """Uniform discretization of the power budget into J steps.

    levels[j] = j * delta for j = 0..J, with levels[J] = P_tot.
    """

    delta: float
    J: int

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError(f"grid step must be positive, got {self.delta}")
        if self.J < 1:
            raise ValueError(f"J must be >= 1, got {self.J}")

    @classmethod
    def for_instance(cls, inst: ProblemInstance) -> "PowerGrid":
        return cls(delta=inst.P_tot / inst.J, J=inst.J)

    @property
    def levels(self) -> np.ndarray:
        return self.delta * np.arange(self.J + 1)


def rate_continuous(inst: ProblemInstance, order: SicOrder, p: np.ndarray, k: int, n: int) -> float:
    """Rate of user k on subcarrier n under SIC, for power matrix p."""
    g = inst.gains[k, n]
    earlier = order.position[:, n] < order.position[k, n]
    interference = float(p[earlier, n].sum()) * g
    return float(np.log1p(p[k, n] * g / (interference + inst.noise)))


def subcarrier_rates(inst: ProblemInstance, order: SicOrder, p: np.ndarray, n: int) -> np.ndarray:
    """All K user rates on subcarrier n (vectorized over the SIC order)."""
    ranked = order.ranked[:, n]
    p_ranked = p[ranked, n]
    g_ranked = inst.gains[ranked, n]
    cum_before = np.concatenate(([0.0], np.cumsum(p_ranked)[:-1]))
    r_ranked = np.log1p(p_ranked * g_ranked / (cum_before * g_ranked + inst.noise))
    rates = np.empty(inst.K)
    rates[ranked] = r_ranked
    return rates


def wsr_utility(inst: ProblemInstance, p: np.ndarray, order: SicOrder | None = None) -> float:
    """Weighted sum rate over all users and subcarriers."""
    from .instance import sic_order

    if order is None:
        order = sic_order(inst)
    total = 0.0
    for n in range(inst.N):
        total += float(inst.weights @ subcarrier_rates(inst, order, p, n))
    return total


def sr_utility(inst: ProblemInstance, p: np.ndarray, order: SicOrder | None = None) -> float:
    """Sum rate: WSR with all weights equal to one."""
    return wsr_utility(inst.with_weights(np.ones(inst.K)), p, order)


def x_to_levels(x: np.ndarray) -> np.ndarray:
    """Collapse a K x N x J 0/1 level-selection tensor to a K x N level matrix.

    Raises if any (user, subcarrier) pair selects more than one level.
    """
    x = np.asarray(x)
    counts = (x != 0).sum(axis=2)
    if np.any(counts > 1):
        bad = np.argwhere(counts > 1)[0]
        raise ValueError(f"user {bad[0]} selects multiple power levels on subcarrier {bad[1]}")
    return np.where(counts == 1, (x != 0).argmax(axis=2) + 1, 0)  # level j in 1..J, 0 = none


def levels_to_power(levels: np.ndarray, grid: PowerGrid) -> np.ndarray:
    """Power matrix implied by a K x N level matrix (0 = no allocation)."""
    return grid.delta * np.asarray(levels, dtype=float)


def rate_discrete(
    inst: ProblemInstance, order: SicOrder, grid: PowerGrid, x: np.ndarray, k: int, n: int, j: int
) -> float:
    """Rate of user k on subcarrier n at power level j, with the co-channel
    interference implied by the 0/1 level assignment x (K x N x J)."""
    levels = x_to_levels(x)
    p = levels_to_power(levels, grid)
    p[k, n] = grid.delta * j
    return rate_continuous(inst, order, p, k, n)


def rate_overestimate(
    inst: ProblemInstance, order: SicOrder, grid: PowerGrid, x: np.ndarray, k: int, n: int, j: int
) -> float:
    """Over-estimated rate: own power inflated by one grid step, each
    interfering power deflated by one step (clamped at zero)."""
    levels = x_to_levels(x)
    g = inst.gains[k, n]
    earlier = (order.position[:, n] < order.position[k, n]) & (levels[:, n] > 0)
    deflated = np.maximum(grid.delta * (levels[earlier, n] - 1), 0.0)
    interference = float(deflated.sum()) * g
    own = grid.delta * (j + 1)
    return float(np.log1p(own * g / (interference + inst.noise)))
