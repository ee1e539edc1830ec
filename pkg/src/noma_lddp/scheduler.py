"""Multi-slot proportional-fair evaluation harness.

Each scheduling frame spans 20 slots and uses one channel realization.
Per slot, the chosen scheme maximizes WSR with weights 1/average-rate,
after which the exponentially-windowed averages are updated:

    avg_k(t) = (1 - 1/T) * avg_k(t-1) + (1/T) * rate_k(t-1)

Rates are reported in physical units (nats/s) by scaling the normalized
per-subcarrier rates with the subcarrier bandwidth, which keeps schemes
with different subcarrier geometries comparable.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines, lddp
from .instance import ChannelModelConfig, ProblemInstance, draw_channel, sic_order
from .rates import subcarrier_rates

__all__ = [
    "ScheduleConfig",
    "SlotTrace",
    "run_schedule",
    "jain_index",
    "grouping_histogram",
    "SOLVERS",
]

FRAME_SLOTS = 20


@dataclass(frozen=True)
class ScheduleConfig:
    channel: ChannelModelConfig
    K: int = 20
    N: int = 5
    M: int = 2
    J: int = 100
    P_tot: float = 1.0
    P_user: float = 0.2
    bandwidth_hz: float = 4.5e6
    # subgradient iteration cap for the per-slot WSR solves; the dual loop
    # converges in a few iterations, so a small cap keeps slots cheap
    lddp_c_max: int = 12


@dataclass
class SlotTrace:
    """Per-slot rates, weights, and running averages for one scheme."""

    rates: np.ndarray  # (slots, K) instantaneous physical rates
    weights: np.ndarray  # (slots, K) PF weights used in each slot
    averages: np.ndarray  # (slots + 1, K) windowed averages, row 0 = cold start
    allocations: list = field(default_factory=list)  # per-slot (power matrix, gains)
    distances: np.ndarray | None = None

    @property
    def final_averages(self) -> np.ndarray:
        return self.averages[-1]


def jain_index(avg_rates) -> float:
    """Fairness index (sum r)^2 / (K sum r^2), in [1/K, 1]."""
    r = np.asarray(avg_rates, dtype=float)
    if np.any(r < 0):
        raise ValueError("average rates must be nonnegative")
    denom = float((r**2).sum())
    if denom == 0.0:
        raise ValueError("Jain index undefined for an all-zero rate vector")
    return float(r.sum() ** 2 / (r.size * denom))


def _solve_lddp(inst: ProblemInstance, c_max: int) -> np.ndarray:
    report = lddp.solve(inst, c_max=c_max, compute_ub=False)
    return report.allocation.p


SOLVERS = {
    "lddp": None,  # handled specially (needs the iteration cap)
    "noma-ftpc": lambda inst: baselines.noma_ftpc(inst).p,
    "ofdma-ftpc": lambda inst: baselines.ofdma_ftpc(inst).p,
}


def _cold_start_rates(inst: ProblemInstance) -> np.ndarray:
    """Equal-power round-robin nominal rates; strictly positive for every
    user, so the first PF weights are finite."""
    counts = np.zeros(inst.N, dtype=int)
    p = np.zeros((inst.K, inst.N))
    for k in range(inst.K):
        n = k % inst.N
        counts[n] += 1
        p[k, n] = 1.0
    per_sc = inst.P_tot / inst.N
    p = p * (per_sc / np.maximum(counts, 1))[None, :]
    # nominal orthogonal rates: interference-free within the round-robin split
    g = inst.gains
    rates = (np.log1p(p * g / inst.noise)).sum(axis=1)
    return np.maximum(rates, 1e-300)


def run_schedule(
    cfg: ScheduleConfig,
    solver: str,
    slots: int,
    T: int,
    resolve_per: str = "slot",
) -> SlotTrace:
    """Run the PF harness for one scheme.

    resolve_per="frame" reuses the frame's first allocation for all of its
    slots (weights still update every slot); "slot" re-solves each slot.
    """
    if slots < 1 or T < 1:
        raise ValueError("slots and T must be >= 1")
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver '{solver}'")
    if resolve_per not in ("slot", "frame"):
        raise ValueError(f"resolve_per must be 'slot' or 'frame', got '{resolve_per}'")

    n_sc = 25 if solver == "ofdma-ftpc" else cfg.N
    bw_sc = cfg.bandwidth_hz / n_sc
    psd_w = 10.0 ** (cfg.channel.noise_psd_dbm_hz / 10.0) * 1e-3
    noise = psd_w * bw_sc

    rates = np.zeros((slots, cfg.K))
    weights = np.zeros((slots, cfg.K))
    averages = np.zeros((slots + 1, cfg.K))
    allocations = []

    inst = None
    avg = None
    frame_alloc = None
    distances = None
    for t in range(slots):
        if t % FRAME_SLOTS == 0:
            frame = t // FRAME_SLOTS
            ch_cfg = replace(cfg.channel, seed=cfg.channel.seed * 100003 + frame)
            gains, dists = draw_channel(ch_cfg, cfg.K, n_sc)
            if distances is None:
                distances = dists
            inst = ProblemInstance(
                K=cfg.K, N=n_sc, gains=gains, weights=np.ones(cfg.K),
                P_tot=cfg.P_tot, P_user=np.full(cfg.K, cfg.P_user),
                M=cfg.M, noise=noise, J=cfg.J,
            )
            frame_alloc = None
            if avg is None:
                avg = _cold_start_rates(inst) * bw_sc
                averages[0] = avg

        w = 1.0 / np.maximum(avg, 1e-300)
        weights[t] = w
        inst_t = inst.with_weights(w)
        if resolve_per == "frame" and frame_alloc is not None:
            p = frame_alloc
        elif solver == "lddp":
            p = _solve_lddp(inst_t, cfg.lddp_c_max)
        else:
            p = SOLVERS[solver](inst_t)
        if resolve_per == "frame":
            frame_alloc = p

        order = sic_order(inst_t)
        r = np.zeros(cfg.K)
        for n in range(inst_t.N):
            r += subcarrier_rates(inst_t, order, p, n)
        r *= bw_sc
        rates[t] = r
        allocations.append((p, inst_t.gains))

        avg = (1.0 - 1.0 / T) * avg + (1.0 / T) * r
        averages[t + 1] = avg

    return SlotTrace(
        rates=rates, weights=weights, averages=averages,
        allocations=allocations, distances=distances,
    )


def grouping_histogram(allocations) -> np.ndarray:
    """Histogram of SIC-position differences for two-user subcarriers.

    allocations is an iterable of (power matrix, gain matrix) pairs; users
    are indexed in descending gain per subcarrier, and every subcarrier
    with exactly two powered users contributes the difference of the two
    indices.  Returns counts for differences 1..K-1 (index 0 unused).
    """
    counts = None
    for p, gains in allocations:
        K, N = p.shape
        if counts is None:
            counts = np.zeros(K, dtype=int)
        for n in range(N):
            users = np.flatnonzero(p[:, n] > 0)
            if users.size != 2:
                continue
            order = np.argsort(-gains[:, n], kind="stable")
            pos = np.empty(K, dtype=int)
            pos[order] = np.arange(K)
            counts[abs(int(pos[users[0]]) - int(pos[users[1]]))] += 1
    if counts is None:
        raise ValueError("no allocations given")
    return counts
