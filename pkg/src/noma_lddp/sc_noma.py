"""Exact single-carrier sum-rate solver.

For sum-rate utility on one subcarrier the optimum fills users greedily in
descending-gain order: each of the first M users gets min(P_k, remaining
budget).  The positive-power users therefore always form a prefix of the
descending-gain order.
"""
from __future__ import annotations

import numpy as np

__all__ = ["solve_sc_sr"]


def solve_sc_sr(gains_desc, P_tot: float, P_user, M: int) -> np.ndarray:
    """Optimal SR power allocation on a single subcarrier.

    gains_desc must be sorted in descending order (caller applies the SIC
    ordering); P_user may be scalar or per-user.  Returns a length-K power
    vector aligned with gains_desc.
    """
    gains = np.asarray(gains_desc, dtype=float)
    if gains.size == 0:
        raise ValueError("gain vector must be nonempty")
    if np.any(np.diff(gains) > 0):
        raise ValueError("gains must be sorted in descending order")
    K = gains.size
    if not 1 <= M <= K:
        raise ValueError(f"M must satisfy 1 <= M <= K, got M={M}, K={K}")
    caps = np.broadcast_to(np.asarray(P_user, dtype=float), (K,))

    p = np.zeros(K)
    remaining = P_tot
    for k in range(M):
        p[k] = min(caps[k], remaining)
        remaining -= p[k]
        if remaining <= 0:
            break
    return p
