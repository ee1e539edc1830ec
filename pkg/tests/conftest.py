"""Shared helpers for the test suite."""
import numpy as np
import pytest

from noma_lddp import ProblemInstance


def random_instance(rng, K=None, N=None, M=None, J=None, snr_spread=4.0):
    """Small random instance with O(1) gains/noise, convenient for oracles."""
    K = K if K is not None else int(rng.integers(1, 4))
    N = N if N is not None else int(rng.integers(1, 3))
    M = M if M is not None else int(rng.integers(1, min(K, 2) + 1))
    J = J if J is not None else int(rng.integers(2, 9))
    gains = 10.0 ** rng.uniform(-snr_spread / 2, snr_spread / 2, size=(K, N))
    weights = rng.uniform(0.5, 2.0, size=K)
    P_tot = float(rng.uniform(0.5, 2.0))
    P_user = rng.uniform(0.2, 1.0, size=K) * P_tot
    return ProblemInstance(
        K=K, N=N, gains=gains, weights=weights,
        P_tot=P_tot, P_user=P_user, M=M, noise=float(rng.uniform(0.05, 1.0)), J=J,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(7)
