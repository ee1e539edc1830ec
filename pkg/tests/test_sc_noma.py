import numpy as np
import pytest

from noma_lddp import brute_force_continuous_sc, solve_sc_sr


def sc_sum_rate(gains_desc, p, noise):
    cum = 0.0
    total = 0.0
    for g, pw in zip(gains_desc, p):
        total += np.log1p(pw * g / (cum * g + noise))
        cum += pw
    return total


def test_prefix_fill_structure():
    p = solve_sc_sr([4.0, 3.0, 2.0, 1.0], P_tot=1.0, P_user=0.3, M=3)
    assert np.allclose(p, [0.3, 0.3, 0.3, 0.0])
    # positive powers form a prefix of the descending-gain order
    pos = p > 0
    assert not np.any(pos[np.argmin(pos):]) or pos.all()


def test_budget_exhausts_before_m():
    p = solve_sc_sr([4.0, 3.0, 2.0], P_tot=0.5, P_user=0.3, M=3)
    assert np.allclose(p, [0.3, 0.2, 0.0])
    assert np.isclose(p.sum(), 0.5)


def test_input_validation():
    with pytest.raises(ValueError, match="descending"):
        solve_sc_sr([1.0, 2.0], P_tot=1.0, P_user=1.0, M=1)
    with pytest.raises(ValueError, match="M must"):
        solve_sc_sr([2.0, 1.0], P_tot=1.0, P_user=1.0, M=3)
    with pytest.raises(ValueError, match="nonempty"):
        solve_sc_sr([], P_tot=1.0, P_user=1.0, M=1)


def test_partial_derivative_ordering(rng):
    # the SR partial derivative wrt p_k is larger for better-gain users at the
    # greedy solution, which is why the prefix fill is optimal
    gains = np.array([5.0, 2.0, 1.0])
    noise = 0.4
    p = solve_sc_sr(gains, P_tot=1.0, P_user=0.45, M=3)
    h = 1e-7
    derivs = []
    for k in range(3):
        up = p.copy()
        up[k] += h
        derivs.append((sc_sum_rate(gains, up, noise) - sc_sum_rate(gains, p, noise)) / h)
    assert derivs[0] > derivs[1] - 1e-4 > derivs[2] - 2e-4


def test_matches_continuous_oracle(rng):
    # grid error bound: oracle uses grid_points steps per axis
    for trial in range(100):
        K = int(rng.integers(1, 5))
        gains = np.sort(10.0 ** rng.uniform(-1, 1, size=K))[::-1]
        P_tot = float(rng.uniform(0.5, 2.0))
        P_user = float(rng.uniform(0.2, 1.0))
        M = int(rng.integers(1, K + 1))
        noise = float(rng.uniform(0.1, 1.0))
        p = solve_sc_sr(gains, P_tot, P_user, M)
        ours = sc_sum_rate(gains, p, noise)
        grid_points = 60 if K == 4 else 120
        oracle = brute_force_continuous_sc(gains, P_tot, P_user, M,
                                           grid_points=grid_points, noise=noise)
        # oracle is itself a feasible point, so ours must be >= oracle - eps
        assert ours >= oracle - 1e-9
