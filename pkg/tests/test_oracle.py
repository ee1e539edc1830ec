import numpy as np
import pytest

from noma_lddp import (
    OracleSizeError,
    PowerGrid,
    ProblemInstance,
    brute_force_continuous_sc,
    brute_force_discrete,
    sic_order,
    wsr_utility,
)
from noma_lddp.rates import levels_to_power

from conftest import random_instance


def test_empty_assignment_always_feasible(rng):
    inst = random_instance(rng, K=2, N=1, M=1, J=3)
    opt, _ = brute_force_discrete(inst)
    assert opt >= 0.0


def test_constrained_mode_respects_user_limits(rng):
    for _ in range(10):
        inst = random_instance(rng, K=2, N=2, M=2, J=5)
        grid = PowerGrid.for_instance(inst)
        opt, levels = brute_force_discrete(inst, grid)
        p = levels_to_power(levels, grid)
        assert np.all(p.sum(axis=1) <= inst.P_user + 1e-12)
        assert p.sum() <= inst.P_tot + 1e-12
        assert np.isclose(wsr_utility(inst, p, sic_order(inst)), opt, rtol=1e-9)


def test_constrained_mode_dominated_by_penalized(rng):
    # for any lam >= 0 the penalized optimum upper-bounds the constrained one
    for _ in range(10):
        inst = random_instance(rng, K=2, N=2, M=2, J=5)
        grid = PowerGrid.for_instance(inst)
        constrained, _ = brute_force_discrete(inst, grid)
        lam = rng.uniform(0, 2, size=inst.K)
        penalized, _ = brute_force_discrete(inst, grid, lam=lam)
        assert penalized >= constrained - 1e-9


def test_size_guard_raises():
    inst = ProblemInstance(K=8, N=4, gains=np.ones((8, 4)), weights=np.ones(8),
                           P_tot=1.0, P_user=np.ones(8), M=4, noise=0.1, J=20)
    with pytest.raises(OracleSizeError):
        brute_force_discrete(inst)


def test_continuous_sc_single_user_closed_form():
    got = brute_force_continuous_sc([2.0], P_tot=1.0, P_user=0.5, M=1,
                                    grid_points=400, noise=0.5)
    assert np.isclose(got, np.log1p(0.5 * 2.0 / 0.5), atol=1e-6)


def test_continuous_sc_respects_m():
    # with M=1 only one user can be on; best single user is the strongest
    got = brute_force_continuous_sc([4.0, 3.9], P_tot=1.0, P_user=1.0, M=1,
                                    grid_points=200, noise=1.0)
    assert np.isclose(got, np.log1p(4.0), atol=1e-9)


def test_continuous_sc_size_guard():
    with pytest.raises(OracleSizeError):
        brute_force_continuous_sc([5.0, 4.0, 3.0, 2.0, 1.0], 1.0, 1.0, 2)
