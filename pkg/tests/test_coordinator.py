import math

import numpy as np
import pytest

from adaptive_icic.coordinator import (PAPER_BIT_PAIRS, allocate_bits, bstar_bits,
                                       candidate_profiles, csi_cost, evaluate, nearest_victim,
                                       no_icic_profile, select_distributed, select_joint,
                                       static_icic_profile)
from adaptive_icic.network import LinkBudget, build_scenario, db_to_linear
from adaptive_icic.profiles import BF, IC, FeedbackConfig, StrategyProfile, enumerate_profiles
from adaptive_icic.rates import user_rate


def three(seed, p0_db=10.0, nt=4):
    return build_scenario("three_cell", "random", p0_db, nt=nt, seed=seed)[1]


def test_candidate_profiles_three_cell():
    b = three(0)
    profs = candidate_profiles(b, 4)
    assert len(profs) == 27
    assert profs[0] == no_icic_profile(3)
    assert static_icic_profile(3) in profs
    assert len(candidate_profiles(b, 2)) == 8  # IC(both) infeasible with 2 antennas


@pytest.mark.parametrize("seed", range(8))
def test_select_joint_is_exhaustive(seed):
    b = three(seed, p0_db=[-5, 0, 5, 10, 15, 20, 3, 8][seed])
    prof, rep = select_joint(b, 4)
    for p in candidate_profiles(b, 4):
        other = sum(user_rate(p, b, u, 4) for u in range(3))
        assert rep.sum_rate >= other - 1e-12
    assert rep.sum_rate >= evaluate(no_icic_profile(3), b, 4).sum_rate
    assert rep.sum_rate >= evaluate(static_icic_profile(3), b, 4).sum_rate
    assert rep.csi_cost == csi_cost(prof) <= 9
    assert rep.min_rate <= rep.sum_rate / 3


def test_two_cell_selection_examples():
    _, b = build_scenario("two_cell", (-0.5, 0.5), -5.0)
    assert select_joint(b, 4)[0].label() == "(BF,BF)"
    _, b = build_scenario("two_cell", (-0.1, 0.1), 10.0)
    assert select_joint(b, 4)[0].label() == "(IC,IC)"
    # user 1 interior, user 2 at the edge: BS 1 helps, BS 2 does not
    _, b = build_scenario("two_cell", (-0.9, 0.1), 5.0)
    assert select_joint(b, 4)[0].label() == "(IC,BF)"


def test_tie_break_prefers_fewer_constraints():
    # no interference at all: every profile that keeps full dof ties
    b = LinkBudget(1.0, 1.0, 3.7, np.diag([5.0, 5.0]))
    assert select_joint(b, 4)[0] == StrategyProfile((BF, BF))
    with pytest.raises(ValueError):
        select_joint(b, 4, profiles=[StrategyProfile((IC(1), BF))] * 0)


def test_restricted_profiles():
    b = three(1)
    p, _ = select_joint(b, 4, profiles=[static_icic_profile(3)])
    assert p == static_icic_profile(3)


def test_nearest_victim():
    p = np.array([[9.0, 1.0, 1.0], [5.0, 9.0, 1.0], [2.0, 1.0, 9.0]])
    b = LinkBudget(1.0, 1.0, 3.7, p)
    assert nearest_victim(b, 0) == 1
    assert nearest_victim(b, 1) == 0  # tie between users 0 and 2 -> lower index
    assert nearest_victim(b, 2) == 0


def test_csi_cost_counts():
    assert csi_cost(no_icic_profile(3)) == 3
    assert csi_cost(static_icic_profile(3)) == 9
    assert csi_cost(StrategyProfile((IC(1), BF, BF))) == 4


def test_bstar_bits():
    assert bstar_bits(float(db_to_linear(15.0)), 4, 2.0) == 18
    assert bstar_bits(1.0, 4, 2.0) == 3
    assert bstar_bits(1.0, 4, math.inf) == 0
    assert bstar_bits(1e-3, 4, 2.0) == 0
    for args in ((1.0, 4, 1.0), (0.0, 4, 2.0), (1.0, 1, 2.0)):
        with pytest.raises(ValueError):
            bstar_bits(*args)


def test_bstar_loss_per_user_at_edge():
    # all-IC profile, edge users, B_I = B*: loss within 1 bps/Hz per user
    users = np.array([[0.0, 0.05], [-0.04, -0.03], [0.04, -0.03]])
    for p0_db in (0.0, 5.0, 10.0, 15.0):
        _, b = build_scenario("three_cell", users, p0_db)
        bits = bstar_bits(float(db_to_linear(p0_db)), 4, 2.0)
        fb = FeedbackConfig.uniform(3, bits, bits)
        prof = static_icic_profile(3)
        for u in range(3):
            assert user_rate(prof, b, u, 4) - user_rate(prof, b, u, 4, fb) <= 1.0


def test_allocate_bits():
    b = three(4, p0_db=15.0)
    pair, prof, rate = allocate_bits(b, 4, 30)
    assert pair in PAPER_BIT_PAIRS
    assert rate >= select_joint(b, 4, FeedbackConfig.uniform(3, 10, 10))[1].sum_rate
    assert allocate_bits(b, 4, 30, [(8, 11)])[0] == (8, 11)
    with pytest.raises(ValueError):
        allocate_bits(b, 4, 30, [])
    with pytest.raises(ValueError):
        allocate_bits(b, 4, 30, [(10, 11)])


def test_allocate_bits_low_p0_is_flat_in_helper_bits():
    b = three(5, p0_db=-15.0)
    pair, prof, rate = allocate_bits(b, 4, 30)
    assert prof == no_icic_profile(3)
    rates = [select_joint(b, 4, FeedbackConfig.uniform(3, 10, bi))[1].sum_rate for bi in (10, 14)]
    assert rates[0] == rates[1]


@pytest.mark.parametrize("seed", range(6))
def test_distributed_not_better_than_joint(seed):
    b = three(seed, p0_db=5.0 + seed)
    d = select_distributed(b, 4)
    assert d.mode == "distributed"
    assert evaluate(d, b, 4).sum_rate <= select_joint(b, 4)[1].sum_rate + 1e-12
    assert select_distributed(b, 4, outer_noise_floor=0.5).mode == "distributed"
    with pytest.raises(ValueError):
        select_distributed(b, 4, -1.0)


def test_distributed_symmetric_and_high_p0():
    r = 0.05
    ang = np.deg2rad(90 + 120 * np.arange(3))
    users = r * np.column_stack([np.cos(ang), np.sin(ang)])
    _, b = build_scenario("three_cell", users, 25.0)
    d = select_distributed(b, 4)
    assert all(s == IC(*[k for k in range(3) if k != i]) for i, s in enumerate(d))
    _, b0 = build_scenario("three_cell", users * 10, 0.0)
    d0 = select_distributed(b0, 4)
    assert len({s.constraints for s in d0}) == 1
