import math

import numpy as np
import pytest

from grouphedge.core import ContractError, NoActiveExpert, ProtocolError, Rounds
from grouphedge.experts import VawLearner
from grouphedge.groupwise import GroupwiseLearner, run_sequence

from conftest import random_rounds

# oracle value: p_0 for records (2, 2) and (0, 0), both active
P_22_00 = 0.80183463103651311883


class Constant:
    """Sub-learner that always proposes the same value."""

    def __init__(self, value):
        self.value = value
        self.seen = []

    def predict(self, x):
        return self.value

    def update(self, x, outcome, weight=1.0):
        self.seen.append((outcome, weight))


def oracle_weight(R, C):
    def phi(r, c):
        return 1.0 if c == 0 else math.exp(max(r, 0.0) ** 2 / (3 * c))

    return 0.5 * (phi(R + 1, C + 1) - phi(R - 1, C + 1))


def test_single_subsequence_reduces_to_sub_learner():
    r = random_rounds(3, K=1)
    gw = GroupwiseLearner.with_vaw(r.groups, r.dim)
    solo = VawLearner(r.dim)
    for t in range(len(r)):
        x = r.contexts[t]
        pred, trace = gw.predict(x, r.activity[t])
        assert pred == pytest.approx(min(max(solo.predict(x), 0.0), 1.0), abs=1e-12)
        gw.update(trace, x, r.outcomes[t])
        solo.update(x, r.outcomes[t])


def test_unanimous_proposals_are_played():
    gw = GroupwiseLearner([Constant(0.3), Constant(0.3), Constant(0.3)], mode="sample", seed=0)
    for t in range(20):
        act = np.array([1.0, t % 2, 1.0])
        pred, trace = gw.predict(None, act)
        assert pred == 0.3
        gw.update(trace, None, 0.9)


def test_mix_mode_with_forced_records():
    gw = GroupwiseLearner([Constant(1.0), Constant(0.0)], mode="mix")
    gw.hedge.R[:] = [2.0, 0.0]
    gw.hedge.C[:] = [2.0, 0.0]
    pred, trace = gw.predict(None, np.ones(2))
    assert pred == pytest.approx(P_22_00, rel=1e-12)
    np.testing.assert_allclose(trace.distribution, [P_22_00, 1 - P_22_00], rtol=1e-12)


def test_inactive_sub_learners_get_no_mass_and_no_update():
    subs = [Constant(0.1), Constant(0.9)]
    gw = GroupwiseLearner(subs, mode="sample", seed=1)
    for _ in range(10):
        pred, trace = gw.predict(None, np.array([1.0, 0.0]))
        assert trace.distribution[1] == 0.0 and pred == 0.1
        gw.update(trace, None, 0.5)
    assert len(subs[0].seen) == 10 and subs[1].seen == []
    assert gw.hedge.R[1] == 0.0 and gw.hedge.C[1] == 0.0


def test_scripted_records():
    gw = GroupwiseLearner([Constant(0.2), Constant(0.8)], mode="mix")
    script = [([1.0, 1.0], 0.0), ([1.0, 1.0], 1.0), ([0.0, 1.0], 0.5)]
    R, C = [0.0, 0.0], [0.0, 0.0]
    for act, y in script:
        w = [a * oracle_weight(R[i], C[i]) for i, a in enumerate(act)]
        p = [wi / sum(w) for wi in w] if sum(w) > 0 else [a / sum(act) for a in act]
        pred = 0.2 * p[0] + 0.8 * p[1]
        incurred = (pred - y) ** 2
        for i, z in enumerate((0.2, 0.8)):
            r = act[i] * (incurred - (z - y) ** 2)
            R[i] += r
            C[i] += abs(r)
        out, trace = gw.predict(None, np.array(act))
        assert out == pytest.approx(pred, abs=1e-12)
        gw.update(trace, None, y)
        np.testing.assert_allclose(gw.hedge.R, R, atol=1e-12)
        np.testing.assert_allclose(gw.hedge.C, C, atol=1e-12)


def test_first_round_records_by_hand():
    gw = GroupwiseLearner([Constant(0.2), Constant(0.8)], mode="mix")
    _, trace = gw.predict(None, np.ones(2))
    gw.update(trace, None, 0.0)
    # mix 0.5 -> incurred 0.25, experts 0.04 and 0.64
    np.testing.assert_allclose(gw.hedge.R, [0.21, -0.39], atol=1e-12)
    np.testing.assert_allclose(gw.hedge.C, [0.21, 0.39], atol=1e-12)


def test_sub_learner_sees_only_its_subsequence():
    r = random_rounds(5, T=150, K=3)
    gw = GroupwiseLearner.with_vaw(r.groups, r.dim, mode="sample", seed=2)
    proposals = []
    for t in range(len(r)):
        _, trace = gw.predict(r.contexts[t], r.activity[t])
        proposals.append(trace.proposals)
        gw.update(trace, r.contexts[t], r.outcomes[t])
    for k in range(3):
        solo = VawLearner(r.dim)
        for t in np.flatnonzero(r.activity[:, k] > 0):
            assert proposals[t][k] == pytest.approx(min(max(solo.predict(r.contexts[t]), 0), 1), abs=1e-12)
            solo.update(r.contexts[t], r.outcomes[t])


@pytest.mark.parametrize("mode", ["sample", "mix"])
def test_same_seed_same_run(mode):
    r = random_rounds(1)
    a = run_sequence(GroupwiseLearner.with_vaw(r.groups, r.dim, mode=mode, seed=4), r)
    b = run_sequence(GroupwiseLearner.with_vaw(r.groups, r.dim, mode=mode, seed=4), r)
    np.testing.assert_array_equal(a.alg_loss, b.alg_loss)
    np.testing.assert_array_equal(a.chosen, b.chosen)


@pytest.mark.parametrize("variant", ["vaw", "ridge"])
@pytest.mark.parametrize("mode", ["sample", "mix"])
@pytest.mark.parametrize("seed", range(3))
def test_fast_path_matches_generic(variant, mode, seed):
    r = random_rounds(seed, T=300, d=5, K=4, p_active=0.4)
    mk = lambda: GroupwiseLearner.with_vaw(r.groups, r.dim, variant=variant, mode=mode, seed=seed)
    fast_learner, slow_learner = mk(), mk()
    fast = run_sequence(fast_learner, r, fast=True)
    slow = run_sequence(slow_learner, r, fast=False)
    np.testing.assert_allclose(fast.alg_loss, slow.alg_loss, atol=1e-10)
    np.testing.assert_allclose(fast.expert_loss, slow.expert_loss, atol=1e-10)
    np.testing.assert_array_equal(fast.chosen, slow.chosen)
    np.testing.assert_allclose(fast_learner.hedge.R, slow_learner.hedge.R, atol=1e-9)
    for a, b in zip(fast_learner.sub_learners, slow_learner.sub_learners):
        np.testing.assert_allclose(a.state.a_inv, b.state.a_inv, atol=1e-10)


def test_protocol_errors():
    gw = GroupwiseLearner([Constant(0.5), Constant(0.5)])
    _, trace = gw.predict(None, np.ones(2))
    with pytest.raises(ProtocolError):
        gw.predict(None, np.ones(2))
    other = GroupwiseLearner([Constant(0.5), Constant(0.5)])
    _, foreign = other.predict(None, np.ones(2))
    with pytest.raises(ProtocolError):
        gw.update(foreign, None, 0.5)
    gw.update(trace, None, 0.5)
    with pytest.raises(ContractError):
        gw.predict(None, np.ones(3))
    with pytest.raises(ContractError):
        GroupwiseLearner([Constant(0.5)], mode="vote")


@pytest.mark.parametrize("fast", [True, False])
def test_no_active_expert_reports_round(fast):
    r = random_rounds(0, T=20, always_on=False, p_active=1.0)
    act = r.activity.copy()
    act[7] = 0.0
    r = Rounds(r.contexts, act, r.outcomes, r.groups)
    with pytest.raises(NoActiveExpert) as info:
        run_sequence(GroupwiseLearner.with_vaw(r.groups, r.dim, seed=0), r, fast=fast)
    assert info.value.round_index == 7


def test_empty_sequence():
    r = Rounds.empty(3, ["a", "b"])
    led = run_sequence(GroupwiseLearner.with_vaw(r.groups, 3), r)
    assert led.T == 0
    np.testing.assert_array_equal(led.alg_total, [0.0, 0.0])


def test_bad_label_carries_round_index():
    r = random_rounds(0, T=10)
    y = r.outcomes.copy()
    y[4] = 1.5
    r = Rounds(r.contexts, r.activity, y, r.groups)
    for fast in (True, False):
        with pytest.raises(ContractError) as info:
            run_sequence(GroupwiseLearner.with_vaw(r.groups, r.dim, seed=0), r, fast=fast)
        assert info.value.round_index == 4


@pytest.mark.parametrize("seed", range(3))
def test_regret_records_match_ledger(seed):
    # in mix mode the played loss is deterministic, so R_k is exactly
    # sum_t act_tk (loss_t - loss_tk)
    r = random_rounds(seed, T=400)
    gw = GroupwiseLearner.with_vaw(r.groups, r.dim, mode="mix")
    led = run_sequence(gw, r)
    want = (r.activity * (led.alg_loss[:, None] - led.expert_loss)).sum(axis=0)
    np.testing.assert_allclose(gw.hedge.R, want, atol=1e-9)
    assert np.all(gw.hedge.C >= np.abs(gw.hedge.R) - 1e-12)
