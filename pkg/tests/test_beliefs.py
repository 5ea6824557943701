import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metaplan import beliefs, env
from metaplan.beliefs import (
    Computation,
    TERMINATE,
    available_computations,
    behavior_policy,
    belief_from_trial_state,
    best_paths,
    expected_path_value,
    fresh_belief,
    meta_reward,
    pseudo_reward,
    transition,
)


class TestComputations:
    def test_fresh_belief_has_thirteen(self, hv_belief):
        comps = available_computations(hv_belief)
        assert len(comps) == 13
        assert comps[-1].is_terminate
        assert all(not c.is_terminate for c in comps[:-1])

    def test_after_three_clicks_ten_remain(self, hv_belief):
        b = hv_belief
        for node in (1, 5, 9):
            b = transition(b, Computation(node), 100)
        assert len(available_computations(b)) == 10

    def test_all_observed_leaves_terminate_only(self, hv_belief):
        b = hv_belief
        for node in b.topology.non_root:
            b = transition(b, Computation(node), 50)
        assert available_computations(b) == (TERMINATE,)


class TestTransition:
    def test_observation_recorded(self, hv_belief):
        b = transition(hv_belief, Computation(4), 100)
        assert b.observed == {4: 100}
        assert b.node_mean(4) == 100.0
        assert b.node_std(4) == 0.0

    def test_order_does_not_matter(self, hv_belief):
        b1 = transition(transition(hv_belief, Computation(1), 50), Computation(2), -100)
        b2 = transition(transition(hv_belief, Computation(2), -100), Computation(1), 50)
        assert dict(b1.observed) == dict(b2.observed)

    def test_value_outside_support_rejected(self, hv_belief):
        with pytest.raises(beliefs.InconsistentObservationError):
            transition(hv_belief, Computation(4), 7)

    def test_double_observation_rejected(self, hv_belief):
        b = transition(hv_belief, Computation(4), 100)
        with pytest.raises(env.AlreadyRevealedError):
            transition(b, Computation(4), 100)

    def test_terminate_has_no_transition(self, hv_belief):
        with pytest.raises(beliefs.InvalidTransitionError):
            transition(hv_belief, TERMINATE, 0)


class TestExpectedPathValue:
    def test_fresh_hv_path(self, hv_belief):
        assert expected_path_value(hv_belief, (1, 4, 7)) == pytest.approx(-600.0)

    def test_fresh_lv_path(self, lv_belief):
        assert expected_path_value(lv_belief, (1, 4, 7)) == pytest.approx(0.0)

    def test_partially_observed(self, hv_belief):
        b = transition(hv_belief, Computation(1), 50)
        b = transition(b, Computation(4), 100)
        assert expected_path_value(b, (1, 4, 7)) == pytest.approx(-50.0)

    def test_fully_observed_equals_ground_truth(self, topology, hvlc):
        trial = env.sample_trial(topology, hvlc, 3)
        state = env.fresh_state(trial)
        for node in topology.non_root:
            state, _ = env.click(state, node)
        b = belief_from_trial_state(state)
        for path in topology.paths:
            assert expected_path_value(b, path) == pytest.approx(
                sum(trial.ground_truth[n] for n in path)
            )


class TestBehaviorPolicy:
    def test_dominant_path_chosen(self, hv_belief, rng):
        b = hv_belief
        for node, v in ((1, 100), (4, 100), (7, 100)):
            b = transition(b, Computation(node), v)
        assert behavior_policy(b, rng) == (1, 4, 7)

    def test_full_tie_uniform(self, hv_belief):
        rng = np.random.default_rng(0)
        counts = {p: 0 for p in hv_belief.topology.paths}
        for _ in range(6000):
            counts[behavior_policy(hv_belief, rng)] += 1
        freq = np.array(list(counts.values())) / 6000
        assert np.all(np.abs(freq - 1 / 6) < 0.03)

    def test_two_way_tie_near_half(self, hv_belief):
        b = hv_belief
        # paths through node 1 (both leaves) tie above the rest
        for node, v in ((1, 100), (4, 100)):
            b = transition(b, Computation(node), v)
        rng = np.random.default_rng(1)
        hits = sum(behavior_policy(b, rng) == (1, 4, 7) for _ in range(10_000))
        assert 0.47 < hits / 10_000 < 0.53
        assert set(best_paths(b)) == {(1, 4, 7), (1, 4, 8)}


class TestMetaReward:
    def test_click_cost_lvhc(self, topology, lvhc):
        b = fresh_belief(topology, lvhc)
        assert meta_reward(b, Computation(4)) == -5.0

    def test_terminate_fresh_lv(self, lv_belief):
        assert meta_reward(lv_belief, TERMINATE) == pytest.approx(0.0)

    def test_terminate_fresh_hv(self, hv_belief):
        assert meta_reward(hv_belief, TERMINATE) == pytest.approx(-600.0)

    def test_invariant_under_prior_mean_observation_off_argmax(self, topology):
        cond = env.Condition("SYM", (-2, 0, 2), -1)
        b = fresh_belief(topology, cond)
        b = transition(b, Computation(1), 2)  # unique argmax through node 1
        before = meta_reward(b, TERMINATE)
        b2 = transition(b, Computation(9), 0)  # off-argmax, value == prior mean
        assert meta_reward(b2, TERMINATE) == pytest.approx(before)


def toy_two_path():
    topology = env.TreeTopology({0: [1, 2]})
    condition = env.Condition("TOY", (-10, 0, 10), -1)
    return topology, condition


class TestPseudoReward:
    def test_terminate_pr_is_zero(self, hv_belief):
        assert pseudo_reward(hv_belief, TERMINATE, hv_belief) == 0.0

    def test_best_path_unchanged_gives_zero(self, hv_belief):
        b1 = transition(hv_belief, Computation(1), 100)  # unique best via node 1
        b2 = transition(b1, Computation(2), -1000)  # confirms it, best unchanged
        assert pseudo_reward(b1, Computation(2), b2) == pytest.approx(0.0)

    def test_two_path_toy_example(self):
        topology, condition = toy_two_path()
        b0 = fresh_belief(topology, condition)
        b1 = transition(b0, Computation(1), -10)
        assert pseudo_reward(b0, Computation(1), b1) == pytest.approx(10.0)

    def test_unrelated_beliefs_rejected(self, hv_belief):
        b1 = transition(hv_belief, Computation(1), 100)
        b2 = transition(b1, Computation(2), 100)
        with pytest.raises(beliefs.InvalidTransitionError):
            pseudo_reward(hv_belief, Computation(1), b2)
        with pytest.raises(beliefs.InvalidTransitionError):
            pseudo_reward(b1, Computation(1), b1)

    @settings(max_examples=60, deadline=None)
    @given(
        observations=st.lists(
            st.tuples(st.sampled_from(range(1, 13)), st.sampled_from([-1000, -100, -50, 50, 100])),
            max_size=11,
        ),
        click_value=st.sampled_from([-1000, -100, -50, 50, 100]),
    )
    def test_pr_nonnegative_property(self, observations, click_value):
        topology = env.default_topology()
        condition = env.get_condition("HVLC")
        b = fresh_belief(topology, condition)
        for node, value in observations:
            if node not in b.observed:
                b = transition(b, Computation(node), value)
        unobserved = b.unobserved()
        if not unobserved:
            return
        comp = Computation(unobserved[0])
        b2 = transition(b, comp, click_value)
        assert pseudo_reward(b, comp, b2) >= 0.0


def brute_force_pr(belief_before, node, belief_after):
    """Independent enumeration of path expectations and the tie rule."""
    paths = belief_before.topology.paths

    def ev(belief, path):
        total = 0.0
        for n in path:
            if n in belief.observed:
                total += belief.observed[n]
            else:
                total += sum(belief.condition.reward_set) / len(belief.condition.reward_set)
        return total

    new_values = [ev(belief_after, p) for p in paths]
    old_values = [ev(belief_before, p) for p in paths]
    old_best = max(old_values)
    old_argmax = [p for p, v in zip(paths, old_values) if v >= old_best - 1e-9]
    return max(new_values) - min(ev(belief_after, p) for p in old_argmax)


def test_brute_force_oracle_small_trees():
    """PR equals exhaustive enumeration on trees with <= 6 nodes and
    support size <= 3, over every reachable belief and transition."""
    cases = [
        (env.TreeTopology({0: [1, 2]}), (-10, 0, 10)),
        (env.TreeTopology({0: [1, 2], 1: [3], 2: [4]}), (-3, 3)),
        (env.TreeTopology({0: [1], 1: [2, 3]}), (-1, 0, 1)),
        (env.TreeTopology({0: [1, 2], 1: [3, 4], 2: [5, 6]}), (-5, 5)),
    ]
    for topology, support in cases:
        condition = env.Condition("T", support, -1)
        nodes = topology.non_root
        options = [(None, *support)] * len(nodes)
        for assignment in itertools.product(*options):
            observed = {n: v for n, v in zip(nodes, assignment) if v is not None}
            before = beliefs.BeliefState(topology, condition, observed)
            for node in before.unobserved():
                for value in support:
                    comp = Computation(node)
                    after = transition(before, comp, value)
                    expected = brute_force_pr(before, node, after)
                    got = pseudo_reward(before, comp, after)
                    assert got == pytest.approx(expected, abs=1e-12)
                    assert got >= 0.0


def test_belief_json():
    topology = env.default_topology()
    b = fresh_belief(topology, env.get_condition("LVLC"))
    b = transition(b, Computation(4), 6)
    obj = b.to_json()
    assert obj["4"] == 6
    assert obj["1"] == "unobserved"
    assert len(obj) == 12
