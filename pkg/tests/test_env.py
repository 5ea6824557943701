import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metaplan import env
from tests.conftest import make_trial


class TestTopology:
    def test_default_has_six_paths_of_length_three(self, topology):
        assert len(topology.paths) == 6
        assert all(len(p) == 3 for p in topology.paths)
        assert len(topology.non_root) == 12

    def test_branching_structure(self, topology):
        assert topology.children[0] == (1, 2, 3)
        assert topology.depth[1] == 1
        assert set(topology.leaves) == {7, 8, 9, 10, 11, 12}
        assert topology.ancestors[7] == (4, 1)
        assert topology.descendants[1] == (4, 7, 8)
        assert topology.siblings[2] == (1, 3)

    def test_json_round_trip(self, topology):
        again = env.TreeTopology.from_json(topology.to_json())
        assert again == topology
        assert again.paths == topology.paths

    def test_rejects_multiple_parents(self):
        with pytest.raises(env.TopologyError):
            env.TreeTopology({0: [1, 2], 1: [3], 2: [3]})

    def test_rejects_cycle_to_root(self):
        with pytest.raises(env.TopologyError):
            env.TreeTopology({0: [1], 1: [0]})

    def test_rejects_disconnected(self):
        with pytest.raises(env.TopologyError):
            env.TreeTopology({0: [1], 5: [6]})


class TestConditions:
    def test_exactly_four_presets(self):
        presets = env.condition_presets()
        assert len(presets) == 4
        assert [c.label for c in presets] == ["HVHC", "HVLC", "LVHC", "LVLC"]

    def test_hvlc_preset(self):
        c = env.get_condition("HVLC")
        assert c.reward_set == (-1000, -100, -50, 50, 100)
        assert c.click_cost == -1

    def test_lvhc_preset(self):
        c = env.get_condition("LVHC")
        assert c.reward_set == (-6, -4, -2, 2, 4, 6)
        assert c.click_cost == -5

    def test_costs(self):
        assert env.get_condition("HVHC").click_cost == -5
        assert env.get_condition("LVLC").click_cost == -1

    def test_empty_reward_set_rejected(self):
        with pytest.raises(ValueError):
            env.Condition("X", (), -1)

    def test_positive_click_cost_rejected(self):
        with pytest.raises(ValueError):
            env.Condition("X", (1, 2), 1)


class TestSampling:
    def test_singleton_support(self, topology):
        cond = env.Condition("X", (5,), -1)
        trial = env.sample_trial(topology, cond, 0)
        assert all(v == 5 for v in trial.ground_truth.values())

    def test_same_seed_same_trial(self, topology, hvlc):
        a = env.sample_trial(topology, hvlc, 42)
        b = env.sample_trial(topology, hvlc, 42)
        assert a.ground_truth == b.ground_truth

    def test_different_seeds_differ(self, topology, hvlc):
        a = env.sample_trial(topology, hvlc, 1)
        b = env.sample_trial(topology, hvlc, 2)
        assert a.ground_truth != b.ground_truth

    def test_lv_empirical_mean_near_zero(self, topology, lvlc):
        rng = np.random.default_rng(0)
        values = []
        n_trials = 100_000 // len(topology.non_root) + 1
        for _ in range(n_trials):
            values.extend(env.sample_trial(topology, lvlc, rng).ground_truth.values())
        assert abs(np.mean(values[:100_000])) < 0.05

    def test_ground_truth_coverage_enforced(self, topology, hvlc):
        with pytest.raises(ValueError):
            env.Trial(topology, hvlc, {1: 50})


class TestClicking:
    def test_click_reveals_value_and_charges(self, topology, hvlc):
        trial = make_trial(topology, hvlc, {**{n: 100 for n in topology.non_root}, 4: -50})
        state = env.fresh_state(trial)
        state, value = env.click(state, 4)
        assert value == -50
        assert state.revealed == {4: -50}
        assert state.score == -1
        assert state.clicks_made == (4,)

    def test_double_click_rejected(self, topology, hvlc):
        state = env.fresh_state(make_trial(topology, hvlc, 50))
        state, _ = env.click(state, 4)
        with pytest.raises(env.AlreadyRevealedError):
            env.click(state, 4)

    def test_root_click_rejected(self, topology, hvlc):
        state = env.fresh_state(make_trial(topology, hvlc, 50))
        with pytest.raises(env.InvalidNodeError):
            env.click(state, 0)

    def test_unknown_node_rejected(self, topology, hvlc):
        state = env.fresh_state(make_trial(topology, hvlc, 50))
        with pytest.raises(env.InvalidNodeError):
            env.click(state, 99)

    def test_click_after_termination_rejected(self, topology, hvlc):
        state = env.terminate_planning(env.fresh_state(make_trial(topology, hvlc, 50)))
        with pytest.raises(env.TrialTerminatedError):
            env.click(state, 4)

    def test_click_all_twelve_at_high_cost(self, topology):
        cond = env.get_condition("HVHC")
        state = env.fresh_state(make_trial(topology, cond, 50))
        for node in topology.non_root:
            state, _ = env.click(state, node)
        assert state.score == -60
        assert len(state.clicks_made) == 12


class TestActing:
    def test_score_example(self, topology, hvlc):
        gt = {n: 0 for n in topology.non_root}
        gt.update({1: 50, 4: 100, 7: -50})
        state = env.fresh_state(make_trial(topology, hvlc, gt))
        for node in (2, 3, 5):
            state, _ = env.click(state, node)
        state = env.terminate_planning(state)
        state, score = env.act(state, (1, 4, 7))
        assert score == 97

    def test_zero_clicks_zero_path(self, topology, hvlc):
        state = env.fresh_state(make_trial(topology, hvlc, 0))
        state = env.terminate_planning(state)
        _, score = env.act(state, (1, 4, 7))
        assert score == 0

    def test_lvlc_example(self, topology, lvlc):
        gt = {n: 0 for n in topology.non_root}
        gt.update({1: 2, 4: 4, 7: 6})
        state = env.fresh_state(make_trial(topology, lvlc, gt))
        state, _ = env.click(state, 9)
        state, _ = env.click(state, 10)
        state = env.terminate_planning(state)
        _, score = env.act(state, (1, 4, 7))
        assert score == 10

    def test_act_requires_termination(self, topology, hvlc):
        state = env.fresh_state(make_trial(topology, hvlc, 0))
        with pytest.raises(env.PlanningActiveError):
            env.act(state, (1, 4, 7))

    def test_invalid_path_rejected(self, topology, hvlc):
        state = env.terminate_planning(env.fresh_state(make_trial(topology, hvlc, 0)))
        with pytest.raises(env.InvalidPathError):
            env.act(state, (1, 4, 9))
        with pytest.raises(env.InvalidPathError):
            env.act(state, (1, 4))

    def test_double_act_rejected(self, topology, hvlc):
        state = env.terminate_planning(env.fresh_state(make_trial(topology, hvlc, 0)))
        state, _ = env.act(state, (1, 4, 7))
        with pytest.raises(env.TrialTerminatedError):
            env.act(state, (1, 4, 8))


@settings(max_examples=50, deadline=None)
@given(
    clicks=st.sets(st.sampled_from(range(1, 13)), max_size=12),
    path_idx=st.integers(0, 5),
    seed=st.integers(0, 10_000),
)
def test_score_decomposition_property(clicks, path_idx, seed):
    """final score == path sum + click_cost * n_clicks for any trajectory."""
    topology = env.default_topology()
    condition = env.get_condition("HVHC")
    trial = env.sample_trial(topology, condition, seed)
    state = env.fresh_state(trial)
    for node in sorted(clicks):
        state, _ = env.click(state, node)
    state = env.terminate_planning(state)
    path = topology.paths[path_idx]
    _, score = env.act(state, path)
    expected = sum(trial.ground_truth[n] for n in path) + condition.click_cost * len(clicks)
    assert score == expected
    assert len(state.clicks_made) <= len(topology.non_root)


def test_best_possible_path_value(topology):
    assert env.best_possible_path_value(topology, env.get_condition("HVHC")) == 300
    assert env.best_possible_path_value(topology, env.get_condition("LVLC")) == 18
