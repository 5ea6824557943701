import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metaplan import env
from metaplan.beliefs import Computation, TERMINATE, available_computations, fresh_belief, transition
from metaplan.features import compute_feature_matrix
from metaplan.models.reinforce import (
    ADAM_EPS,
    ReinforceState,
    TrajectoryStep,
    episode_update,
    grad_log_policy,
    make_reinforce_state,
    policy_distribution,
)
from metaplan.models.variants import Agent, parse_variant, run_variant_trial


def simple_state(alpha=0.01, gamma=0.95, tau=1.0, theta=None, n=52, **kw):
    state = make_reinforce_state(alpha, gamma, tau, n_features=n, **kw)
    if theta is not None:
        state.theta = np.asarray(theta, dtype=float)
    return state


class TestPolicy:
    def test_equal_logits_half_half(self):
        state = simple_state(theta=np.zeros(3), n=3)
        feats = np.array([[1.0, 0, 0], [1.0, 0, 0]])
        assert policy_distribution(state, feats) == pytest.approx([0.5, 0.5])

    def test_zero_theta_uniform(self, hv_belief):
        state = simple_state()
        comps = available_computations(hv_belief)
        feats = compute_feature_matrix(hv_belief, comps)
        probs = policy_distribution(state, feats)
        assert probs == pytest.approx(np.full(13, 1 / 13))

    def test_softmax_arithmetic(self):
        state = simple_state(theta=[1.0], n=1)
        feats = np.array([[1.0], [0.0]])  # logits (1, 0)
        probs = policy_distribution(state, feats)
        e = np.e
        assert probs == pytest.approx([e / (e + 1), 1 / (e + 1)])

    def test_probabilities_sum_to_one(self, hv_belief, rng):
        state = simple_state(theta=rng.normal(size=52) * 0.01)
        comps = available_computations(hv_belief)
        feats = compute_feature_matrix(hv_belief, comps)
        assert policy_distribution(state, feats).sum() == pytest.approx(1.0)

    def test_nonfinite_logits_rejected(self):
        state = simple_state(theta=[np.inf], n=1)
        with pytest.raises(ValueError):
            policy_distribution(state, np.array([[1.0], [0.0]]))

    @settings(max_examples=30, deadline=None)
    @given(k=st.floats(0.1, 100.0), seed=st.integers(0, 100))
    def test_temperature_scale_invariance(self, k, seed):
        rng = np.random.default_rng(seed)
        theta = rng.normal(size=5)
        feats = rng.normal(size=(4, 5))
        base = policy_distribution(simple_state(tau=1.0, theta=theta, n=5), feats)
        scaled = policy_distribution(simple_state(tau=k, theta=k * theta, n=5), feats)
        assert scaled == pytest.approx(base, rel=1e-9)
        assert np.argmax(base) == np.argmax(scaled)


class TestGradient:
    def test_single_option_zero_gradient(self):
        state = simple_state(theta=np.ones(3), n=3)
        feats = np.array([[1.0, 2.0, 3.0]])
        assert grad_log_policy(state, feats, 0) == pytest.approx(np.zeros(3))

    def test_matches_finite_differences(self, rng):
        for _ in range(20):
            n = 6
            theta = rng.normal(size=n)
            feats = rng.normal(size=(5, n))
            chosen = int(rng.integers(5))
            state = simple_state(tau=float(rng.uniform(0.5, 3)), theta=theta, n=n)
            grad = grad_log_policy(state, feats, chosen)
            h = 1e-6
            fd = np.zeros(n)
            for i in range(n):
                for sign in (+1, -1):
                    s = simple_state(tau=state.tau, theta=theta, n=n)
                    s.theta = theta.copy()
                    s.theta[i] += sign * h
                    p = policy_distribution(s, feats)[chosen]
                    fd[i] += sign * np.log(p)
                fd[i] /= 2 * h
            assert np.max(np.abs(fd - grad)) / max(1.0, np.max(np.abs(grad))) < 1e-5

    def test_score_function_identity(self, rng):
        # E_pi[grad log pi] = 0
        n = 4
        theta = rng.normal(size=n)
        feats = rng.normal(size=(6, n))
        state = simple_state(theta=theta, n=n)
        probs = policy_distribution(state, feats)
        total = sum(p * grad_log_policy(state, feats, i) for i, p in enumerate(probs))
        assert total == pytest.approx(np.zeros(n), abs=1e-12)


def step(feats, idx, reward, comp=None):
    return TrajectoryStep(np.asarray(feats, dtype=float), idx, reward, comp or TERMINATE)


class TestEpisodeUpdate:
    def test_zero_rewards_leave_theta(self):
        state = simple_state(theta=np.array([0.3, -0.2]), n=2)
        traj = [step([[1.0, 0], [0, 1.0]], 0, 0.0), step([[1.0, 0], [0, 1.0]], 1, 0.0)]
        new = episode_update(state, traj)
        assert new.theta == pytest.approx(state.theta)
        assert new.adam.t == 1

    def test_empty_trajectory_rejected(self):
        with pytest.raises(ValueError):
            episode_update(simple_state(), [])

    def test_gamma_zero_keeps_first_step_only(self):
        feats_a = [[1.0, 0], [0, 1.0]]
        feats_b = [[0.5, 0.5], [1.0, -1.0]]
        s0 = simple_state(gamma=0.0, theta=np.zeros(2), n=2)
        full = episode_update(s0, [step(feats_a, 0, 2.0), step(feats_b, 1, 5.0)])
        first_only = episode_update(s0, [step(feats_a, 0, 2.0)])
        assert full.theta == pytest.approx(first_only.theta)

    def test_first_adam_step_closed_form(self):
        theta = np.array([0.1, -0.4, 0.0])
        state = simple_state(alpha=0.02, gamma=1.0, tau=2.0, theta=theta, n=3)
        feats = np.array([[1.0, 0, 2.0], [0, 1.0, 0]])
        reward = 3.0
        g = reward * grad_log_policy(state, feats, 0)
        new = episode_update(state, [step(feats, 0, reward)])
        expected = theta + 0.02 * g / (np.abs(g) + ADAM_EPS)
        assert new.theta == pytest.approx(expected, rel=1e-9)

    def test_deterministic(self):
        state = simple_state(theta=np.array([0.5, 0.5]), n=2)
        traj = [step([[1.0, 0], [0, 1.0]], 0, 1.5), step([[2.0, 0], [0, 0.5]], 1, -1.0)]
        a = episode_update(state, traj)
        b = episode_update(state, traj)
        assert a.theta == pytest.approx(b.theta)
        assert a.adam.m == pytest.approx(b.adam.m)

    def test_return_to_go_weights(self):
        # with gamma=1, return-to-go weights are suffix sums of rewards
        feats = [[1.0], [0.0]]
        s_literal = simple_state(alpha=0.1, gamma=1.0, theta=np.zeros(1), n=1)
        s_rtg = simple_state(alpha=0.1, gamma=1.0, theta=np.zeros(1), n=1, return_to_go=True)
        traj = [step(feats, 0, 1.0), step(feats, 0, 2.0)]
        lit = episode_update(s_literal, traj)
        rtg = episode_update(s_rtg, traj)
        g = grad_log_policy(s_literal, np.asarray(feats), 0)
        lit_expected = 0.1 * np.sign((1.0 + 2.0) * g)
        rtg_expected = 0.1 * np.sign((3.0 + 2.0) * g)
        assert lit.theta == pytest.approx(lit_expected, abs=1e-6)
        assert rtg.theta == pytest.approx(rtg_expected, abs=1e-6)

    def test_update_does_not_mutate_input(self):
        state = simple_state(theta=np.array([1.0]), n=1)
        before = state.theta.copy()
        episode_update(state, [step([[1.0], [0.0]], 0, 1.0)])
        assert state.theta == pytest.approx(before)
        assert state.adam.t == 0


class TestRunTrial:
    def test_terminate_heavy_policy_clicks_zero(self, topology, hvlc):
        # strongly negative weight on the click constant, near-greedy tau
        theta = np.zeros(52)
        theta[0] = -100.0
        agent = Agent(parse_variant("rf"), simple_state(tau=0.001, theta=theta))
        trial = env.sample_trial(topology, hvlc, 0)
        outcome = run_variant_trial(agent, trial, None, np.random.default_rng(0))
        assert outcome.n_clicks == 0
        assert outcome.trajectory[-1].computation.is_terminate

    def test_seed_reproducibility(self, topology, hvlc):
        def run(seed):
            agent = Agent(parse_variant("rf_pr"), simple_state())
            trial = env.sample_trial(topology, hvlc, 5)
            return run_variant_trial(agent, trial, None, np.random.default_rng(seed))

        a, b = run(9), run(9)
        assert a.clicks == b.clicks
        assert a.chosen_path == b.chosen_path
        assert a.score == b.score

    def test_trajectory_ends_with_terminate(self, topology, lvlc):
        agent = Agent(parse_variant("rf"), simple_state())
        trial = env.sample_trial(topology, lvlc, 1)
        outcome = run_variant_trial(agent, trial, None, np.random.default_rng(3))
        assert len(outcome.trajectory) >= 1
        assert outcome.trajectory[-1].computation.is_terminate
        assert all(not s.computation.is_terminate for s in outcome.trajectory[:-1])

    def test_pr_rewards_dominate_no_pr(self, topology, hvlc):
        """With identical actions, PR adds a nonnegative term to each click."""
        rng_a = np.random.default_rng(11)
        rng_b = np.random.default_rng(11)
        agent_a = Agent(parse_variant("rf"), simple_state())
        agent_b = Agent(parse_variant("rf_pr"), simple_state())
        trial = env.sample_trial(topology, hvlc, 2)
        out_a = run_variant_trial(agent_a, trial, None, rng_a)
        out_b = run_variant_trial(agent_b, trial, None, rng_b)
        assert out_a.clicks == out_b.clicks  # same seed, same first-trial actions
        for sa, sb in zip(out_a.trajectory[:-1], out_b.trajectory[:-1]):
            assert sb.reward >= sa.reward

    def test_state_serialization_round_trip(self):
        state = simple_state(theta=np.arange(52, dtype=float))
        state.adam.m[:] = 0.5
        state.adam.t = 7
        again = ReinforceState.from_json(state.to_json())
        assert again.theta == pytest.approx(state.theta)
        assert again.adam.t == 7
        assert again.tau == state.tau
