"""
tests/test_simulate.py

Monte-Carlo checks against exact reach probabilities and costs.
"""

import pytest

from src.discount_core import evaluate_cost
from src.instances import loop_exit, loop_exit_policy, two_path
from src.mdp_core import StationaryPolicy
from src.reachability import reach_prob
from src.simulate import horizon_for_tolerance, simulate, trajectory_frame


def test_horizon_for_tolerance():
    # 0.5^h * 1 / 0.5 <= 1e-6  ->  h = 21
    assert horizon_for_tolerance(loop_exit(), 1e-6) == 21


def test_loop_exit_half_policy_within_three_sigma():
    mdp = loop_exit()
    pol = loop_exit_policy(mdp, 0.5)
    result = simulate(mdp, pol, episodes=100_000, seed=7)
    assert result.cost == pytest.approx(2.0 / 3.0, abs=3 * result.cost_se + result.tail_bound + 1e-9)
    assert result.within(reach_prob(mdp, pol), evaluate_cost(mdp, pol))


def test_two_path_is_deterministic():
    mdp = two_path()
    pol = StationaryPolicy.deterministic(mdp, [1, 2, 2])
    result = simulate(mdp, pol, episodes=2_000, seed=1)
    assert result.reach == 1.0
    assert result.cost == pytest.approx(1.5)


def test_same_seed_same_estimate_across_workers():
    mdp = loop_exit()
    pol = loop_exit_policy(mdp, 0.3)
    serial = simulate(mdp, pol, episodes=25_000, seed=3, n_jobs=1)
    parallel = simulate(mdp, pol, episodes=25_000, seed=3, n_jobs=2)
    assert serial == parallel


def test_trajectory_frame_columns():
    mdp = loop_exit()
    frame = trajectory_frame(mdp, loop_exit_policy(mdp, 0.5), episodes=3, horizon=5)
    assert list(frame.columns) == ["episode", "step", "state", "action", "cost"]
    assert set(frame["episode"]) <= {0, 1, 2}
