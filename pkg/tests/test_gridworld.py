"""
tests/test_gridworld.py

Tests for the grid-world generator, the shipped layout and the
trajectory comparison between the approximate syntheses and the
discounted-reachability baseline.
"""

import json

import numpy as np
import pytest

from src.config import DEFAULT_LAYOUT_FILE
from src.deterministic_approx import surrogate_value, synth_approx, synth_discounted_baseline
from src.discount_core import evaluate_cost
from src.errors import DocumentError
from src.gridworld import GridSpec, generate_grid, load_layout, most_likely_path, risk_visits
from src.mdp_core import StationaryPolicy, validate
from src.reachability import max_reach


@pytest.fixture(scope="module")
def grid10():
    spec = load_layout(DEFAULT_LAYOUT_FILE)
    return spec, generate_grid(spec)


@pytest.fixture(scope="module")
def grid10_reports(grid10):
    _, mdp = grid10
    return {
        "approx": synth_approx(mdp),
        "undiscounted": synth_approx(mdp, undiscounted=True),
        "baseline": synth_discounted_baseline(mdp),
    }


def test_one_by_two_grid():
    mdp = generate_grid(GridSpec(width=2, height=1, initial=(0, 0), target=(0, 1)))
    assert mdp.n_states == 2
    assert validate(mdp) == []
    target = mdp.state_id("r0c1")
    assert len(mdp.actions(target)) == 5
    assert mdp.trans[target, :, target].tolist() == [1.0] * 5
    assert not mdp.cost[target].any()


def test_three_by_three_with_obstacle():
    mdp = generate_grid(GridSpec(width=3, height=3, obstacles=[(1, 1)], initial=(0, 0), target=(2, 2)))
    assert mdp.n_states == 8
    assert max_reach(mdp).x.tolist() == pytest.approx([1.0] * 8)


def test_blocked_move_stays_in_place():
    mdp = generate_grid(GridSpec(width=2, height=1, initial=(0, 0), target=(0, 1), success_prob=0.9))
    s = mdp.state_id("r0c0")
    assert mdp.trans[s, mdp.action_id("left"), s] == pytest.approx(1.0)
    assert mdp.trans[s, mdp.action_id("right"), s] == pytest.approx(0.1)
    assert mdp.cost[s, mdp.action_id("stay")] == pytest.approx(1.0)


def test_spec_rejects_target_on_obstacle():
    with pytest.raises(ValueError):
        GridSpec(width=2, height=2, obstacles=[(1, 1)], initial=(0, 0), target=(1, 1))


def test_layout_requires_single_start(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"rows": ["S.S", "..G"]}), encoding="utf-8")
    with pytest.raises(DocumentError):
        load_layout(path)


def test_shipped_layout(grid10):
    spec, mdp = grid10
    assert (spec.width, spec.height) == (10, 10)
    assert mdp.n_states == 100 - len(spec.obstacles)
    assert max_reach(mdp).x_initial(mdp) == pytest.approx(1.0)


def test_most_likely_path_ends_at_target(grid10, grid10_reports):
    _, mdp = grid10
    path = most_likely_path(mdp, grid10_reports["approx"].policy)
    assert path[0] == mdp.initial
    assert path[-1] in mdp.targets


def test_risk_visits_ignores_target(grid10):
    spec, mdp = grid10
    target = next(iter(mdp.targets))
    assert risk_visits(spec, mdp, [target]) == {"high": 0, "moderate": 0, "low": 0}


def test_all_methods_reach_surely(grid10_reports):
    for report in grid10_reports.values():
        assert report.reach == pytest.approx(1.0, abs=1e-6)
        assert report.policy.is_deterministic


def test_approx_cost_below_surrogate(grid10_reports):
    report = grid10_reports["approx"]
    assert report.cost <= report.surrogate + 1e-9
    assert report.bounds["lower_bound"] <= report.cost + 1e-9


def test_modified_cost_surrogate_is_minimal(grid10, grid10_reports):
    _, mdp = grid10
    approx = grid10_reports["approx"]
    undiscounted = grid10_reports["undiscounted"]
    # both policies scored under the modified cost; the approx one is the LP minimizer
    assert approx.surrogate <= surrogate_value(mdp, undiscounted.policy) + 1e-6


def test_undiscounted_variant_minimizes_total_cost(grid10, grid10_reports):
    _, mdp = grid10
    raw = mdp.cost.copy()
    total = {name: surrogate_value(mdp, r.policy, raw) for name, r in grid10_reports.items()}
    assert total["undiscounted"] <= total["approx"] + 1e-6


def test_baseline_policy_is_evaluated_exactly(grid10, grid10_reports):
    _, mdp = grid10
    report = grid10_reports["baseline"]
    assert report.cost == pytest.approx(evaluate_cost(mdp, StationaryPolicy(report.policy.prob)))


def _visits(grid10, report):
    spec, mdp = grid10
    return risk_visits(spec, mdp, most_likely_path(mdp, report.policy))


def test_shipped_layout_has_three_routes(grid10):
    spec, mdp = grid10
    assert mdp.n_states == 73
    assert len(spec.high) == 8
    assert sorted(spec.moderate) == [(0, 3), (0, 4)]


def test_approx_avoids_early_moderate_cells(grid10, grid10_reports):
    _, mdp = grid10
    approx, undiscounted = grid10_reports["approx"], grid10_reports["undiscounted"]
    assert approx.reach == pytest.approx(1.0, abs=1e-6)

    raw = np.where(mdp.enabled, mdp.cost, 0.0)
    assert surrogate_value(mdp, approx.policy, raw) == pytest.approx(
        surrogate_value(mdp, undiscounted.policy, raw), abs=1e-6)

    approx_visits = _visits(grid10, approx)
    undiscounted_visits = _visits(grid10, undiscounted)
    assert approx_visits["moderate"] < undiscounted_visits["moderate"]
    assert approx_visits == {"high": 0, "moderate": 0, "low": 29}
    assert undiscounted_visits == {"high": 0, "moderate": 2, "low": 25}


def test_baseline_takes_short_high_risk_route(grid10, grid10_reports):
    baseline_visits = _visits(grid10, grid10_reports["baseline"])
    approx_visits = _visits(grid10, grid10_reports["approx"])
    assert baseline_visits["high"] >= approx_visits["high"] + 1
    assert baseline_visits == {"high": 8, "moderate": 0, "low": 1}
