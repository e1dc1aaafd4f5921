"""
tests/test_deterministic_approx.py

Tests for the modified-cost approximation: the surrogate and selection
LPs, policy extraction, the surrogate value, the certificate bounds and
the discounted-reachability baseline.
"""

import itertools

import numpy as np
import pytest

from src.deterministic_approx import (
    extract_policy,
    modified_costs,
    solve_selection_lp,
    solve_surrogate_lp,
    suboptimality_certificate,
    surrogate_value,
    synth_approx,
    synth_discounted_baseline,
)
from src.deterministic_exact import solve_exact
from src.errors import CostAssumptionError
from src.instances import loop_exit, random_mdp, two_path
from src.mdp_core import StationaryPolicy, make_mdp, partition_states
from src.oracle import brute_force_oracle
from src.reachability import max_reach


def costly_target():
    return make_mdp(
        states=["s1", "g"],
        transitions={("s1", "go"): {"g": 1.0}, ("g", "go"): {"g": 1.0}},
        initial="s1",
        targets=["g"],
        discount=0.5,
        costs={("s1", "go"): 1.0, ("g", "go"): 3.0},
    )


def test_modified_costs_two_path():
    mdp = two_path()
    ctilde = modified_costs(mdp, partition_states(mdp))
    assert ctilde[mdp.state_id("m"), mdp.action_id("c")] == pytest.approx(0.5)
    assert ctilde[0, mdp.action_id("a")] == pytest.approx(2.0)


def test_surrogate_lp_two_path():
    mdp = two_path()
    ctilde = modified_costs(mdp, partition_states(mdp))
    v_star, _ = solve_surrogate_lp(mdp, max_reach(mdp), ctilde)
    assert v_star == pytest.approx(1.5)


def test_loop_exit_lps_and_extraction():
    mdp = loop_exit()
    ra = max_reach(mdp)
    ctilde = modified_costs(mdp, ra.partition)
    v_star, _ = solve_surrogate_lp(mdp, ra, ctilde)
    lam = solve_selection_lp(mdp, ra, ctilde, v_star)
    assert v_star == pytest.approx(1.0)
    assert lam[0, 1] == pytest.approx(1.0)
    assert extract_policy(mdp, ra, lam).action(0) == 1


def test_single_action_selection_is_visit_count():
    mdp = make_mdp(
        states=["s1", "s2", "g"],
        transitions={
            ("s1", "go"): {"s2": 1.0},
            ("s2", "go"): {"s2": 0.5, "g": 0.5},
            ("g", "go"): {"g": 1.0},
        },
        initial="s1",
        targets=["g"],
        discount=0.5,
        costs={("s1", "go"): 1.0, ("s2", "go"): 1.0},
    )
    ra = max_reach(mdp)
    ctilde = modified_costs(mdp, ra.partition)
    v_star, _ = solve_surrogate_lp(mdp, ra, ctilde)
    lam = solve_selection_lp(mdp, ra, ctilde, v_star)
    assert lam[:2, 0].tolist() == pytest.approx([1.0, 2.0])


def test_surrogate_value_two_path():
    mdp = two_path()
    pol = StationaryPolicy.deterministic(mdp, [1, 2, 2])
    assert surrogate_value(mdp, pol) == pytest.approx(1.5)


def test_surrogate_value_diverges_on_costly_loop():
    mdp = loop_exit(cost_a1=0.1)
    pol = StationaryPolicy.deterministic(mdp, [0, 0])
    assert np.isinf(surrogate_value(mdp, pol))


def test_loop_exit_certificate():
    mdp = loop_exit()
    ra = max_reach(mdp)
    cert = suboptimality_certificate(mdp, ra, modified_costs(mdp, ra.partition))
    assert cert.m_under == pytest.approx(1.0)
    assert cert.cmin == 0.0
    assert cert.lower_bound == 0.0
    assert cert.m_upper_certified


def test_two_path_approx():
    mdp = two_path()
    report = synth_approx(mdp)
    assert report.policy.choices()[:2] == [mdp.action_id("b"), mdp.action_id("c")]
    assert report.cost == pytest.approx(1.5)
    assert report.surrogate == pytest.approx(1.5)
    assert report.bounds["v_star"] == pytest.approx(1.5)


def test_loop_exit_approx():
    report = synth_approx(loop_exit())
    assert report.policy.action(0) == 1
    assert report.cost == pytest.approx(1.0)


def test_cost_assumption_enforced():
    with pytest.raises(CostAssumptionError):
        synth_approx(costly_target())


def test_zero_out_repairs_costs():
    report = synth_approx(costly_target(), zero_out=True)
    assert report.cost == pytest.approx(1.0)


def test_undiscounted_variant_label():
    report = synth_approx(two_path(), undiscounted=True)
    assert report.method == "approx-undiscounted"
    assert report.is_feasible


@pytest.mark.parametrize("seed", range(12))
def test_random_instances(seed):
    mdp = random_mdp(np.random.default_rng(seed), max_states=6)
    report = synth_approx(mdp)
    oracle = brute_force_oracle(mdp)

    assert report.policy.is_deterministic
    assert report.reach == pytest.approx(report.max_reach, abs=1e-6)
    assert report.cost >= oracle.cost - 1e-6
    # discounting can only shrink the cost relative to the surrogate
    assert report.cost <= report.surrogate + 1e-9
    assert report.surrogate == pytest.approx(report.bounds["v_star"], abs=1e-6)
    assert report.bounds["lower_bound"] <= oracle.cost + 1e-6


@pytest.mark.parametrize("seed", range(50))
def test_gap_to_exact_on_deterministic_transitions(seed):
    mdp = random_mdp(np.random.default_rng(seed), max_states=6, max_actions=3, deterministic=True)
    approx = synth_approx(mdp)
    exact = solve_exact(mdp)
    assert approx.cost >= exact.cost - 1e-6
    # |S| * max c~ over Sr pairs
    assert approx.cost - exact.cost <= approx.bounds["linear_gap_bound"] + 1e-6


@pytest.mark.parametrize("deterministic", [True, False])
@pytest.mark.parametrize("seed", range(50))
def test_sandwich_holds_for_every_feasible_policy(seed, deterministic):
    mdp = random_mdp(np.random.default_rng(seed), max_states=6, max_actions=3, deterministic=deterministic)
    report = synth_approx(mdp)
    lower = report.bounds["lower_bound"]
    table = brute_force_oracle(mdp).table
    choices = itertools.product(*[mdp.actions(s) for s in range(mdp.n_states)])
    checked = 0
    for choice, row in zip(choices, table.itertuples()):
        if not row.feasible:
            continue
        pol = StationaryPolicy.deterministic(mdp, choice)
        assert lower - 1e-6 <= row.J <= surrogate_value(mdp, pol) + 1e-6
        checked += 1
    assert checked >= 1


def test_discounted_baseline_two_path():
    mdp = two_path()
    report = synth_discounted_baseline(mdp)
    assert report.method == "discounted-baseline"
    # the direct route collects the discounted reward a step earlier
    assert report.policy.action(0) == mdp.action_id("a")
    assert report.cost == pytest.approx(2.0)
    assert report.reach == pytest.approx(1.0)
