"""
tests/test_deterministic_exact.py

Tests for the occupation-measure MILP: model shape on the small
instances, exact optima, and agreement with brute-force enumeration on
random MDPs.
"""

import numpy as np
import pytest

from src.deterministic_exact import big_m, build_milp, occupation_measures, solve_exact
from src.instances import loop_exit, random_mdp, two_path
from src.linear_solver import solve_milp
from src.mdp_core import make_mdp
from src.oracle import brute_force_oracle
from src.reachability import max_reach


def test_big_m_deterministic_transitions():
    choice = big_m(two_path())
    assert choice.value == 3.0
    assert choice.certified


def test_big_m_stochastic_uses_factor():
    mdp = make_mdp(
        states=["s1", "g"],
        transitions={("s1", "go"): {"s1": 0.5, "g": 0.5}, ("g", "go"): {"g": 1.0}},
        initial="s1",
        targets=["g"],
        discount=0.9,
    )
    choice = big_m(mdp, k=100)
    assert choice.value == 200.0
    assert not choice.certified


def test_loop_exit_model_shape():
    mdp = loop_exit()
    model = build_milp(mdp, max_reach(mdp), 3.0)
    assert len(model.delta) == 3
    assert model.reward[0].tolist() == [0.0, 1.0]
    assert model.x_initial == pytest.approx(1.0)


def test_two_path_milp_selects_b_then_c():
    mdp = two_path()
    model = build_milp(mdp, max_reach(mdp), 3.0)
    result = solve_milp(model.mip)
    assert result.status == "optimal"
    assert result.objective == pytest.approx(1.5)
    assert result.x[model.delta[0, mdp.action_id("b")]] == pytest.approx(1.0)
    assert result.x[model.delta[1, mdp.action_id("c")]] == pytest.approx(1.0)


def test_loop_exit_exact():
    report = solve_exact(loop_exit())
    assert report.policy.action(0) == 1
    assert report.cost == pytest.approx(1.0)
    assert report.reach == pytest.approx(1.0)
    assert report.infimum == pytest.approx(0.0)
    assert report.solver_stats["status"] == "optimal"


def test_loop_exit_exact_with_explicit_big_m():
    report = solve_exact(loop_exit(), big_m_value=3.0)
    assert report.cost == pytest.approx(1.0)
    assert report.bounds["big_m"] == 3.0


def test_two_path_exact():
    mdp = two_path()
    report = solve_exact(mdp)
    assert report.policy.choices()[:2] == [mdp.action_id("b"), mdp.action_id("c")]
    assert report.cost == pytest.approx(1.5)
    assert report.bounds["big_m_certified"] is True


def test_dump_path_writes_lp(tmp_path):
    target = tmp_path / "two_path.lp"
    solve_exact(two_path(), dump_path=target)
    text = target.read_text(encoding="utf-8")
    assert "Binaries" in text
    assert "reach:" in text


def test_occupation_measures_of_two_path():
    mdp = two_path()
    report = solve_exact(mdp)
    lam1, lam2 = occupation_measures(mdp, report.policy, max_reach(mdp).partition.rest)
    # J is the cost-weighted discounted occupation
    assert float((lam1 * mdp.cost).sum()) == pytest.approx(1.5)
    assert lam2[0, mdp.action_id("b")] == pytest.approx(1.0)
    assert lam2[1, mdp.action_id("c")] == pytest.approx(1.0)


@pytest.mark.parametrize("deterministic", [True, False])
@pytest.mark.parametrize("seed", range(50))
def test_matches_enumeration(seed, deterministic):
    mdp = random_mdp(np.random.default_rng(seed), max_states=6, max_actions=3, deterministic=deterministic)
    oracle = brute_force_oracle(mdp)
    report = solve_exact(mdp)
    assert report.bounds["big_m"] == pytest.approx(big_m(mdp).value)
    assert report.solver_stats["status"] == "optimal"
    assert report.is_feasible
    assert report.reach == pytest.approx(oracle.max_reach, abs=1e-6)
    assert report.cost == pytest.approx(oracle.cost, abs=1e-5)
