"""
tests/test_epsilon_synthesis.py

Tests for the perturbed greedy policy, the cost-increase certificate and
the eps-optimal synthesis pipeline.
"""

import numpy as np
import pytest

from src.discount_core import evaluate_cost, optimal_values
from src.epsilon_synthesis import (
    perturb_policy,
    perturbation_bound,
    perturbation_certificate,
    synth_eps_optimal,
)
from src.errors import MdpValidationError
from src.instances import loop_exit, random_mdp, two_path
from src.oracle import brute_force_oracle
from src.reachability import cleanup, max_reach


def test_perturb_policy_loop_exit():
    mdp = loop_exit()
    da = optimal_values(mdp)
    pol = perturb_policy(mdp, da, 0.1)
    assert pol.prob[0].tolist() == pytest.approx([0.9, 0.1])
    assert pol.prob[1].tolist() == pytest.approx([1.0, 0.0])


def test_perturbation_bound_loop_exit():
    mdp = loop_exit()
    assert perturbation_bound(mdp, optimal_values(mdp)) == pytest.approx(1.0)


def test_perturb_policy_rejects_large_eps():
    mdp = loop_exit()
    with pytest.raises(ValueError):
        perturb_policy(mdp, optimal_values(mdp), 2.0)


def test_certificate_matches_closed_form():
    mdp = loop_exit()
    cert = perturbation_certificate(mdp, optimal_values(mdp), 0.1)
    assert evaluate_cost(mdp, cert.policy) == pytest.approx(2.0 / 11.0)
    assert cert.gamma == pytest.approx(20.0 / 11.0)
    assert cert.identity_residual < 1e-9


def test_cost_grows_with_eps_prime():
    mdp = loop_exit()
    da = optimal_values(mdp)
    costs = [evaluate_cost(mdp, perturb_policy(mdp, da, e)) for e in (0.05, 0.1, 0.2, 0.5, 1.0)]
    assert costs == sorted(costs)


@pytest.mark.parametrize("eps", [0.1, 0.01, 0.001])
def test_loop_exit_eps_optimal(eps):
    report = synth_eps_optimal(loop_exit(), eps)
    assert report.reach == pytest.approx(1.0, abs=1e-6)
    assert report.cost <= eps + 1e-9
    assert 0.0 < report.policy.prob[0, 1] <= 1.0
    assert not report.policy.is_deterministic
    assert report.infimum == pytest.approx(0.0)


def test_loop_exit_costly_loop_fast_path():
    report = synth_eps_optimal(loop_exit(discount=0.95, cost_a1=0.1), 0.01)
    assert report.policy.is_deterministic
    assert report.policy.action(0) == 1
    assert report.cost == pytest.approx(1.0)
    assert report.bounds["eps_prime"] == 0.0


def test_large_eps_accepts_first_candidate():
    report = synth_eps_optimal(loop_exit(), 10.0)
    assert report.reach == pytest.approx(1.0)
    assert report.cost <= 10.0
    assert report.solver_stats["eps_prime_candidates"] == 1


def test_two_path_greedy_is_feasible():
    report = synth_eps_optimal(two_path(), 0.01)
    assert report.cost == pytest.approx(1.5)
    assert report.is_feasible


def test_lp_backend():
    report = synth_eps_optimal(loop_exit(), 0.01, backend="lp")
    assert report.cost <= 0.01 + 1e-9


def test_non_positive_eps_rejected():
    with pytest.raises(ValueError):
        synth_eps_optimal(loop_exit(), 0.0)


def test_invalid_mdp_rejected():
    with pytest.raises(MdpValidationError):
        synth_eps_optimal(loop_exit().with_discount(1.5), 0.01)


@pytest.mark.parametrize("eps", [0.05, 0.001])
@pytest.mark.parametrize("seed", range(200))
def test_random_instances_are_eps_optimal(seed, eps):
    mdp = random_mdp(np.random.default_rng(seed), max_states=8)
    ra = max_reach(mdp)
    infimum = optimal_values(cleanup(mdp, ra)).y[mdp.initial]
    report = synth_eps_optimal(mdp, eps)
    assert report.reach == pytest.approx(ra.x_initial(mdp), abs=1e-6)
    assert report.cost <= infimum + eps + 1e-6


@pytest.mark.parametrize("seed", range(12))
def test_random_instances_beat_enumeration(seed):
    mdp = random_mdp(np.random.default_rng(seed), max_states=5)
    eps = 0.05
    report = synth_eps_optimal(mdp, eps)
    # no deterministic feasible policy beats the infimum by more than eps
    assert report.cost <= brute_force_oracle(mdp).cost + eps + 1e-6
