"""
discount_core.py

Unconstrained discounted-cost optimization and exact policy evaluation.

This module performs:
- Optimal value vector y by value iteration (default) or LP
- Cost-optimal action sets A_opt and the greedy policy pi-tilde
- Exact cost-to-go J(pi) through a direct linear solve
- The modified MDP (actions reduced to A_opt)

Used in: epsilon_synthesis.py, existence.py, deterministic_exact.py,
deterministic_approx.py, oracle.py, report.py
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from src.config import AMAX_TOL, VI_TOL
from src.errors import NumericalError
from src.linear_solver import LE, LinearProgram, solve_lp
from src.logger import get_logger
from src.mdp_core import Mdp, StationaryPolicy, induced_chain


logger = get_logger(__name__)

VI_MAX_SWEEPS = 1_000_000


@dataclass(frozen=True, eq=False)
class DiscountAnalysis:
    """
    Attributes:
        y (np.ndarray): Minimum total discounted cost from each state
        aopt (np.ndarray): (n, m) bool, actions attaining the minimum
        pitilde (StationaryPolicy): Deterministic, lowest-index action of A_opt
    """

    y: np.ndarray
    aopt: np.ndarray
    pitilde: StationaryPolicy


def q_values(mdp: Mdp, y: np.ndarray) -> np.ndarray:
    """c(s, a) + beta sum_s' P[s, a, s'] y[s'], +inf on disabled pairs."""
    q = mdp.cost + mdp.discount * np.einsum("sat,t->sa", mdp.trans, y)
    return np.where(mdp.enabled, q, np.inf)


def _value_iteration(mdp: Mdp, tol: float) -> np.ndarray:
    beta = mdp.discount
    threshold = (1.0 - beta) * tol / (2.0 * beta)
    y = np.zeros(mdp.n_states)
    for sweep in range(1, VI_MAX_SWEEPS + 1):
        y_next = q_values(mdp, y).min(axis=1)
        if np.max(np.abs(y_next - y), initial=0.0) <= threshold:
            logger.debug(f"Value iteration converged after {sweep} sweeps")
            return y_next
        y = y_next
    raise NumericalError(f"value iteration did not converge in {VI_MAX_SWEEPS} sweeps")


def _value_lp(mdp: Mdp) -> np.ndarray:
    lp = LinearProgram(sense="max", name="discounted_values")
    col = [lp.add_variable(f"y_{name}", cost=1.0) for name in mdp.state_names]
    for s in range(mdp.n_states):
        for a in mdp.actions(s):
            coeffs = {col[s]: 1.0}
            for t in np.flatnonzero(mdp.trans[s, a]):
                coeffs[col[t]] = coeffs.get(col[t], 0.0) - mdp.discount * mdp.trans[s, a, t]
            lp.add_constraint(coeffs, LE, float(mdp.cost[s, a]),
                              name=f"bellman_{mdp.state_names[s]}_{mdp.action_names[a]}")
    sol = solve_lp(lp)
    if not sol.is_optimal:
        raise NumericalError(f"discounted value LP ended with status {sol.status}")
    return np.array(sol.x)


def optimal_values(mdp: Mdp, backend: str = "vi") -> DiscountAnalysis:
    """
    Minimum discounted cost vector, A_opt and the greedy policy pi-tilde.

    Parameters:
        mdp (Mdp): A valid MDP, typically the cleaned-up one
        backend (str): "vi" for value iteration or "lp"

    Returns:
        DiscountAnalysis: y, A_opt (ties kept) and pi-tilde
    """
    if backend == "vi":
        y = _value_iteration(mdp, VI_TOL)
    elif backend == "lp":
        y = _value_lp(mdp)
    else:
        raise ValueError(f"unknown backend '{backend}'")

    q = q_values(mdp, y)
    best = q.min(axis=1)
    aopt = mdp.enabled & (q - best[:, None] <= AMAX_TOL)
    pitilde = StationaryPolicy.deterministic(mdp, np.argmax(aopt, axis=1))

    y = best
    y.setflags(write=False)
    aopt.setflags(write=False)
    logger.debug(f"Optimal discounted cost from {mdp.state_names[mdp.initial]}: {y[mdp.initial]:.10g}")
    return DiscountAnalysis(y=y, aopt=aopt, pitilde=pitilde)


def cost_to_go(mdp: Mdp, pol: StationaryPolicy) -> np.ndarray:
    """Per-state J vector (I - beta P^pi)^-1 c^pi."""
    chain = induced_chain(mdp, pol)
    lhs = np.eye(mdp.n_states) - mdp.discount * chain.p
    try:
        return scipy.linalg.solve(lhs, chain.costvec)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"policy evaluation failed: {e}") from e


def evaluate_cost(mdp: Mdp, pol: StationaryPolicy) -> float:
    """J(pi) = alpha^T (I - beta P^pi)^-1 c^pi."""
    return float(cost_to_go(mdp, pol)[mdp.initial])


def modified_mdp(mdp_prime: Mdp, da: DiscountAnalysis) -> Mdp:
    """M-bar': every action set reduced to A_opt."""
    return mdp_prime.restrict(da.aopt)
