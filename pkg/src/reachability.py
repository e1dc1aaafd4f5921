"""
reachability.py

Maximum probability of reaching the target set, the maximizing action
sets A_max, the cleaned-up MDP, and exact reach probabilities of a given
stationary policy.

This module performs:
- The least-fixed-point LP for the max-reach vector x (S0 pinned to 0)
- A_max extraction by the fixed-point equality test
- Action pruning to A_max at every Sr state (cleanup)
- Absorbing-chain solves for the reach probabilities of a policy

Used in: discount_core.py, epsilon_synthesis.py, existence.py,
deterministic_exact.py, deterministic_approx.py, oracle.py, synth.py
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from src.config import AMAX_TOL
from src.errors import NumericalError
from src.linear_solver import GE, LinearProgram, solve_lp
from src.logger import get_logger
from src.mdp_core import Mdp, StatePartition, StationaryPolicy, can_reach, chain_graph, induced_chain, partition_states


logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class ReachAnalysis:
    """
    Attributes:
        x (np.ndarray): Max probability of reaching B from each state
        amax (np.ndarray): (n, m) bool; A_max(s) on Sr, A(s) on B and S0
        partition (StatePartition): B / S0 / Sr split and tmin
    """

    x: np.ndarray
    amax: np.ndarray
    partition: StatePartition

    def x_initial(self, mdp: Mdp) -> float:
        return float(self.x[mdp.initial])


def one_step_reach(mdp: Mdp, x: np.ndarray) -> np.ndarray:
    """(n, m) table of sum_s' P[s, a, s'] x[s']."""
    return np.einsum("sat,t->sa", mdp.trans, x)


def max_reach(mdp: Mdp) -> ReachAnalysis:
    """
    Solves min sum x_s s.t. x_s >= sum_s' P[s, a, s'] x_s' on Sr, with x
    fixed to 1 on B and 0 on S0.

    Parameters:
        mdp (Mdp): A valid MDP

    Returns:
        ReachAnalysis: x, A_max and the state partition

    Raises:
        NumericalError: If the LP does not return an optimal solution
    """
    part = partition_states(mdp)
    rest = sorted(part.rest)
    target_mask = mdp.target_mask

    x = np.zeros(mdp.n_states)
    x[target_mask] = 1.0

    if rest:
        lp = LinearProgram(sense="min", name="max_reach")
        col = {s: lp.add_variable(f"x_{mdp.state_names[s]}", cost=1.0) for s in rest}
        for s in rest:
            for a in mdp.actions(s):
                row = mdp.trans[s, a]
                coeffs = {col[s]: 1.0}
                for t in rest:
                    if row[t] > 0:
                        coeffs[col[t]] = coeffs.get(col[t], 0.0) - row[t]
                rhs = float(row[target_mask].sum())
                lp.add_constraint(coeffs, GE, rhs, name=f"fix_{mdp.state_names[s]}_{mdp.action_names[a]}")

        sol = solve_lp(lp)
        if not sol.is_optimal:
            raise NumericalError(f"max-reach LP ended with status {sol.status}")
        for s in rest:
            x[s] = sol.x[col[s]]
    x = np.clip(x, 0.0, 1.0)

    # A_max: actions attaining the fixed point on Sr; untouched elsewhere
    amax = mdp.enabled.copy()
    if rest:
        gap = x[:, None] - one_step_reach(mdp, x)
        rest_mask = part.rest_mask(mdp.n_states)
        amax[rest_mask] &= gap[rest_mask] <= AMAX_TOL
        empty = [mdp.state_names[s] for s in rest if not amax[s].any()]
        if empty:
            raise NumericalError(f"A_max is empty at {empty}")

    x.setflags(write=False)
    amax.setflags(write=False)
    logger.debug(f"Max reach from {mdp.state_names[mdp.initial]}: {x[mdp.initial]:.10g}")
    return ReachAnalysis(x=x, amax=amax, partition=part)


def cleanup(mdp: Mdp, ra: ReachAnalysis) -> Mdp:
    """Returns M' with the action sets of Sr states reduced to A_max."""
    empty = [mdp.state_names[s] for s in ra.partition.rest if not (ra.amax[s] & mdp.enabled[s]).any()]
    if empty:
        raise NumericalError(f"cleanup would leave no action at {empty}")
    removed = int(mdp.enabled.sum() - (mdp.enabled & ra.amax).sum())
    logger.debug(f"Cleanup removed {removed} state-action pairs")
    return mdp.restrict(ra.amax)


def reach_vector(mdp: Mdp, pol: StationaryPolicy) -> np.ndarray:
    """
    Per-state probability of eventually reaching B under pol.

    States that cannot reach B in the induced chain are pinned to 0, the
    rest solve (I - P_TT) h = P_TB 1.
    """
    chain = induced_chain(mdp, pol)
    graph = chain_graph(chain.p)
    alive = can_reach(graph, mdp.targets)
    transient = np.array(sorted(alive - set(mdp.targets)), dtype=int)

    h = mdp.target_mask.astype(float)
    if transient.size:
        targets = np.array(sorted(mdp.targets), dtype=int)
        lhs = np.eye(transient.size) - chain.p[np.ix_(transient, transient)]
        rhs = chain.p[np.ix_(transient, targets)].sum(axis=1)
        try:
            h[transient] = scipy.linalg.solve(lhs, rhs)
        except (scipy.linalg.LinAlgError, ValueError) as e:
            raise NumericalError(f"reach probability system is singular: {e}") from e
    return np.clip(h, 0.0, 1.0)


def reach_prob(mdp: Mdp, pol: StationaryPolicy) -> float:
    """Exact Pr(Reach[B]) from the initial state under pol."""
    return float(reach_vector(mdp, pol)[mdp.initial])
