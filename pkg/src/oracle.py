"""
oracle.py

Exhaustive enumeration of stationary deterministic policies, used to check
the exact and approximate synthesis on small MDPs.

Used in: synth.py (oracle), tests
"""

import itertools
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.config import AMAX_TOL, ORACLE_MAX_POLICIES
from src.discount_core import evaluate_cost
from src.errors import NumericalError, OracleSizeError
from src.logger import get_logger
from src.mdp_core import Mdp, StationaryPolicy
from src.reachability import max_reach, reach_prob


logger = get_logger(__name__)


@dataclass
class OracleResult:
    policy: StationaryPolicy
    cost: float
    max_reach: float
    table: pd.DataFrame


def policy_count(mdp: Mdp) -> int:
    return int(np.prod([len(mdp.actions(s)) for s in range(mdp.n_states)], dtype=object))


def brute_force_oracle(mdp: Mdp, limit: int = ORACLE_MAX_POLICIES) -> OracleResult:
    """
    Cheapest deterministic policy among those reaching with probability x(s1).

    Returns:
        OracleResult: Minimizer (first in enumeration order on ties), its J,
            x(s1) and the audit table with one row per policy

    Raises:
        OracleSizeError: When there are more than `limit` policies
    """
    count = policy_count(mdp)
    if count > limit:
        raise OracleSizeError(f"{count} deterministic policies exceed the limit of {limit}")

    x1 = max_reach(mdp).x_initial(mdp)
    logger.info(f"Enumerating {count} deterministic policies (x(s1) = {x1:.9g})")

    rows = []
    best, best_cost = None, np.inf
    for choice in itertools.product(*[mdp.actions(s) for s in range(mdp.n_states)]):
        pol = StationaryPolicy.deterministic(mdp, choice)
        reach = reach_prob(mdp, pol)
        cost = evaluate_cost(mdp, pol)
        feasible = abs(reach - x1) <= AMAX_TOL
        rows.append({
            "policy": ",".join(f"{mdp.state_names[s]}:{mdp.action_names[a]}" for s, a in enumerate(choice)),
            "reach": reach,
            "J": cost,
            "feasible": feasible,
        })
        if feasible and cost < best_cost:
            best, best_cost = pol, cost

    if best is None:
        raise NumericalError("no deterministic policy attains the maximum reach probability")
    return OracleResult(policy=best, cost=float(best_cost), max_reach=x1, table=pd.DataFrame(rows))
