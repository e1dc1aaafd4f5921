"""
report.py

Synthesis report record and the single function that assembles it.

Every report re-evaluates the reach probability and the discounted cost
of its policy exactly, so no number in a report is copied from solver
internals.

Used in: epsilon_synthesis.py, existence.py, deterministic_exact.py,
deterministic_approx.py, synth.py, routers/synthesize.py
"""

import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from src.config import REPORT_TOL
from src.discount_core import evaluate_cost
from src.logger import get_logger
from src.mdp_core import Mdp, StationaryPolicy
from src.reachability import reach_prob


logger = get_logger(__name__)


@dataclass
class SynthesisReport:
    """
    Attributes:
        method (str): "eps", "exact", "approx", "approx-undiscounted",
            "discounted-baseline" or "existence"
        policy (StationaryPolicy): The synthesized policy
        reach (float): Exact reach probability of the policy
        cost (float): Exact discounted cost J of the policy
        max_reach (float): x(s1)
        infimum (float | None): y(s1) when known
        surrogate (float | None): Surrogate value of the policy
        bounds (dict): Named certificate values
        diagnostics (list[str]): Human-readable remarks
        wall_time (float): Seconds spent in the pipeline
        solver_stats (dict): LP/MILP statistics
    """

    method: str
    policy: StationaryPolicy
    reach: float
    cost: float
    max_reach: float
    infimum: float = None
    surrogate: float = None
    bounds: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    wall_time: float = 0.0
    solver_stats: dict = field(default_factory=dict)

    @property
    def is_feasible(self) -> bool:
        return abs(self.reach - self.max_reach) <= REPORT_TOL


def finalize_report(mdp: Mdp, method: str, policy: StationaryPolicy, *, max_reach: float,
                    infimum: float = None, surrogate: float = None, bounds: dict = None,
                    diagnostics: list = None, solver_stats: dict = None,
                    started: float = None) -> SynthesisReport:
    """
    Builds a SynthesisReport, recomputing reach and J from the policy.

    Parameters:
        mdp (Mdp): The original MDP the policy is evaluated on
        method (str): Method tag
        policy (StationaryPolicy): Synthesized policy
        max_reach (float): x(s1) of the original MDP
        started (float, optional): time.perf_counter() at pipeline start

    Returns:
        SynthesisReport: The assembled report
    """
    diagnostics = list(diagnostics or [])
    reach = reach_prob(mdp, policy)
    cost = evaluate_cost(mdp, policy)

    if abs(reach - max_reach) > REPORT_TOL:
        message = f"policy reaches the targets with probability {reach:.9g}, maximum is {max_reach:.9g}"
        logger.warning(message)
        diagnostics.append(message)

    wall_time = time.perf_counter() - started if started is not None else 0.0
    logger.info(f"[{method}] reach={reach:.9g} J={cost:.9g} ({wall_time:.3f} s)")
    return SynthesisReport(
        method=method,
        policy=policy,
        reach=reach,
        cost=cost,
        max_reach=max_reach,
        infimum=infimum,
        surrogate=surrogate,
        bounds=dict(bounds or {}),
        diagnostics=diagnostics,
        wall_time=wall_time,
        solver_stats=dict(solver_stats or {}),
    )


def policy_frame(mdp: Mdp, policy: StationaryPolicy) -> pd.DataFrame:
    """Long table state, action, prob of the positive policy entries."""
    rows = [
        {"state": mdp.state_names[s], "action": mdp.action_names[a], "prob": float(policy.prob[s, a])}
        for s, a in zip(*np.nonzero(policy.prob > 0))
    ]
    return pd.DataFrame(rows, columns=["state", "action", "prob"])


def comparison_frame(reports: list) -> pd.DataFrame:
    """One row per report: method, reach, J, surrogate, infimum, feasibility and timing."""
    rows = []
    for r in reports:
        rows.append({
            "method": r.method,
            "reach": r.reach,
            "max_reach": r.max_reach,
            "J": r.cost,
            "J_surrogate": r.surrogate,
            "infimum": r.infimum,
            "feasible": r.is_feasible,
            "deterministic": r.policy.is_deterministic,
            "wall_time": r.wall_time,
        })
    return pd.DataFrame(rows)
