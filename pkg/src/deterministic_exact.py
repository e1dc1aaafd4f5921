"""
deterministic_exact.py

Exact synthesis of an optimal stationary deterministic policy through a
mixed-integer program over occupation measures.

This module performs:
- Big-M selection (|S| for deterministic transitions, k|S| otherwise)
- MILP construction: discounted balance rows over all states, undiscounted
  balance rows over Sr, the reach-as-reward equality, big-M linking of
  both occupation families to per-pair binaries, one action per state
- Branch-and-bound solve and policy extraction from the binaries
- Occupation measures of a given policy, for checking extracted policies

Used in: synth.py, routers/synthesize.py, oracle tests
"""

import time
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.linalg

from src.config import DEFAULT_BIG_M_FACTOR, MILP_GAP_TOL, MILP_TIME_LIMIT
from src.discount_core import optimal_values
from src.errors import MdpValidationError, NumericalError
from src.linear_solver import EQ, LE, LinearProgram, MixedIntegerProgram, dump_lp, solve_milp
from src.logger import get_logger
from src.mdp_core import Mdp, StationaryPolicy, induced_chain, validate
from src.reachability import ReachAnalysis, cleanup, max_reach
from src.report import SynthesisReport, finalize_report


logger = get_logger(__name__)


class BigMChoice(NamedTuple):
    value: float
    certified: bool
    note: str


@dataclass
class MilpModel:
    """
    Attributes:
        mip (MixedIntegerProgram): The program
        lambda1 (dict): (s, a) -> discounted occupation variable
        lambda2 (dict): (s, a) -> undiscounted occupation variable
        delta (dict): (s, a) -> binary action indicator
        big_m (float): Linking constant M
        reward (np.ndarray): (n, m) one-step probability of entering B from Sr
        x_initial (float): Target value of the reach row
    """

    mip: MixedIntegerProgram
    lambda1: dict
    lambda2: dict
    delta: dict
    big_m: float
    reward: np.ndarray
    x_initial: float


def big_m(mdp: Mdp, k: int = DEFAULT_BIG_M_FACTOR) -> BigMChoice:
    """|S| when every enabled transition is deterministic, k|S| otherwise."""
    n = mdp.n_states
    if mdp.has_deterministic_transitions():
        return BigMChoice(float(n), True, f"M = |S| = {n} bounds the steps of any deterministic path")
    if k < 1:
        raise ValueError(f"big-M factor k must be a positive integer, got {k}")
    return BigMChoice(
        float(k * n), False,
        f"M = k|S| = {k * n} is a heuristic; the MILP is exact only if M is at least the "
        f"largest expected number of steps to absorption of a feasible deterministic policy",
    )


def reach_reward(mdp: Mdp, ra: ReachAnalysis) -> np.ndarray:
    """r(s, a) = sum over B of P[s, a, .] for s in Sr, 0 elsewhere."""
    reward = mdp.trans[:, :, mdp.target_mask].sum(axis=2)
    keep = ra.partition.rest_mask(mdp.n_states)[:, None] & mdp.enabled
    return np.where(keep, reward, 0.0)


def build_milp(mdp: Mdp, ra: ReachAnalysis, big_m_value: float) -> MilpModel:
    """
    Builds the occupation-measure MILP.

    The reach row is only added when s1 is in Sr; from B or S0 every
    policy already attains x(s1).
    """
    n = mdp.n_states
    beta = mdp.discount
    rest = ra.partition.rest
    reward = reach_reward(mdp, ra)
    x1 = ra.x_initial(mdp)
    pairs = [(s, a) for s in range(n) for a in mdp.actions(s)]
    absorbed_m = max(big_m_value, 1.0 / (1.0 - beta))

    lp = LinearProgram(sense="min", name="deterministic_exact")
    lambda1, lambda2, delta = {}, {}, {}
    for s, a in pairs:
        tag = f"{mdp.state_names[s]}_{mdp.action_names[a]}"
        lambda1[s, a] = lp.add_variable(f"l1_{tag}", cost=float(mdp.cost[s, a]))
    for s, a in pairs:
        tag = f"{mdp.state_names[s]}_{mdp.action_names[a]}"
        upper = big_m_value if s in rest else 0.0
        lambda2[s, a] = lp.add_variable(f"l2_{tag}", upper=upper)
    for s, a in pairs:
        tag = f"{mdp.state_names[s]}_{mdp.action_names[a]}"
        delta[s, a] = lp.add_variable(f"d_{tag}", upper=1.0)

    alpha = np.zeros(n)
    alpha[mdp.initial] = 1.0

    # discounted balance over S
    inflow1 = {s: {} for s in range(n)}
    for (s, a), j in lambda1.items():
        for t in np.flatnonzero(mdp.trans[s, a]):
            inflow1[int(t)][j] = inflow1[int(t)].get(j, 0.0) - beta * mdp.trans[s, a, t]
    for s in range(n):
        coeffs = dict(inflow1[s])
        for a in mdp.actions(s):
            coeffs[lambda1[s, a]] = coeffs.get(lambda1[s, a], 0.0) + 1.0
        lp.add_constraint(coeffs, EQ, alpha[s], name=f"disc_{mdp.state_names[s]}")

    # undiscounted balance over Sr
    inflow2 = {s: {} for s in rest}
    for (s, a), j in lambda2.items():
        if s not in rest:
            continue
        for t in np.flatnonzero(mdp.trans[s, a]):
            if int(t) in rest:
                inflow2[int(t)][j] = inflow2[int(t)].get(j, 0.0) - mdp.trans[s, a, t]
    for s in sorted(rest):
        coeffs = dict(inflow2[s])
        for a in mdp.actions(s):
            coeffs[lambda2[s, a]] = coeffs.get(lambda2[s, a], 0.0) + 1.0
        lp.add_constraint(coeffs, EQ, alpha[s], name=f"undisc_{mdp.state_names[s]}")

    if mdp.initial in rest:
        coeffs = {lambda2[s, a]: reward[s, a] for s, a in pairs if s in rest and reward[s, a] > 0}
        lp.add_constraint(coeffs, EQ, x1, name="reach")

    # linking and one action per state
    for s, a in pairs:
        tag = f"{mdp.state_names[s]}_{mdp.action_names[a]}"
        m_s = big_m_value if s in rest else absorbed_m
        lp.add_constraint({lambda1[s, a]: 1.0, delta[s, a]: -m_s}, LE, 0.0, name=f"link1_{tag}")
        if s in rest:
            lp.add_constraint({lambda2[s, a]: 1.0, delta[s, a]: -big_m_value}, LE, 0.0, name=f"link2_{tag}")
    for s in range(n):
        lp.add_constraint({delta[s, a]: 1.0 for a in mdp.actions(s)}, LE, 1.0, name=f"one_{mdp.state_names[s]}")

    mip = MixedIntegerProgram(lp=lp, binaries=list(delta.values()))
    logger.debug(f"MILP: {lp.n_vars} variables ({len(delta)} binary), {lp.n_rows} rows, M = {big_m_value:g}")
    return MilpModel(mip=mip, lambda1=lambda1, lambda2=lambda2, delta=delta,
                     big_m=big_m_value, reward=reward, x_initial=x1)


def extract_deterministic(mdp: Mdp, model: MilpModel, x: np.ndarray) -> StationaryPolicy:
    """Action whose binary is set; lowest enabled index where none is."""
    choice = []
    for s in range(mdp.n_states):
        actions = mdp.actions(s)
        values = np.array([x[model.delta[s, a]] for a in actions])
        choice.append(actions[int(np.argmax(values))] if values.sum() >= 0.5 else actions[0])
    return StationaryPolicy.deterministic(mdp, choice)


def occupation_measures(mdp: Mdp, pol: StationaryPolicy, rest) -> tuple:
    """
    Occupation measures of a policy from s1.

    Returns:
        tuple: (discounted (n, m) table, undiscounted (n, m) table on Sr)
    """
    chain = induced_chain(mdp, pol)
    n = mdp.n_states
    visits1 = scipy.linalg.solve((np.eye(n) - mdp.discount * chain.p).T, chain.alpha)
    lam1 = visits1[:, None] * pol.prob

    lam2 = np.zeros_like(lam1)
    idx = np.array(sorted(rest), dtype=int)
    if idx.size:
        sub = chain.p[np.ix_(idx, idx)]
        visits2 = scipy.linalg.solve((np.eye(idx.size) - sub).T, chain.alpha[idx])
        lam2[idx] = visits2[:, None] * pol.prob[idx]
    return lam1, lam2


def solve_exact(mdp: Mdp, k: int = DEFAULT_BIG_M_FACTOR, time_limit: float = MILP_TIME_LIMIT,
                big_m_value: float = None, dump_path: Path = None) -> SynthesisReport:
    """
    Optimal stationary deterministic policy by branch-and-bound.

    Parameters:
        mdp (Mdp): A valid MDP
        k (int): Big-M factor for stochastic transitions
        time_limit (float): Branch-and-bound time limit in seconds
        big_m_value (float, optional): Overrides the big-M choice
        dump_path (Path, optional): Writes the MILP in LP format there

    Returns:
        SynthesisReport: Method "exact"; bounds carry M, MILP objective,
            bound and gap; solver_stats carry status and node count
    """
    try:
        started = time.perf_counter()
        logger.info("- Exact deterministic synthesis (MILP)")

        violations = validate(mdp)
        if violations:
            raise MdpValidationError(violations)

        ra = max_reach(mdp)
        x1 = ra.x_initial(mdp)
        choice = big_m(mdp, k)
        m_value = float(big_m_value) if big_m_value is not None else choice.value
        certified = choice.certified if big_m_value is None else m_value >= choice.value and choice.certified

        model = build_milp(mdp, ra, m_value)
        if dump_path is not None:
            Path(dump_path).write_text(dump_lp(model.mip), encoding="utf-8")
            logger.info(f"MILP written to {dump_path}")

        result = solve_milp(model.mip, time_limit=time_limit, gap_tol=MILP_GAP_TOL)
        if result.x is None:
            raise NumericalError(f"MILP ended with status {result.status} and no incumbent")

        diagnostics = []
        if result.status == "timeout":
            diagnostics.append(f"time limit reached: incumbent {result.objective:.9g}, bound {result.bound:.9g}")
        if not certified:
            diagnostics.append(choice.note)

        policy = extract_deterministic(mdp, model, result.x)
        infimum = float(optimal_values(cleanup(mdp, ra)).y[mdp.initial])
        return finalize_report(
            mdp, "exact", policy, max_reach=x1, infimum=infimum,
            bounds={
                "big_m": m_value,
                "big_m_certified": certified,
                "milp_objective": result.objective,
                "milp_bound": result.bound,
                "milp_gap": result.gap,
            },
            diagnostics=diagnostics,
            solver_stats={
                "status": result.status,
                "nodes": result.nodes,
                "lp_iterations": result.lp_iterations,
                "binaries": len(model.delta),
                "elapsed": result.elapsed,
            },
            started=started,
        )

    except Exception as e:
        logger.error(f"Exact synthesis failed: {e}", exc_info=True)
        raise
