"""
deterministic_approx.py

LP-based approximation of the optimal stationary deterministic policy.

The discounted cost is replaced by a surrogate: the expected total
undiscounted cost under the modified cost c~(s, a) = beta^(tmin(s) - 1)
c(s, a), which upper bounds the discounted cost of every feasible policy.
Two LPs over undiscounted occupation measures on Sr find the surrogate
optimum and then the least-occupation solution attaining it; its support
gives a deterministic policy.

This module performs:
- The zero-cost check on B and S0 (with opt-in zeroing)
- Modified costs, surrogate LP, selection LP and policy extraction
- Surrogate evaluation of any stationary policy
- The suboptimality certificate (sandwich and gap bounds)
- The undiscounted variant and the discounted-reachability baseline

Used in: synth.py, routers/synthesize.py, experiments/run_gridworld.py
"""

import time
from dataclasses import asdict, dataclass

import networkx as nx
import numpy as np
import scipy.linalg

from src.config import DEFAULT_BIG_M_FACTOR, REPORT_TOL, SUPPORT_TOL
from src.discount_core import optimal_values
from src.errors import CostAssumptionError, MdpValidationError, NumericalError
from src.linear_solver import EQ, GE, LE, LinearProgram, solve_lp
from src.logger import get_logger
from src.mdp_core import Mdp, StatePartition, StationaryPolicy, can_reach, chain_graph, induced_chain, partition_states, validate
from src.reachability import ReachAnalysis, cleanup, max_reach
from src.report import SynthesisReport, finalize_report


logger = get_logger(__name__)

# Relative and absolute slack of the pinned row in the second LP of each pair;
# far below SUPPORT_TOL so a worse action cannot enter the support through it
SELECTION_SLACK = 1e-11


@dataclass(frozen=True)
class ApproxCertificate:
    """
    Attributes:
        cmin (float): Smallest cost over Sr pairs
        ctilde_max (float): Largest modified cost over Sr pairs
        m_under (float): Least expected number of Sr steps of a max-reach policy
        m_under_discounted (float): Least discounted expected number of Sr
            steps over the cleaned-up MDP
        m_upper (float): Step bound used for the gap (|S| or k|S|)
        m_upper_certified (bool): m_upper is a proven bound (deterministic transitions)
        lower_bound (float): m_under_discounted * cmin, below every feasible J
        gap_bound (float): m_upper * ctilde_max - m_under_discounted * cmin
        linear_gap_bound (float): |S| * ctilde_max
    """

    cmin: float
    ctilde_max: float
    m_under: float
    m_under_discounted: float
    m_upper: float
    m_upper_certified: bool
    lower_bound: float
    gap_bound: float
    linear_gap_bound: float

    def as_dict(self) -> dict:
        return asdict(self)


# ─────────────────────────────────────────────
# Costs
# ─────────────────────────────────────────────
def enforce_cost_assumption(mdp: Mdp, part: StatePartition, zero_out: bool = False) -> Mdp:
    """
    Checks that every pair of B and S0 costs 0.

    Parameters:
        zero_out (bool): Zero the offending costs instead of raising

    Raises:
        CostAssumptionError: On offending pairs when zero_out is False
    """
    outside = np.zeros(mdp.n_states, dtype=bool)
    outside[list(part.targets | part.zero)] = True
    offending = outside[:, None] & mdp.enabled & (mdp.cost != 0)
    if not offending.any():
        return mdp

    pairs = [(mdp.state_names[s], mdp.action_names[a]) for s, a in zip(*np.nonzero(offending))]
    if not zero_out:
        raise CostAssumptionError(pairs)
    logger.warning(f"Zeroing cost of {len(pairs)} pairs on targets and zero-reach states")
    return mdp.with_costs(np.where(offending, 0.0, mdp.cost))


def modified_costs(mdp: Mdp, part: StatePartition) -> np.ndarray:
    """c~(s, a) = beta^(tmin(s) - 1) c(s, a); 0 where s is unreachable from s1."""
    enforce_cost_assumption(mdp, part)
    tmin = part.tmin
    reachable = np.isfinite(tmin)
    unreachable_cost = ~reachable[:, None] & mdp.enabled & (mdp.cost > 0)
    if unreachable_cost.any():
        logger.debug(f"{int(unreachable_cost.sum())} costly pairs unreachable from s1; modified cost 0")
    exponent = np.where(reachable, tmin - 1.0, 0.0)
    factor = np.where(reachable, mdp.discount ** exponent, 0.0)
    return np.where(mdp.enabled, factor[:, None] * mdp.cost, 0.0)


# ─────────────────────────────────────────────
# Occupation-measure LPs over Sr
# ─────────────────────────────────────────────
def _flow_program(mdp: Mdp, ra: ReachAnalysis, objective: np.ndarray, name: str) -> tuple:
    """Undiscounted balance rows over Sr plus the reach row."""
    rest = ra.partition.rest
    target_mask = mdp.target_mask
    lp = LinearProgram(sense="min", name=name)
    col = {}
    for s in sorted(rest):
        for a in mdp.actions(s):
            col[s, a] = lp.add_variable(f"l_{mdp.state_names[s]}_{mdp.action_names[a]}",
                                        cost=float(objective[s, a]))

    inflow = {s: {} for s in rest}
    for (s, a), j in col.items():
        for t in np.flatnonzero(mdp.trans[s, a]):
            if int(t) in rest:
                inflow[int(t)][j] = inflow[int(t)].get(j, 0.0) - mdp.trans[s, a, t]
    for s in sorted(rest):
        coeffs = dict(inflow[s])
        for a in mdp.actions(s):
            coeffs[col[s, a]] = coeffs.get(col[s, a], 0.0) + 1.0
        lp.add_constraint(coeffs, EQ, 1.0 if s == mdp.initial else 0.0, name=f"flow_{mdp.state_names[s]}")

    if mdp.initial in rest:
        reach = {j: float(mdp.trans[s, a, target_mask].sum()) for (s, a), j in col.items()}
        lp.add_constraint({j: r for j, r in reach.items() if r > 0}, EQ, ra.x_initial(mdp), name="reach")
    return lp, col


def _occupation_table(mdp: Mdp, col: dict, x: np.ndarray) -> np.ndarray:
    lam = np.zeros((mdp.n_states, mdp.n_actions))
    for (s, a), j in col.items():
        lam[s, a] = max(x[j], 0.0)
    return lam


def solve_surrogate_lp(mdp: Mdp, ra: ReachAnalysis, ctilde: np.ndarray) -> tuple:
    """
    Minimum surrogate cost over max-reach occupation measures.

    Returns:
        tuple: (v_star, (n, m) occupation table)
    """
    lp, col = _flow_program(mdp, ra, ctilde, "surrogate")
    if not col:
        return 0.0, np.zeros((mdp.n_states, mdp.n_actions))
    sol = solve_lp(lp)
    if not sol.is_optimal:
        raise NumericalError(f"surrogate LP ended with status {sol.status}")
    logger.debug(f"Surrogate LP optimum {sol.objective:.10g} after {sol.iterations} pivots")
    return float(sol.objective), _occupation_table(mdp, col, sol.x)


def solve_selection_lp(mdp: Mdp, ra: ReachAnalysis, ctilde: np.ndarray, v_star: float) -> np.ndarray:
    """Least total occupation among max-reach measures with surrogate cost at most v_star."""
    ones = np.ones((mdp.n_states, mdp.n_actions))
    lp, col = _flow_program(mdp, ra, ones, "selection")
    if not col:
        return np.zeros((mdp.n_states, mdp.n_actions))
    lp.add_constraint(
        {j: float(ctilde[s, a]) for (s, a), j in col.items() if ctilde[s, a] != 0},
        LE, v_star * (1.0 + SELECTION_SLACK) + SELECTION_SLACK, name="surrogate_cost",
    )
    sol = solve_lp(lp)
    if not sol.is_optimal:
        raise NumericalError(f"selection LP ended with status {sol.status}")
    return _occupation_table(mdp, col, sol.x)


def extract_policy(mdp: Mdp, ra: ReachAnalysis, lam: np.ndarray) -> StationaryPolicy:
    """
    Lowest-index action with occupation above SUPPORT_TOL; unvisited states
    take the lowest-index A_max action (Sr) or A(s) action (elsewhere).
    """
    choice = []
    for s in range(mdp.n_states):
        support = np.flatnonzero(mdp.enabled[s] & (lam[s] > SUPPORT_TOL))
        if support.size:
            choice.append(int(support[0]))
        elif s in ra.partition.rest:
            choice.append(int(np.flatnonzero(ra.amax[s] & mdp.enabled[s])[0]))
        else:
            choice.append(mdp.actions(s)[0])
    return StationaryPolicy.deterministic(mdp, choice)


# ─────────────────────────────────────────────
# Surrogate evaluation
# ─────────────────────────────────────────────
def surrogate_vector(mdp: Mdp, pol: StationaryPolicy, ctilde: np.ndarray) -> np.ndarray:
    """
    Expected total undiscounted c~-cost from every state.

    Infinite from states that reach a recurrent class carrying positive cost.
    """
    chain = induced_chain(mdp, pol)
    step_cost = np.einsum("sa,sa->s", pol.prob, np.where(mdp.enabled, ctilde, 0.0))
    graph = chain_graph(chain.p)

    recurrent = set()
    costly = set()
    for component in nx.attracting_components(graph):
        recurrent |= component
        if any(step_cost[s] > 0 for s in component):
            costly |= component

    value = np.zeros(mdp.n_states)
    diverging = can_reach(graph, costly) if costly else set()
    value[list(diverging)] = np.inf

    transient = np.array(sorted(set(range(mdp.n_states)) - recurrent - diverging), dtype=int)
    if transient.size:
        lhs = np.eye(transient.size) - chain.p[np.ix_(transient, transient)]
        try:
            value[transient] = scipy.linalg.solve(lhs, step_cost[transient])
        except (scipy.linalg.LinAlgError, ValueError) as e:
            raise NumericalError(f"surrogate evaluation failed: {e}") from e
    return value


def surrogate_value(mdp: Mdp, pol: StationaryPolicy, ctilde: np.ndarray = None) -> float:
    """J~(pi) from s1; c~ defaults to the modified costs of mdp."""
    if ctilde is None:
        ctilde = modified_costs(mdp, partition_states(mdp))
    value = float(surrogate_vector(mdp, pol, ctilde)[mdp.initial])
    if not np.isfinite(value):
        logger.debug("Surrogate value diverges: costly recurrent class reachable from s1")
    return value


# ─────────────────────────────────────────────
# Certificate
# ─────────────────────────────────────────────
def suboptimality_certificate(mdp: Mdp, ra: ReachAnalysis, ctilde: np.ndarray,
                              k: int = DEFAULT_BIG_M_FACTOR) -> ApproxCertificate:
    """
    Sandwich and gap bounds of the approximation.

    The lower bound m_under_discounted * cmin holds for every feasible policy
    because costs vanish outside Sr. m_upper is |S| for deterministic
    transitions and the k|S| heuristic otherwise.
    """
    rest_mask = ra.partition.rest_mask(mdp.n_states)
    sr_pairs = rest_mask[:, None] & mdp.enabled
    cmin = float(mdp.cost[sr_pairs].min()) if sr_pairs.any() else 0.0
    ctilde_max = float(ctilde[sr_pairs].max()) if sr_pairs.any() else 0.0

    steps = np.where(sr_pairs, 1.0, 0.0)
    m_under, _ = solve_surrogate_lp(mdp, ra, steps)
    m_under_discounted = 0.0
    if sr_pairs.any():
        counted = cleanup(mdp, ra).with_costs(steps)
        m_under_discounted = float(optimal_values(counted).y[mdp.initial])

    n = mdp.n_states
    certified = mdp.has_deterministic_transitions()
    m_upper = float(n if certified else k * n)
    lower = m_under_discounted * cmin
    return ApproxCertificate(
        cmin=cmin,
        ctilde_max=ctilde_max,
        m_under=m_under,
        m_under_discounted=m_under_discounted,
        m_upper=m_upper,
        m_upper_certified=certified,
        lower_bound=lower,
        gap_bound=max(m_upper * ctilde_max - lower, 0.0),
        linear_gap_bound=n * ctilde_max,
    )


# ─────────────────────────────────────────────
# Pipelines
# ─────────────────────────────────────────────
def synth_approx(mdp: Mdp, k: int = DEFAULT_BIG_M_FACTOR, zero_out: bool = False,
                 undiscounted: bool = False) -> SynthesisReport:
    """
    Approximate optimal deterministic policy from the two surrogate LPs.

    Parameters:
        mdp (Mdp): A valid MDP
        k (int): Step-bound factor for stochastic transitions
        zero_out (bool): Zero nonzero costs on B and S0 instead of failing
        undiscounted (bool): Use c instead of c~ in both LPs

    Returns:
        SynthesisReport: Method "approx" or "approx-undiscounted"; surrogate
            is J~ of the policy under the LP's cost; bounds carry v* and the
            certificate
    """
    method = "approx-undiscounted" if undiscounted else "approx"
    try:
        started = time.perf_counter()
        logger.info(f"- Approximate deterministic synthesis ({method})")

        violations = validate(mdp)
        if violations:
            raise MdpValidationError(violations)

        part = partition_states(mdp)
        mdp = enforce_cost_assumption(mdp, part, zero_out)
        ra = max_reach(mdp)
        ctilde = modified_costs(mdp, part)
        lp_cost = np.where(mdp.enabled, mdp.cost, 0.0) if undiscounted else ctilde

        v_star, _ = solve_surrogate_lp(mdp, ra, lp_cost)
        lam = solve_selection_lp(mdp, ra, lp_cost, v_star)
        policy = extract_policy(mdp, ra, lam)

        j_tilde = surrogate_value(mdp, policy, lp_cost)
        diagnostics = []
        if abs(j_tilde - v_star) > REPORT_TOL * max(1.0, abs(v_star)):
            diagnostics.append(f"surrogate value {j_tilde:.9g} of the extracted policy differs from LP optimum {v_star:.9g}")

        cert = suboptimality_certificate(mdp, ra, ctilde, k)
        if not cert.m_upper_certified:
            diagnostics.append("gap bound uses the k|S| step heuristic; not certified for stochastic transitions")
        infimum = float(optimal_values(cleanup(mdp, ra)).y[mdp.initial])

        return finalize_report(
            mdp, method, policy, max_reach=ra.x_initial(mdp), infimum=infimum, surrogate=j_tilde,
            bounds={"v_star": v_star, **cert.as_dict()},
            diagnostics=diagnostics, started=started,
        )

    except Exception as e:
        logger.error(f"Approximate synthesis failed: {e}", exc_info=True)
        raise


def synth_discounted_baseline(mdp: Mdp) -> SynthesisReport:
    """
    Baseline with both the reach reward and the cost discounted.

    Maximizes the discounted reach reward over discounted occupation
    measures, then minimizes the discounted cost among measures attaining
    it; the policy is the lowest-index support action per state.
    """
    try:
        started = time.perf_counter()
        logger.info("- Discounted-reachability baseline")

        violations = validate(mdp)
        if violations:
            raise MdpValidationError(violations)

        ra = max_reach(mdp)
        rest_mask = ra.partition.rest_mask(mdp.n_states)
        reward = np.where(rest_mask[:, None] & mdp.enabled,
                          mdp.trans[:, :, mdp.target_mask].sum(axis=2), 0.0)

        def discounted_program(objective, name):
            lp = LinearProgram(sense="min", name=name)
            col = {}
            for s in range(mdp.n_states):
                for a in mdp.actions(s):
                    col[s, a] = lp.add_variable(f"l_{mdp.state_names[s]}_{mdp.action_names[a]}",
                                                cost=float(objective[s, a]))
            inflow = {s: {} for s in range(mdp.n_states)}
            for (s, a), j in col.items():
                for t in np.flatnonzero(mdp.trans[s, a]):
                    inflow[int(t)][j] = inflow[int(t)].get(j, 0.0) - mdp.discount * mdp.trans[s, a, t]
            for s in range(mdp.n_states):
                coeffs = dict(inflow[s])
                for a in mdp.actions(s):
                    coeffs[col[s, a]] = coeffs.get(col[s, a], 0.0) + 1.0
                lp.add_constraint(coeffs, EQ, 1.0 if s == mdp.initial else 0.0, name=f"disc_{mdp.state_names[s]}")
            return lp, col

        lp, col = discounted_program(-reward, "discounted_reach")
        sol = solve_lp(lp)
        if not sol.is_optimal:
            raise NumericalError(f"discounted reach LP ended with status {sol.status}")
        best_reward = -sol.objective

        lp, col = discounted_program(np.where(mdp.enabled, mdp.cost, 0.0), "discounted_cost")
        lp.add_constraint({j: float(reward[s, a]) for (s, a), j in col.items() if reward[s, a] > 0},
                          GE, best_reward * (1.0 - SELECTION_SLACK) - SELECTION_SLACK, name="discounted_reach")
        sol = solve_lp(lp)
        if not sol.is_optimal:
            raise NumericalError(f"discounted cost LP ended with status {sol.status}")

        lam = _occupation_table(mdp, col, sol.x)
        choice = []
        for s in range(mdp.n_states):
            support = np.flatnonzero(mdp.enabled[s] & (lam[s] > SUPPORT_TOL))
            choice.append(int(support[0]) if support.size else mdp.actions(s)[0])
        policy = StationaryPolicy.deterministic(mdp, choice)

        return finalize_report(
            mdp, "discounted-baseline", policy, max_reach=ra.x_initial(mdp),
            bounds={"discounted_reach_reward": best_reward, "lp_cost": sol.objective},
            started=started,
        )

    except Exception as e:
        logger.error(f"Discounted baseline failed: {e}", exc_info=True)
        raise
