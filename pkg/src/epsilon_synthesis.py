"""
epsilon_synthesis.py

Epsilon-optimal stationary synthesis: the greedy cost-optimal policy on
the cleaned-up MDP is perturbed so every maximizing action keeps positive
probability, with the perturbation size chosen so the cost increase stays
within eps.

This module performs:
- The perturbed policy for a given eps'
- The perturbation matrix M, vector v and the certificate scalars
  gamma1, gamma2 with J(pi') = J(pi) + eps' (gamma1 + gamma2)
- The halving search for eps' and the full synthesis pipeline

Used in: synth.py, routers/synthesize.py, experiments/run_gridworld.py
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from src.config import EPS_HALVING_CAP, REPORT_TOL, SOLVER_TOL
from src.discount_core import DiscountAnalysis, evaluate_cost, optimal_values
from src.errors import MdpValidationError, NumericalError
from src.logger import get_logger
from src.mdp_core import Mdp, StationaryPolicy, induced_chain, partition_states, validate
from src.reachability import cleanup, max_reach, reach_prob
from src.report import SynthesisReport, finalize_report


logger = get_logger(__name__)

# gamma1 + gamma2 at or below this accepts any eps'
GAMMA_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Perturbation:
    eps_prime: float
    m_mat: np.ndarray
    v_vec: np.ndarray
    gamma1: float
    gamma2: float
    policy: StationaryPolicy
    identity_residual: float

    @property
    def gamma(self) -> float:
        return self.gamma1 + self.gamma2


def _split_actions(mdp_prime: Mdp, da: DiscountAnalysis, rest) -> dict:
    """{s: (A_act, A_pass)} for Sr states with a nonempty passive set."""
    split = {}
    for s in sorted(rest):
        enabled = mdp_prime.actions(s)
        active = [a for a in enabled if da.pitilde.prob[s, a] > SOLVER_TOL]
        passive = [a for a in enabled if a not in active]
        if passive:
            split[s] = (active, passive)
    return split


def perturbation_bound(mdp_prime: Mdp, da: DiscountAnalysis, rest=None) -> float:
    """Largest eps' keeping the perturbed policy nonnegative; inf when nothing is perturbed."""
    rest = partition_states(mdp_prime).rest if rest is None else rest
    bound = np.inf
    for s, (active, passive) in _split_actions(mdp_prime, da, rest).items():
        smallest = min(da.pitilde.prob[s, a] for a in active)
        bound = min(bound, smallest * len(active) / len(passive))
    return float(bound)


def perturb_policy(mdp_prime: Mdp, da: DiscountAnalysis, eps_prime: float, rest=None) -> StationaryPolicy:
    """
    Moves eps' of probability onto each passive action of every Sr state,
    taking it evenly from the actions pi-tilde uses.

    Raises:
        ValueError: If eps' is not in (0, nonnegativity bound]
    """
    rest = partition_states(mdp_prime).rest if rest is None else rest
    bound = perturbation_bound(mdp_prime, da, rest)
    if not eps_prime > 0 or eps_prime > bound + SOLVER_TOL:
        raise ValueError(f"eps' = {eps_prime} outside (0, {bound}]")

    prob = np.array(da.pitilde.prob)
    for s, (active, passive) in _split_actions(mdp_prime, da, rest).items():
        prob[s, passive] = eps_prime
        prob[s, active] -= eps_prime * len(passive) / len(active)
    prob[np.abs(prob) <= SOLVER_TOL] = 0.0
    return StationaryPolicy(prob)


def perturbation_certificate(mdp_prime: Mdp, da: DiscountAnalysis, eps_prime: float, rest=None) -> Perturbation:
    """
    Perturbed policy together with M, v, gamma1 and gamma2.

    gamma1 = beta alpha^T R M R' c^pi, gamma2 = alpha^T R' v where R and R'
    are the resolvents (I - beta P)^-1 of pi-tilde and of the perturbed policy.
    """
    rest = partition_states(mdp_prime).rest if rest is None else rest
    policy = perturb_policy(mdp_prime, da, eps_prime, rest)

    n = mdp_prime.n_states
    m_mat = np.zeros((n, n))
    v_vec = np.zeros(n)
    for s, (active, passive) in _split_actions(mdp_prime, da, rest).items():
        ratio = len(passive) / len(active)
        m_mat[s] = mdp_prime.trans[s, passive].sum(axis=0) - ratio * mdp_prime.trans[s, active].sum(axis=0)
        v_vec[s] = mdp_prime.cost[s, passive].sum() - ratio * mdp_prime.cost[s, active].sum()

    beta = mdp_prime.discount
    base = induced_chain(mdp_prime, da.pitilde)
    moved = induced_chain(mdp_prime, policy)
    eye = np.eye(n)
    try:
        # alpha^T R, R' c^pi and alpha^T R'
        left = scipy.linalg.solve((eye - beta * base.p).T, base.alpha)
        right = scipy.linalg.solve(eye - beta * moved.p, base.costvec)
        left_moved = scipy.linalg.solve((eye - beta * moved.p).T, base.alpha)
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"resolvent solve failed: {e}") from e

    gamma1 = float(beta * left @ m_mat @ right)
    gamma2 = float(left_moved @ v_vec)

    j_base = evaluate_cost(mdp_prime, da.pitilde)
    j_moved = evaluate_cost(mdp_prime, policy)
    residual = abs(j_moved - j_base - eps_prime * (gamma1 + gamma2))
    if residual > REPORT_TOL:
        logger.warning(f"Perturbation identity off by {residual:.3e} at eps'={eps_prime:.3e}")
    if gamma1 + gamma2 < -SOLVER_TOL:
        logger.warning(f"gamma1 + gamma2 = {gamma1 + gamma2:.3e} is negative; pi-tilde may not be optimal")

    return Perturbation(
        eps_prime=eps_prime,
        m_mat=m_mat,
        v_vec=v_vec,
        gamma1=gamma1,
        gamma2=gamma2,
        policy=policy,
        identity_residual=residual,
    )


def synth_eps_optimal(mdp: Mdp, eps: float, backend: str = "vi") -> SynthesisReport:
    """
    Synthesizes a stationary policy that reaches the targets with maximum
    probability and costs at most y(s1) + eps.

    Parameters:
        mdp (Mdp): A valid MDP
        eps (float): Allowed excess cost, > 0
        backend (str): Value computation backend, "vi" or "lp"

    Returns:
        SynthesisReport: Method "eps"; bounds carry eps', gamma1, gamma2
    """
    try:
        if not eps > 0:
            raise ValueError(f"eps must be positive, got {eps}")
        started = time.perf_counter()
        logger.info(f"- eps-optimal synthesis (eps={eps:g})")

        violations = validate(mdp)
        if violations:
            raise MdpValidationError(violations)

        ra = max_reach(mdp)
        x1 = ra.x_initial(mdp)

        if x1 <= REPORT_TOL:
            # every policy is feasible: the unconstrained minimizer is optimal
            da_full = optimal_values(mdp, backend)
            return finalize_report(
                mdp, "eps", da_full.pitilde, max_reach=x1, infimum=float(da_full.y[mdp.initial]),
                bounds={"eps": eps, "eps_prime": 0.0},
                diagnostics=["targets unreachable from the initial state; unconstrained minimizer returned"],
                started=started,
            )

        mdp_prime = cleanup(mdp, ra)
        da = optimal_values(mdp_prime, backend)
        y1 = float(da.y[mdp.initial])
        rest = ra.partition.rest

        if abs(reach_prob(mdp, da.pitilde) - x1) <= REPORT_TOL:
            logger.info("Greedy cost-optimal policy already reaches with maximum probability")
            return finalize_report(
                mdp, "eps", da.pitilde, max_reach=x1, infimum=y1,
                bounds={"eps": eps, "eps_prime": 0.0, "gamma1": 0.0, "gamma2": 0.0},
                diagnostics=["unperturbed greedy policy is optimal"],
                started=started,
            )

        bound = perturbation_bound(mdp_prime, da, rest)
        candidate = bound / 2.0
        accepted = None
        for attempt in range(1, EPS_HALVING_CAP + 1):
            cert = perturbation_certificate(mdp_prime, da, candidate, rest)
            logger.debug(f"eps' candidate {candidate:.6e}: gamma1+gamma2 = {cert.gamma:.6e}")
            if cert.gamma <= GAMMA_FLOOR or candidate <= eps / cert.gamma:
                accepted = cert
                break
            candidate /= 2.0

        if accepted is None:
            raise NumericalError(
                f"no admissible eps' after {EPS_HALVING_CAP} halvings "
                f"(last candidate {candidate:.3e}, gamma1+gamma2 = {cert.gamma:.3e})"
            )
        logger.info(f"Accepted eps' = {accepted.eps_prime:.6e} after {attempt} candidate(s)")

        report = finalize_report(
            mdp, "eps", accepted.policy, max_reach=x1, infimum=y1,
            bounds={
                "eps": eps,
                "eps_prime": accepted.eps_prime,
                "nonnegativity_bound": bound,
                "gamma1": accepted.gamma1,
                "gamma2": accepted.gamma2,
                "identity_residual": accepted.identity_residual,
            },
            solver_stats={"eps_prime_candidates": attempt},
            started=started,
        )
        if report.cost > y1 + eps + REPORT_TOL:
            report.diagnostics.append(f"J = {report.cost:.9g} exceeds y(s1) + eps = {y1 + eps:.9g}")
        return report

    except Exception as e:
        logger.error(f"eps-optimal synthesis failed: {e}", exc_info=True)
        raise
