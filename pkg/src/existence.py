"""
existence.py

Decides whether some policy attains both the maximum reach probability
and the minimum discounted cost among maximizers, and builds a
deterministic witness when one exists.

Decision: restrict the cleaned-up MDP to its cost-optimal actions and
compare the maximum reach probability there with the one of the original
MDP. Witness: keep the reach-preserving actions of that restricted MDP
and always move strictly closer to the targets.

Used in: synth.py, routers/check_exists.py
"""

import time
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from src.config import REPORT_TOL
from src.discount_core import evaluate_cost, modified_mdp, optimal_values
from src.errors import MdpValidationError
from src.logger import get_logger
from src.mdp_core import Mdp, StationaryPolicy, transition_graph, validate
from src.reachability import ReachAnalysis, cleanup, max_reach, reach_prob
from src.report import SynthesisReport, finalize_report


logger = get_logger(__name__)


@dataclass
class ExistenceCertificate:
    """
    Attributes:
        exists (bool): An optimal policy exists
        x (np.ndarray): Max reach vector of the original MDP
        xbar (np.ndarray): Max reach vector of the cost-optimal restriction
        infimum (float): y(s1), the optimal cost among maximizers
        witness (StationaryPolicy | None): Deterministic optimal policy
        report (SynthesisReport | None): Exact evaluation of the witness
    """

    exists: bool
    x: np.ndarray
    xbar: np.ndarray
    infimum: float
    witness: StationaryPolicy = None
    report: SynthesisReport = None
    diagnostics: list = field(default_factory=list)

    def summary(self) -> str:
        if self.exists:
            return f"optimal policy exists; optimal cost {self.infimum:.9g}"
        return f"no optimal policy; infimum {self.infimum:.9g}"


def build_witness(mdp_bar: Mdp, ra_bar: ReachAnalysis, fallback: StationaryPolicy) -> StationaryPolicy:
    """
    Deterministic policy attaining xbar on the restricted MDP.

    On its Sr, picks the lowest-index reach-preserving action with a
    positive-probability successor strictly closer to the targets;
    elsewhere keeps the fallback's action.
    """
    pruned = mdp_bar.restrict(ra_bar.amax)
    reverse = transition_graph(pruned).reverse(copy=False)
    distance = nx.multi_source_dijkstra_path_length(reverse, set(mdp_bar.targets)) if mdp_bar.targets else {}

    choice = np.array(fallback.choices())
    for s in sorted(ra_bar.partition.rest):
        here = distance.get(s, np.inf)
        for a in pruned.actions(s):
            successors = np.flatnonzero(pruned.trans[s, a] > 0)
            if any(distance.get(int(t), np.inf) < here for t in successors):
                choice[s] = a
                break
        else:
            logger.warning(f"No distance-decreasing action at {mdp_bar.state_names[s]}")
    return StationaryPolicy.deterministic(mdp_bar, choice)


def check_existence(mdp: Mdp, backend: str = "vi") -> ExistenceCertificate:
    """
    Existence decision with witness construction.

    Parameters:
        mdp (Mdp): A valid MDP
        backend (str): Value computation backend, "vi" or "lp"

    Returns:
        ExistenceCertificate: Decision, both reach vectors, y(s1) and the
            witness with its exact evaluation when the decision is positive
    """
    try:
        started = time.perf_counter()
        logger.info("- Existence check")

        violations = validate(mdp)
        if violations:
            raise MdpValidationError(violations)

        ra = max_reach(mdp)
        mdp_prime = cleanup(mdp, ra)
        da = optimal_values(mdp_prime, backend)
        mdp_bar = modified_mdp(mdp_prime, da)
        ra_bar = max_reach(mdp_bar)

        x1 = ra.x_initial(mdp)
        xbar1 = ra_bar.x_initial(mdp)
        y1 = float(da.y[mdp.initial])
        exists = abs(xbar1 - x1) <= REPORT_TOL
        logger.info(f"x(s1) = {x1:.9g}, xbar(s1) = {xbar1:.9g}, y(s1) = {y1:.9g} -> exists = {exists}")

        cert = ExistenceCertificate(exists=exists, x=ra.x, xbar=ra_bar.x, infimum=y1)
        if not exists:
            return cert

        witness = build_witness(mdp_bar, ra_bar, da.pitilde)
        witness_reach = reach_prob(mdp, witness)
        witness_cost = evaluate_cost(mdp, witness)
        if abs(witness_reach - x1) > REPORT_TOL:
            cert.diagnostics.append(f"witness reach {witness_reach:.9g} differs from x(s1) = {x1:.9g}")
        if abs(witness_cost - y1) > REPORT_TOL:
            cert.diagnostics.append(f"witness cost {witness_cost:.9g} differs from y(s1) = {y1:.9g}")
        for message in cert.diagnostics:
            logger.warning(message)

        cert.witness = witness
        cert.report = finalize_report(
            mdp, "existence", witness, max_reach=x1, infimum=y1,
            bounds={"xbar_initial": xbar1}, diagnostics=cert.diagnostics, started=started,
        )
        return cert

    except Exception as e:
        logger.error(f"Existence check failed: {e}", exc_info=True)
        raise
