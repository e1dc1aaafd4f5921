"""
simulate.py

Seeded Monte-Carlo estimates of the reach probability and the discounted
cost of a stationary policy.

Episodes run vectorized in fixed-size chunks; each chunk draws from its own
stream spawned from one SeedSequence, so results do not depend on how many
workers run the chunks.

Used in: synth.py (simulate), tests
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from src.config import SIM_CHUNK_SIZE, SIM_DEFAULT_TOL
from src.logger import get_logger
from src.mdp_core import Mdp, StationaryPolicy, induced_chain


logger = get_logger(__name__)


@dataclass(frozen=True)
class SimulationResult:
    episodes: int
    horizon: int
    seed: int
    reach: float
    reach_se: float
    cost: float
    cost_se: float
    tail_bound: float

    def within(self, exact_reach: float, exact_cost: float, sigmas: float = 3.0) -> bool:
        """Both estimates inside sigmas standard errors plus the tail bound."""
        reach_ok = abs(self.reach - exact_reach) <= sigmas * self.reach_se + self.tail_bound + 1e-12
        cost_ok = abs(self.cost - exact_cost) <= sigmas * self.cost_se + self.tail_bound + 1e-12
        return reach_ok and cost_ok


def horizon_for_tolerance(mdp: Mdp, tol: float = SIM_DEFAULT_TOL) -> int:
    """Smallest h >= 1 with beta^h * cmax / (1 - beta) <= tol."""
    cmax = float(mdp.cost[mdp.enabled].max(initial=0.0))
    beta = mdp.discount
    if cmax <= 0:
        return 1
    h = int(np.ceil(np.log(tol * (1.0 - beta) / cmax) / np.log(beta)))
    return max(h, 1)


def _cumulative(table: np.ndarray) -> np.ndarray:
    cum = np.cumsum(table, axis=-1)
    cum[..., -1] = 1.0
    return cum


def _run_chunk(mdp: Mdp, pol_cum: np.ndarray, trans_cum: np.ndarray, size: int, horizon: int,
               seed: np.random.SeedSequence) -> tuple:
    rng = np.random.default_rng(seed)
    target = mdp.target_mask
    state = np.full(size, mdp.initial)
    reached = target[state].copy()
    cost = np.zeros(size)
    weight = 1.0
    for _ in range(horizon):
        action = (rng.random(size)[:, None] < pol_cum[state]).argmax(axis=1)
        cost += weight * mdp.cost[state, action]
        state = (rng.random(size)[:, None] < trans_cum[state, action]).argmax(axis=1)
        reached |= target[state]
        weight *= mdp.discount
    return reached, cost


def simulate(mdp: Mdp, pol: StationaryPolicy, episodes: int = 100_000, horizon: int = None,
             seed: int = 0, n_jobs: int = 1, tol: float = SIM_DEFAULT_TOL) -> SimulationResult:
    """
    Monte-Carlo estimate of reach probability and discounted cost.

    Parameters:
        mdp (Mdp): The MDP
        pol (StationaryPolicy): The policy to simulate
        episodes (int): Number of episodes
        horizon (int, optional): Steps per episode; derived from tol when omitted
        seed (int): Root seed
        n_jobs (int): joblib workers; does not change the result

    Returns:
        SimulationResult: Estimates, standard errors and the tail bound
    """
    try:
        induced_chain(mdp, pol)
        horizon = horizon_for_tolerance(mdp, tol) if horizon is None else int(horizon)
        sizes = [SIM_CHUNK_SIZE] * (episodes // SIM_CHUNK_SIZE)
        if episodes % SIM_CHUNK_SIZE:
            sizes.append(episodes % SIM_CHUNK_SIZE)
        seeds = np.random.SeedSequence(seed).spawn(len(sizes))
        logger.info(f"Simulating {episodes} episodes x {horizon} steps in {len(sizes)} chunk(s)")

        pol_cum = _cumulative(np.where(mdp.enabled, pol.prob, 0.0))
        trans_cum = _cumulative(mdp.trans)
        chunks = Parallel(n_jobs=n_jobs)(
            delayed(_run_chunk)(mdp, pol_cum, trans_cum, size, horizon, chunk_seed)
            for size, chunk_seed in zip(sizes, seeds)
        )
        reached = np.concatenate([r for r, _ in chunks]).astype(float)
        cost = np.concatenate([c for _, c in chunks])

        def stderr(values):
            return float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0

        cmax = float(mdp.cost[mdp.enabled].max(initial=0.0))
        tail = mdp.discount ** horizon * cmax / (1.0 - mdp.discount)
        result = SimulationResult(
            episodes=episodes,
            horizon=horizon,
            seed=seed,
            reach=float(reached.mean()),
            reach_se=stderr(reached),
            cost=float(cost.mean()),
            cost_se=stderr(cost),
            tail_bound=float(tail),
        )
        logger.info(f"Estimated reach {result.reach:.6f} ± {result.reach_se:.2e}, "
                    f"cost {result.cost:.6f} ± {result.cost_se:.2e}")
        return result

    except Exception as e:
        logger.error(f"Simulation failed: {e}", exc_info=True)
        raise


def trajectory_frame(mdp: Mdp, pol: StationaryPolicy, episodes: int = 10, horizon: int = 50,
                     seed: int = 0) -> pd.DataFrame:
    """Sampled trajectories as rows episode, step, state, action, cost."""
    rng = np.random.default_rng(seed)
    pol_cum = _cumulative(np.where(mdp.enabled, pol.prob, 0.0))
    trans_cum = _cumulative(mdp.trans)
    rows = []
    for episode in range(episodes):
        s = mdp.initial
        for step in range(horizon):
            a = int((rng.random() < pol_cum[s]).argmax())
            rows.append({
                "episode": episode,
                "step": step,
                "state": mdp.state_names[s],
                "action": mdp.action_names[a],
                "cost": float(mdp.cost[s, a]),
            })
            if s in mdp.targets:
                break
            s = int((rng.random() < trans_cum[s, a]).argmax())
    return pd.DataFrame(rows, columns=["episode", "step", "state", "action", "cost"])
