"""
instances.py

Small reference MDPs and a random instance generator.

- loop_exit: s1 with a zero-cost self-loop a1 and a move a2 (cost 1) into the
  absorbing target s2. No policy attains the infimum 0 among maximizers.
- two_path: s1 reaches g directly (a, cost 2) or through m (b then c,
  cost 1 each).
- random_mdp: single absorbing zero-cost target, decimal probabilities and
  costs, zero costs on S0, initial state with a path to the target.

Used in: tests, data/mdps generation
"""

import numpy as np

from src.logger import get_logger
from src.mdp_core import Mdp, StationaryPolicy, make_mdp, partition_states


logger = get_logger(__name__)

RANDOM_DISCOUNTS = (0.5, 0.7, 0.9)


def loop_exit(discount: float = 0.5, cost_a1: float = 0.0) -> Mdp:
    return make_mdp(
        states=["s1", "s2"],
        transitions={
            ("s1", "a1"): {"s1": 1.0},
            ("s1", "a2"): {"s2": 1.0},
            ("s2", "a1"): {"s2": 1.0},
        },
        initial="s1",
        targets=["s2"],
        discount=discount,
        costs={("s1", "a1"): cost_a1, ("s1", "a2"): 1.0},
    )


def loop_exit_policy(mdp: Mdp, delta: float) -> StationaryPolicy:
    """pi(s1, a2) = delta, pi(s1, a1) = 1 - delta."""
    prob = np.zeros((mdp.n_states, mdp.n_actions))
    s1, s2 = mdp.state_id("s1"), mdp.state_id("s2")
    a1, a2 = mdp.action_id("a1"), mdp.action_id("a2")
    prob[s1, a1] = 1.0 - delta
    prob[s1, a2] = delta
    prob[s2, a1] = 1.0
    return StationaryPolicy(prob)


def two_path(discount: float = 0.5) -> Mdp:
    return make_mdp(
        states=["s1", "m", "g"],
        transitions={
            ("s1", "a"): {"g": 1.0},
            ("s1", "b"): {"m": 1.0},
            ("m", "c"): {"g": 1.0},
            ("g", "c"): {"g": 1.0},
        },
        initial="s1",
        targets=["g"],
        discount=discount,
        costs={("s1", "a"): 2.0, ("s1", "b"): 1.0, ("m", "c"): 1.0},
    )


def _decimal_distribution(rng: np.random.Generator, n_states: int, deterministic: bool) -> np.ndarray:
    """Distribution with entries that are multiples of 0.1, each at least 0.1."""
    row = np.zeros(n_states)
    if deterministic:
        row[rng.integers(n_states)] = 1.0
        return row
    support = rng.choice(n_states, size=rng.integers(1, min(3, n_states) + 1), replace=False)
    tenths = np.ones(support.size, dtype=int)
    for _ in range(10 - support.size):
        tenths[rng.integers(support.size)] += 1
    row[support] = tenths / 10.0
    return row


def random_mdp(rng: np.random.Generator, max_states: int = 6, max_actions: int = 3,
               deterministic: bool = False, max_tries: int = 1000) -> Mdp:
    """
    Random instance: state 0 is initial, the last state is the target.

    Parameters:
        rng (np.random.Generator): Source of randomness
        max_states (int): At most this many states (at least 2)
        max_actions (int): At most this many actions per state
        deterministic (bool): Every transition goes to a single successor
        max_tries (int): Rejection-sampling budget

    Returns:
        Mdp: A valid MDP whose initial state can reach the target
    """
    for _ in range(max_tries):
        n = int(rng.integers(2, max_states + 1))
        m = int(rng.integers(1, max_actions + 1))
        names = [f"s{i}" for i in range(n - 1)] + ["goal"]
        actions = [f"a{j}" for j in range(m)]

        enabled = np.zeros((n, m), dtype=bool)
        trans = np.zeros((n, m, n))
        cost = np.zeros((n, m))
        for s in range(n - 1):
            k = int(rng.integers(1, m + 1))
            for a in sorted(rng.choice(m, size=k, replace=False)):
                enabled[s, a] = True
                trans[s, a] = _decimal_distribution(rng, n, deterministic)
                cost[s, a] = round(float(rng.integers(0, 41)) / 10.0, 1)
        enabled[n - 1, 0] = True
        trans[n - 1, 0, n - 1] = 1.0

        discount = float(rng.choice(RANDOM_DISCOUNTS))
        mdp = Mdp(tuple(names), tuple(actions), enabled, trans, cost, discount, 0, frozenset({n - 1}))
        part = partition_states(mdp)
        if 0 in part.zero:
            continue
        if part.zero:
            zeroed = np.array(cost)
            zeroed[list(part.zero)] = 0.0
            mdp = mdp.with_costs(zeroed)
        return mdp
    raise RuntimeError(f"no admissible random MDP in {max_tries} tries")
