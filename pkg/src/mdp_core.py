"""
mdp_core.py

Validated MDP, stationary policy and induced Markov chain types, plus the
graph algorithms (state partition, shortest path lengths, reachable set)
every synthesis module consumes.

States and actions are dense integer ids with a stable name table. The
action alphabet is global; each state enables a subset of it, stored as a
boolean mask. All arrays are read-only after construction.

Used in: every other module in src/
"""

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from src.config import SOLVER_TOL
from src.errors import PolicyMismatchError
from src.logger import get_logger


logger = get_logger(__name__)


def _frozen(array, dtype):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


# ─────────────────────────────────────────────
# Domain types
# ─────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class Mdp:
    """
    Finite MDP with a discounted cost and an absorbing target set.

    Attributes:
        state_names (tuple[str]): Name of each state id
        action_names (tuple[str]): Name of each global action id
        enabled (np.ndarray): (n, m) bool, enabled[s, a] iff a is in A(s)
        trans (np.ndarray): (n, m, n) transition probabilities P[s, a, s']
        cost (np.ndarray): (n, m) one-step costs c(s, a)
        discount (float): Discount factor beta in (0, 1)
        initial (int): Initial state id s1
        targets (frozenset[int]): Target set B
    """

    state_names: tuple
    action_names: tuple
    enabled: np.ndarray
    trans: np.ndarray
    cost: np.ndarray
    discount: float
    initial: int
    targets: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "state_names", tuple(self.state_names))
        object.__setattr__(self, "action_names", tuple(self.action_names))
        object.__setattr__(self, "enabled", _frozen(self.enabled, bool))
        object.__setattr__(self, "trans", _frozen(self.trans, np.float64))
        object.__setattr__(self, "cost", _frozen(self.cost, np.float64))
        object.__setattr__(self, "targets", frozenset(int(s) for s in self.targets))
        object.__setattr__(self, "initial", int(self.initial))
        object.__setattr__(self, "discount", float(self.discount))

        n, m = len(self.state_names), len(self.action_names)
        if self.enabled.shape != (n, m) or self.cost.shape != (n, m) or self.trans.shape != (n, m, n):
            raise ValueError(
                f"array shapes do not match {n} states and {m} actions: "
                f"enabled {self.enabled.shape}, cost {self.cost.shape}, trans {self.trans.shape}"
            )
        if not 0 <= self.initial < n:
            raise ValueError(f"initial state id {self.initial} out of range")
        if any(not 0 <= s < n for s in self.targets):
            raise ValueError("target set references an unknown state id")

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    @property
    def n_actions(self) -> int:
        return len(self.action_names)

    @property
    def target_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_states, dtype=bool)
        mask[list(self.targets)] = True
        return mask

    def actions(self, s: int) -> list:
        """Enabled action ids of state s, in id order."""
        return [int(a) for a in np.flatnonzero(self.enabled[s])]

    def state_id(self, name: str) -> int:
        return self.state_names.index(name)

    def action_id(self, name: str) -> int:
        return self.action_names.index(name)

    def has_deterministic_transitions(self) -> bool:
        rows = self.trans[self.enabled]
        return bool(np.all((np.abs(rows) <= SOLVER_TOL) | (np.abs(rows - 1.0) <= SOLVER_TOL)))

    def restrict(self, keep: np.ndarray) -> "Mdp":
        """Copy of this MDP with the action sets reduced to `enabled & keep`."""
        return Mdp(
            state_names=self.state_names,
            action_names=self.action_names,
            enabled=self.enabled & np.asarray(keep, dtype=bool),
            trans=self.trans,
            cost=self.cost,
            discount=self.discount,
            initial=self.initial,
            targets=self.targets,
        )

    def with_costs(self, cost: np.ndarray) -> "Mdp":
        return Mdp(self.state_names, self.action_names, self.enabled, self.trans, cost,
                   self.discount, self.initial, self.targets)

    def with_discount(self, discount: float) -> "Mdp":
        return Mdp(self.state_names, self.action_names, self.enabled, self.trans, self.cost,
                   discount, self.initial, self.targets)

    def same_as(self, other: "Mdp") -> bool:
        """Structural equality (names, masks, arrays, discount, initial, targets)."""
        return (
            self.state_names == other.state_names
            and self.action_names == other.action_names
            and np.array_equal(self.enabled, other.enabled)
            and np.array_equal(self.trans, other.trans)
            and np.array_equal(self.cost, other.cost)
            and self.discount == other.discount
            and self.initial == other.initial
            and self.targets == other.targets
        )


@dataclass(frozen=True, eq=False)
class StationaryPolicy:
    """
    Per-state distribution over the global action alphabet.

    prob[s, a] is the probability of action a in state s; each row sums to 1.
    """

    prob: np.ndarray

    def __post_init__(self):
        prob = np.array(self.prob, dtype=np.float64, copy=True)
        if prob.ndim != 2:
            raise ValueError("policy table must be two-dimensional")
        if np.any(prob < -SOLVER_TOL):
            raise ValueError("policy has negative probabilities")
        prob[prob < 0] = 0.0
        sums = prob.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > SOLVER_TOL)
        if bad.size:
            raise ValueError(f"policy rows {bad.tolist()} do not sum to 1 (sums {sums[bad].tolist()})")
        prob.setflags(write=False)
        object.__setattr__(self, "prob", prob)

    @classmethod
    def deterministic(cls, mdp: Mdp, choice) -> "StationaryPolicy":
        """Policy taking action id choice[s] with probability 1 in each state."""
        prob = np.zeros((mdp.n_states, mdp.n_actions))
        prob[np.arange(mdp.n_states), np.asarray(choice, dtype=int)] = 1.0
        return cls(prob)

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all(np.sum(np.abs(self.prob - 1.0) <= SOLVER_TOL, axis=1) == 1))

    def action(self, s: int) -> int:
        """Most probable action of state s (lowest id on ties)."""
        return int(np.argmax(self.prob[s]))

    def choices(self) -> list:
        return [self.action(s) for s in range(self.prob.shape[0])]


@dataclass(frozen=True, eq=False)
class InducedChain:
    """Markov chain induced by a stationary policy: P^pi, c^pi and alpha."""

    p: np.ndarray
    costvec: np.ndarray
    alpha: np.ndarray


@dataclass(frozen=True, eq=False)
class StatePartition:
    """
    Partition of S into targets B, zero-reach states S0 and the rest Sr,
    plus tmin: path length (vertex count) from s1 on G_M, inf if unreachable.
    """

    targets: frozenset
    zero: frozenset
    rest: frozenset
    tmin: np.ndarray

    def rest_mask(self, n: int) -> np.ndarray:
        mask = np.zeros(n, dtype=bool)
        mask[list(self.rest)] = True
        return mask


# ─────────────────────────────────────────────
# Construction helper
# ─────────────────────────────────────────────
def make_mdp(states, transitions, initial, targets, discount, costs=None) -> Mdp:
    """
    Builds an Mdp from names.

    Parameters:
        states (list[str]): State names in id order
        transitions (dict): {(state, action): {next_state: prob}}; the keys
            define A(s), action ids follow first appearance
        initial (str): Initial state name
        targets (list[str]): Target state names
        discount (float): Discount factor
        costs (dict, optional): {(state, action): cost}, default 0

    Returns:
        Mdp: The model (not validated; call validate())

    Raises:
        ValueError: On dangling state or action references
    """
    states = list(states)
    index = {name: i for i, name in enumerate(states)}
    if len(index) != len(states):
        raise ValueError("duplicate state names")

    action_names = []
    for _, action in transitions:
        if action not in action_names:
            action_names.append(action)
    a_index = {name: i for i, name in enumerate(action_names)}

    n, m = len(states), len(action_names)
    enabled = np.zeros((n, m), dtype=bool)
    trans = np.zeros((n, m, n))
    cost = np.zeros((n, m))

    for (state, action), row in transitions.items():
        if state not in index:
            raise ValueError(f"transition from unknown state '{state}'")
        s, a = index[state], a_index[action]
        enabled[s, a] = True
        for nxt, p in row.items():
            if nxt not in index:
                raise ValueError(f"transition ({state}, {action}) leads to unknown state '{nxt}'")
            trans[s, a, index[nxt]] += float(p)

    for (state, action), value in (costs or {}).items():
        if state not in index or action not in a_index or not enabled[index[state], a_index[action]]:
            raise ValueError(f"cost given for undefined pair ({state}, {action})")
        cost[index[state], a_index[action]] = float(value)

    if initial not in index:
        raise ValueError(f"unknown initial state '{initial}'")
    unknown = [t for t in targets if t not in index]
    if unknown:
        raise ValueError(f"unknown target states {unknown}")

    return Mdp(
        state_names=tuple(states),
        action_names=tuple(action_names),
        enabled=enabled,
        trans=trans,
        cost=cost,
        discount=discount,
        initial=index[initial],
        targets=frozenset(index[t] for t in targets),
    )


# ─────────────────────────────────────────────
# Operations
# ─────────────────────────────────────────────
def validate(mdp: Mdp) -> list:
    """
    Checks every Mdp invariant.

    Returns:
        list[str]: One message per violation; empty iff the MDP is valid
    """
    violations = []
    names, acts = mdp.state_names, mdp.action_names

    if not 0.0 < mdp.discount < 1.0:
        violations.append(f"discount {mdp.discount} not strictly inside (0, 1)")

    for s in range(mdp.n_states):
        if not mdp.enabled[s].any():
            violations.append(f"state {names[s]}: empty action set")
        for a in mdp.actions(s):
            row = mdp.trans[s, a]
            total = row.sum()
            if np.any(row < 0) or np.any(row > 1):
                violations.append(f"({names[s]}, {acts[a]}): probability outside [0, 1]")
            if abs(total - 1.0) > SOLVER_TOL:
                violations.append(f"({names[s]}, {acts[a]}): row sum {total:g} ≠ 1")
            if mdp.cost[s, a] < 0 or not np.isfinite(mdp.cost[s, a]):
                violations.append(f"({names[s]}, {acts[a]}): cost {mdp.cost[s, a]:g} is not a nonnegative real")
            if s in mdp.targets and abs(row[s] - 1.0) > SOLVER_TOL:
                violations.append(f"({names[s]}, {acts[a]}): target not absorbing")

    disabled = ~mdp.enabled
    if np.any(mdp.trans[disabled] != 0) or np.any(mdp.cost[disabled] != 0):
        logger.debug("Disabled pairs carry data; ignored by every operation")

    return violations


def induced_chain(mdp: Mdp, pol: StationaryPolicy) -> InducedChain:
    """
    Builds P^pi, c^pi and alpha for a stationary policy.

    Raises:
        PolicyMismatchError: If the policy shape differs from the MDP or it
            puts mass on disabled actions
    """
    prob = pol.prob
    if prob.shape != (mdp.n_states, mdp.n_actions):
        raise PolicyMismatchError(
            f"policy shape {prob.shape} does not match MDP ({mdp.n_states}, {mdp.n_actions})"
        )
    leaked = (prob > SOLVER_TOL) & ~mdp.enabled
    if leaked.any():
        pairs = [(mdp.state_names[s], mdp.action_names[a]) for s, a in zip(*np.nonzero(leaked))]
        raise PolicyMismatchError(f"policy uses disabled actions {pairs[:10]}")

    weights = np.where(mdp.enabled, prob, 0.0)
    p = np.einsum("sa,sat->st", weights, mdp.trans)
    # renormalize only float drift
    sums = p.sum(axis=1, keepdims=True)
    drift = np.abs(sums - 1.0) <= SOLVER_TOL
    p = np.where(drift, p / np.where(drift, sums, 1.0), p)
    costvec = np.einsum("sa,sa->s", weights, mdp.cost)
    alpha = np.zeros(mdp.n_states)
    alpha[mdp.initial] = 1.0
    return InducedChain(p=p, costvec=costvec, alpha=alpha)


def transition_graph(mdp: Mdp) -> nx.DiGraph:
    """Digraph G_M: edge (s, s') iff some enabled action moves s to s' with positive probability."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(mdp.n_states))
    support = np.where(mdp.enabled[:, :, None], mdp.trans, 0.0).sum(axis=1) > 0
    graph.add_edges_from((int(s), int(t)) for s, t in zip(*np.nonzero(support)))
    return graph


def chain_graph(p: np.ndarray) -> nx.DiGraph:
    """Digraph of the positive entries of a transition matrix."""
    graph = nx.DiGraph()
    graph.add_nodes_from(range(p.shape[0]))
    graph.add_edges_from((int(s), int(t)) for s, t in zip(*np.nonzero(p > 0)))
    return graph


def can_reach(graph: nx.DiGraph, targets) -> set:
    """All vertices with a path to some target (targets included)."""
    found = set(targets)
    for t in targets:
        found |= nx.ancestors(graph, t)
    return found


def partition_states(mdp: Mdp) -> StatePartition:
    """
    Splits S into B, S0 and Sr on G_M and computes tmin from s1.

    tmin(s1) = 1: a path of length n has n vertices.
    """
    graph = transition_graph(mdp)
    targets = frozenset(mdp.targets)
    alive = can_reach(graph, targets)
    zero = frozenset(s for s in range(mdp.n_states) if s not in alive)
    rest = frozenset(range(mdp.n_states)) - targets - zero

    tmin = np.full(mdp.n_states, np.inf)
    for s, hops in nx.single_source_shortest_path_length(graph, mdp.initial).items():
        tmin[s] = hops + 1
    tmin.setflags(write=False)

    logger.debug(f"Partition: |B|={len(targets)}, |S0|={len(zero)}, |Sr|={len(rest)}")
    return StatePartition(targets=targets, zero=zero, rest=rest, tmin=tmin)


def reachable_states(mdp: Mdp, pol: StationaryPolicy) -> set:
    """Forward closure of {s1} through positive-probability transitions of the induced chain."""
    chain = induced_chain(mdp, pol)
    graph = chain_graph(chain.p)
    return {mdp.initial} | nx.descendants(graph, mdp.initial)
