"""
mdp_document.py

JSON document formats and their conversion to and from the in-memory types.

Formats (all schema_version 1, unknown fields rejected):
- MdpDocument: states, per-state action lists, sparse transition triples,
  sparse costs (default 0), discount, initial state, targets
- PolicyDocument: state -> {action: probability}, positive entries only
- ReportDocument: a SynthesisReport with its policy; infinite values
  are written as null

Used in: synth.py, api/, routers/, experiments/run_gridworld.py
"""

from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.errors import DocumentError
from src.logger import get_logger
from src.mdp_core import Mdp, StationaryPolicy, validate
from src.report import SynthesisReport


logger = get_logger(__name__)


# ─────────────────────────────────────────────
# MDP document
# ─────────────────────────────────────────────
class TransitionEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    state: str
    action: str
    next: str
    prob: float = Field(ge=0.0, le=1.0)


class CostEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    state: str
    action: str
    cost: float = Field(ge=0.0, allow_inf_nan=False)


class MdpDocument(BaseModel):
    """
    Serialized MDP.

    Action ids of the in-memory model follow first appearance when walking
    `states` in order and each state's action list in order.
    """

    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = 1
    states: list[str] = Field(min_length=1)
    actions: dict[str, list[str]]
    transitions: list[TransitionEntry]
    costs: list[CostEntry] = Field(default_factory=list)
    discount: float = Field(gt=0.0, lt=1.0)
    initial: str
    targets: list[str]

    @model_validator(mode="after")
    def check_references(self):
        problems = []
        declared = set(self.states)
        if len(declared) != len(self.states):
            problems.append("states: duplicate state names")

        for state, acts in self.actions.items():
            if state not in declared:
                problems.append(f"actions.{state}: unknown state")
            if len(set(acts)) != len(acts):
                problems.append(f"actions.{state}: duplicate action names")
        for state in self.states:
            if not self.actions.get(state):
                problems.append(f"actions.{state}: empty action set")

        pairs = {(s, a) for s, acts in self.actions.items() for a in acts}
        seen = set()
        for i, t in enumerate(self.transitions):
            if (t.state, t.action) not in pairs:
                problems.append(f"transitions[{i}]: undeclared pair ({t.state}, {t.action})")
            if t.next not in declared:
                problems.append(f"transitions[{i}]: unknown next state '{t.next}'")
            if (t.state, t.action, t.next) in seen:
                problems.append(f"transitions[{i}]: duplicate triple ({t.state}, {t.action}, {t.next})")
            seen.add((t.state, t.action, t.next))

        costed = set()
        for i, c in enumerate(self.costs):
            if (c.state, c.action) not in pairs:
                problems.append(f"costs[{i}]: undeclared pair ({c.state}, {c.action})")
            if (c.state, c.action) in costed:
                problems.append(f"costs[{i}]: duplicate pair ({c.state}, {c.action})")
            costed.add((c.state, c.action))

        if self.initial not in declared:
            problems.append(f"initial: unknown state '{self.initial}'")
        for t in self.targets:
            if t not in declared:
                problems.append(f"targets: unknown state '{t}'")

        if problems:
            raise ValueError("; ".join(problems))
        return self


def document_to_mdp(doc: MdpDocument) -> Mdp:
    """Builds the Mdp and checks its invariants."""
    index = {name: i for i, name in enumerate(doc.states)}
    action_names = []
    for state in doc.states:
        for a in doc.actions[state]:
            if a not in action_names:
                action_names.append(a)
    a_index = {name: j for j, name in enumerate(action_names)}

    n, m = len(doc.states), len(action_names)
    enabled = np.zeros((n, m), dtype=bool)
    trans = np.zeros((n, m, n))
    cost = np.zeros((n, m))
    for state, acts in doc.actions.items():
        for a in acts:
            enabled[index[state], a_index[a]] = True
    for t in doc.transitions:
        trans[index[t.state], a_index[t.action], index[t.next]] = t.prob
    for c in doc.costs:
        cost[index[c.state], a_index[c.action]] = c.cost

    mdp = Mdp(
        state_names=tuple(doc.states),
        action_names=tuple(action_names),
        enabled=enabled,
        trans=trans,
        cost=cost,
        discount=doc.discount,
        initial=index[doc.initial],
        targets=frozenset(index[t] for t in doc.targets),
    )
    violations = validate(mdp)
    if violations:
        raise DocumentError(violations)
    return mdp


def mdp_to_document(mdp: Mdp) -> MdpDocument:
    names, acts = mdp.state_names, mdp.action_names
    transitions, costs = [], []
    for s in range(mdp.n_states):
        for a in mdp.actions(s):
            for t in np.flatnonzero(mdp.trans[s, a] > 0):
                transitions.append(TransitionEntry(state=names[s], action=acts[a], next=names[t],
                                                   prob=float(mdp.trans[s, a, t])))
            if mdp.cost[s, a] != 0:
                costs.append(CostEntry(state=names[s], action=acts[a], cost=float(mdp.cost[s, a])))
    return MdpDocument(
        states=list(names),
        actions={names[s]: [acts[a] for a in mdp.actions(s)] for s in range(mdp.n_states)},
        transitions=transitions,
        costs=costs,
        discount=mdp.discount,
        initial=names[mdp.initial],
        targets=[names[t] for t in sorted(mdp.targets)],
    )


def _diagnostics(error: ValidationError) -> list:
    out = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "document"
        out.append(f"{location}: {item['msg']}")
    return out


def parse_mdp(text: str) -> Mdp:
    """
    Parses an MDP document from JSON text.

    Raises:
        DocumentError: With field-located diagnostics
    """
    try:
        doc = MdpDocument.model_validate_json(text)
    except ValidationError as e:
        raise DocumentError(_diagnostics(e)) from e
    return document_to_mdp(doc)


def serialize_mdp(mdp: Mdp) -> str:
    return mdp_to_document(mdp).model_dump_json(indent=2)


def load_mdp(path: Path) -> Mdp:
    """Reads and validates an MDP document file."""
    try:
        logger.info(f"Loading MDP from {path}")
        mdp = parse_mdp(Path(path).read_text(encoding="utf-8"))
        logger.info(f"Loaded MDP: {mdp.n_states} states, {int(mdp.enabled.sum())} state-action pairs")
        return mdp
    except Exception as e:
        logger.error(f"Failed to load MDP from {path}: {e}", exc_info=True)
        raise


def save_mdp(mdp: Mdp, path: Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(serialize_mdp(mdp), encoding="utf-8")
    logger.info(f"MDP saved to {path}")


# ─────────────────────────────────────────────
# Policy and report documents
# ─────────────────────────────────────────────
class PolicyDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = 1
    policy: dict[str, dict[str, float]]


def policy_document(mdp: Mdp, pol: StationaryPolicy) -> PolicyDocument:
    table = {}
    for s in range(mdp.n_states):
        table[mdp.state_names[s]] = {
            mdp.action_names[a]: float(pol.prob[s, a]) for a in np.flatnonzero(pol.prob[s] > 0)
        }
    return PolicyDocument(policy=table)


def policy_from_document(mdp: Mdp, doc: PolicyDocument) -> StationaryPolicy:
    """
    Raises:
        DocumentError: On unknown names or a missing state
    """
    problems = []
    prob = np.zeros((mdp.n_states, mdp.n_actions))
    for state, row in doc.policy.items():
        if state not in mdp.state_names:
            problems.append(f"policy.{state}: unknown state")
            continue
        s = mdp.state_id(state)
        for action, p in row.items():
            if action not in mdp.action_names:
                problems.append(f"policy.{state}.{action}: unknown action")
                continue
            prob[s, mdp.action_id(action)] = p
    missing = [name for name in mdp.state_names if name not in doc.policy]
    if missing:
        problems.append(f"policy: no distribution for states {missing}")
    if problems:
        raise DocumentError(problems)
    try:
        return StationaryPolicy(prob)
    except ValueError as e:
        raise DocumentError([f"policy: {e}"]) from e


def load_policy(mdp: Mdp, path: Path) -> StationaryPolicy:
    try:
        doc = PolicyDocument.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DocumentError(_diagnostics(e)) from e
    return policy_from_document(mdp, doc)


Scalar = Union[bool, int, float, str, None]


class ReportDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = 1
    method: str
    reach: float
    max_reach: float
    cost: float
    infimum: Optional[float] = None
    surrogate: Optional[float] = None
    feasible: bool
    deterministic: bool
    bounds: dict[str, Scalar] = Field(default_factory=dict)
    diagnostics: list[str] = Field(default_factory=list)
    wall_time: float
    solver_stats: dict[str, Scalar] = Field(default_factory=dict)
    policy: dict[str, dict[str, float]]


def _finite_or_none(value):
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    value = float(value)
    return value if np.isfinite(value) else None


def report_document(mdp: Mdp, report: SynthesisReport) -> ReportDocument:
    return ReportDocument(
        method=report.method,
        reach=report.reach,
        max_reach=report.max_reach,
        cost=report.cost,
        infimum=_finite_or_none(report.infimum),
        surrogate=_finite_or_none(report.surrogate),
        feasible=report.is_feasible,
        deterministic=report.policy.is_deterministic,
        bounds={key: _finite_or_none(v) for key, v in report.bounds.items()},
        diagnostics=list(report.diagnostics),
        wall_time=report.wall_time,
        solver_stats={key: _finite_or_none(v) for key, v in report.solver_stats.items()},
        policy=policy_document(mdp, report.policy).policy,
    )


class ExistenceDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = 1
    exists: bool
    summary: str
    max_reach: float
    max_reach_restricted: float
    infimum: float
    diagnostics: list[str] = Field(default_factory=list)
    witness: Optional[ReportDocument] = None


def existence_document(mdp: Mdp, cert) -> ExistenceDocument:
    return ExistenceDocument(
        exists=cert.exists,
        summary=cert.summary(),
        max_reach=float(cert.x[mdp.initial]),
        max_reach_restricted=float(cert.xbar[mdp.initial]),
        infimum=cert.infimum,
        diagnostics=list(cert.diagnostics),
        witness=report_document(mdp, cert.report) if cert.report is not None else None,
    )


def save_report(mdp: Mdp, report: SynthesisReport, path: Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(report_document(mdp, report).model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Report saved to {path}")
