"""
gridworld.py

Grid-world benchmark: an agent crosses a grid with obstacles and cells of
high, moderate and low risk toward a single target cell.

This module performs:
- Layout file parsing ('#' obstacle, 'S' start, 'G' target, 'H' high,
  'M' moderate, '.' low risk)
- MDP generation: up/down/left/right succeed with the configured
  probability and otherwise leave the agent in place; moves into an
  obstacle or off the grid keep the agent in place; stay is deterministic;
  every action of a non-target cell costs the risk of that cell
- Most-likely trajectory of a policy and risk-class visit counts

Used in: synth.py (gridworld), experiments/run_gridworld.py
"""

from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.config import GRID_ACTIONS, GRID_DISCOUNT, GRID_SUCCESS_PROB, RISK_COSTS
from src.errors import DocumentError
from src.logger import get_logger
from src.mdp_core import Mdp, StationaryPolicy, validate


logger = get_logger(__name__)

MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1), "stay": (0, 0)}
RISK_SYMBOLS = {"H": "high", "M": "moderate", ".": "low", "S": "low"}


class GridSpec(BaseModel):
    """
    Grid-world parameters. Cells are (row, col); unlisted cells are low risk.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    width: int = Field(default=10, ge=1)
    height: int = Field(default=10, ge=1)
    obstacles: list[tuple[int, int]] = Field(default_factory=list)
    target: tuple[int, int]
    initial: tuple[int, int]
    high: list[tuple[int, int]] = Field(default_factory=list)
    moderate: list[tuple[int, int]] = Field(default_factory=list)
    success_prob: float = Field(default=GRID_SUCCESS_PROB, gt=0.0, le=1.0)
    discount: float = Field(default=GRID_DISCOUNT, gt=0.0, lt=1.0)
    risk_costs: dict[str, float] = Field(default_factory=lambda: dict(RISK_COSTS))

    @model_validator(mode="after")
    def check_cells(self):
        problems = []
        for name in ("target", "initial"):
            r, c = getattr(self, name)
            if not (0 <= r < self.height and 0 <= c < self.width):
                problems.append(f"{name}: cell {(r, c)} outside the grid")
            if (r, c) in self.obstacles:
                problems.append(f"{name}: cell {(r, c)} is an obstacle")
        for cell in self.obstacles + self.high + self.moderate:
            if not (0 <= cell[0] < self.height and 0 <= cell[1] < self.width):
                problems.append(f"cell {cell} outside the grid")
        missing = {"high", "moderate", "low"} - set(self.risk_costs)
        if missing:
            problems.append(f"risk_costs: missing classes {sorted(missing)}")
        if any(v <= 0 for v in self.risk_costs.values()):
            problems.append("risk_costs: values must be positive")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def risk_class(self, cell: tuple) -> str:
        if tuple(cell) in self.high:
            return "high"
        if tuple(cell) in self.moderate:
            return "moderate"
        return "low"

    def free_cells(self) -> list:
        blocked = set(map(tuple, self.obstacles))
        return [(r, c) for r in range(self.height) for c in range(self.width) if (r, c) not in blocked]


class GridLayout(BaseModel):
    """Layout file: one string per grid row."""

    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = 1
    rows: list[str] = Field(min_length=1)
    success_prob: float = GRID_SUCCESS_PROB
    discount: float = GRID_DISCOUNT
    risk_costs: dict[str, float] = Field(default_factory=lambda: dict(RISK_COSTS))

    @model_validator(mode="after")
    def check_rows(self):
        widths = {len(row) for row in self.rows}
        if len(widths) != 1:
            raise ValueError("rows: all rows must have the same length")
        text = "".join(self.rows)
        unknown = set(text) - set("#SGHM.")
        if unknown:
            raise ValueError(f"rows: unknown symbols {sorted(unknown)}")
        if text.count("S") != 1 or text.count("G") != 1:
            raise ValueError("rows: exactly one 'S' and one 'G' required")
        return self

    def to_spec(self) -> GridSpec:
        cells = {sym: [] for sym in "#SGHM"}
        for r, row in enumerate(self.rows):
            for c, sym in enumerate(row):
                if sym in cells:
                    cells[sym].append((r, c))
        return GridSpec(
            width=len(self.rows[0]),
            height=len(self.rows),
            obstacles=cells["#"],
            target=cells["G"][0],
            initial=cells["S"][0],
            high=cells["H"],
            moderate=cells["M"],
            success_prob=self.success_prob,
            discount=self.discount,
            risk_costs=self.risk_costs,
        )


def load_layout(path: Path) -> GridSpec:
    """
    Reads a layout file.

    Raises:
        DocumentError: On malformed layouts, with field-located diagnostics
    """
    try:
        logger.info(f"Loading grid layout from {path}")
        layout = GridLayout.model_validate_json(Path(path).read_text(encoding="utf-8"))
        return layout.to_spec()
    except ValidationError as e:
        diagnostics = [f"{'.'.join(map(str, err['loc'])) or 'layout'}: {err['msg']}" for err in e.errors()]
        logger.error(f"Invalid layout {path}: {diagnostics}")
        raise DocumentError(diagnostics) from e
    except Exception as e:
        logger.error(f"Failed to load layout {path}: {e}", exc_info=True)
        raise


def cell_name(cell: tuple) -> str:
    return f"r{cell[0]}c{cell[1]}"


def generate_grid(spec: GridSpec) -> Mdp:
    """
    Builds the grid-world MDP. Every action at the target is a zero-cost self-loop.

    Returns:
        Mdp: States named r{row}c{col} in row-major order, obstacles excluded
    """
    cells = spec.free_cells()
    index = {cell: i for i, cell in enumerate(cells)}
    n, m = len(cells), len(GRID_ACTIONS)
    target = index[tuple(spec.target)]

    enabled = np.zeros((n, m), dtype=bool)
    trans = np.zeros((n, m, n))
    cost = np.zeros((n, m))
    for (r, c), s in index.items():
        if s == target:
            enabled[s] = True
            trans[s, :, s] = 1.0
            continue
        risk = spec.risk_costs[spec.risk_class((r, c))]
        for a, action in enumerate(GRID_ACTIONS):
            enabled[s, a] = True
            cost[s, a] = risk
            dr, dc = MOVES[action]
            dest = index.get((r + dr, c + dc))
            if action == "stay" or dest is None:
                trans[s, a, s] = 1.0
            else:
                trans[s, a, dest] += spec.success_prob
                trans[s, a, s] += 1.0 - spec.success_prob

    mdp = Mdp(
        state_names=tuple(cell_name(cell) for cell in cells),
        action_names=GRID_ACTIONS,
        enabled=enabled,
        trans=trans,
        cost=cost,
        discount=spec.discount,
        initial=index[tuple(spec.initial)],
        targets=frozenset({target}),
    )
    violations = validate(mdp)
    if violations:
        raise ValueError(f"generated grid is invalid: {violations[:5]}")
    logger.info(f"Grid world: {spec.height}x{spec.width}, {len(spec.obstacles)} obstacles, {n} states")
    return mdp


def most_likely_path(mdp: Mdp, pol: StationaryPolicy, max_steps: int = None) -> list:
    """
    Follows the most probable action and its most probable successor
    (lowest id on ties) until a target, a repeated state or max_steps.
    """
    max_steps = mdp.n_states if max_steps is None else max_steps
    path = [mdp.initial]
    seen = {mdp.initial}
    s = mdp.initial
    for _ in range(max_steps):
        if s in mdp.targets:
            break
        a = pol.action(s)
        s = int(np.argmax(mdp.trans[s, a]))
        path.append(s)
        if s in seen:
            break
        seen.add(s)
    return path


def risk_visits(spec: GridSpec, mdp: Mdp, path: list) -> dict:
    """Number of path states per risk class; the target cell is not counted."""
    counts = {"high": 0, "moderate": 0, "low": 0}
    for s in path:
        if s in mdp.targets:
            continue
        name = mdp.state_names[s]
        r, c = name[1:].split("c")
        counts[spec.risk_class((int(r), int(c)))] += 1
    return counts
