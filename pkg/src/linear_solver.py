"""
linear_solver.py

Self-contained dense-tableau simplex (two-phase) and LP-relaxation
branch-and-bound for 0/1 mixed-integer programs.

This module performs:
- Conversion of a bounded LP to standard form (fixed variables substituted,
  free variables split, finite upper bounds turned into rows)
- Phase one on artificial variables, removal of redundant rows
- Phase two with Dantzig pricing, switching to Bland's rule after
  BLAND_FACTOR * (rows + cols) pivots
- Dual values recovered from the final basis
- Depth-first branch-and-bound on the most fractional binary
- A human-readable LP-format dump for debugging

Solver outcomes are reported through the `status` field
("optimal", "infeasible", "unbounded", "timeout", "numerical_error").

Used in: reachability.py, discount_core.py, deterministic_exact.py,
deterministic_approx.py
"""

import time
from dataclasses import dataclass, field

import numpy as np

from src.config import (
    BLAND_FACTOR,
    INTEGRALITY_TOL,
    MAX_PIVOT_FACTOR,
    MILP_GAP_TOL,
    MILP_TIME_LIMIT,
    PHASE_ONE_TOL,
    SOLVER_TOL,
    ZERO_TOL,
)
from src.logger import get_logger


logger = get_logger(__name__)

LE, EQ, GE = "<=", "=", ">="
_FLIP = {LE: GE, GE: LE, EQ: EQ}


# ─────────────────────────────────────────────
# Problem and solution records
# ─────────────────────────────────────────────
@dataclass
class Constraint:
    coeffs: dict
    relation: str
    rhs: float
    name: str = ""


class LinearProgram:
    """
    Linear program over named variables with per-variable bounds.

    Variables default to [0, +inf). Build it with add_variable /
    add_constraint, then hand it to solve_lp.
    """

    def __init__(self, sense: str = "min", name: str = "lp"):
        if sense not in ("min", "max"):
            raise ValueError(f"unknown objective sense '{sense}'")
        self.sense = sense
        self.name = name
        self.var_names = []
        self.objective = []
        self.lower = []
        self.upper = []
        self.constraints = []

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.constraints)

    def add_variable(self, name: str, cost: float = 0.0, lower: float = 0.0, upper: float = np.inf) -> int:
        if not np.isfinite(cost):
            raise ValueError(f"objective coefficient of '{name}' is not finite")
        self.var_names.append(name)
        self.objective.append(float(cost))
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        return len(self.var_names) - 1

    def add_constraint(self, coeffs: dict, relation: str, rhs: float, name: str = "") -> int:
        if relation not in (LE, EQ, GE):
            raise ValueError(f"unknown relation '{relation}'")
        clean = {}
        for j, a in coeffs.items():
            if not 0 <= j < self.n_vars:
                raise ValueError(f"constraint '{name}' references undeclared variable {j}")
            if not np.isfinite(a):
                raise ValueError(f"constraint '{name}' has a non-finite coefficient")
            if a != 0.0:
                clean[int(j)] = clean.get(int(j), 0.0) + float(a)
        if not np.isfinite(rhs):
            raise ValueError(f"constraint '{name}' has a non-finite right-hand side")
        self.constraints.append(Constraint(clean, relation, float(rhs), name or f"r{len(self.constraints)}"))
        return len(self.constraints) - 1

    def with_bounds(self, lower, upper) -> "LinearProgram":
        """Shallow copy sharing the rows, with new bound vectors."""
        other = LinearProgram(self.sense, self.name)
        other.var_names = self.var_names
        other.objective = self.objective
        other.constraints = self.constraints
        other.lower = list(lower)
        other.upper = list(upper)
        return other


@dataclass
class MixedIntegerProgram:
    lp: LinearProgram
    binaries: list = field(default_factory=list)

    def __post_init__(self):
        bad = [j for j in self.binaries if not 0 <= j < self.lp.n_vars]
        if bad:
            raise ValueError(f"binary variables {bad} are not declared")
        self.binaries = sorted(set(int(j) for j in self.binaries))


@dataclass
class LpSolution:
    status: str
    x: np.ndarray = None
    objective: float = float("nan")
    duals: np.ndarray = None
    dual_objective: float = float("nan")
    iterations: int = 0
    message: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class MilpResult:
    status: str
    x: np.ndarray = None
    objective: float = float("nan")
    bound: float = float("nan")
    gap: float = float("inf")
    nodes: int = 0
    elapsed: float = 0.0
    lp_iterations: int = 0


# ─────────────────────────────────────────────
# Standard form
# ─────────────────────────────────────────────
@dataclass
class _StandardForm:
    A: np.ndarray
    b: np.ndarray
    relations: list
    c: np.ndarray
    constant: float
    columns: list  # per original variable: list of (column, sign)
    offset: np.ndarray
    n_user_rows: int
    infeasible_bounds: bool = False


def _standard_form(lp: LinearProgram) -> _StandardForm:
    """min c'x' + constant, A x' (rel) b, x' >= 0; maximization is negated."""
    n = lp.n_vars
    sign = 1.0 if lp.sense == "min" else -1.0
    lower = np.asarray(lp.lower, dtype=float)
    upper = np.asarray(lp.upper, dtype=float)

    offset = np.zeros(n)
    columns = []
    bound_rows = []
    n_cols = 0
    infeasible = False
    for j in range(n):
        lo, hi = lower[j], upper[j]
        if lo > hi + SOLVER_TOL:
            infeasible = True
            columns.append([])
            offset[j] = lo
            continue
        if np.isfinite(lo) and np.isfinite(hi) and hi - lo <= SOLVER_TOL:
            offset[j] = lo
            columns.append([])
        elif np.isfinite(lo):
            offset[j] = lo
            columns.append([(n_cols, 1.0)])
            if np.isfinite(hi):
                bound_rows.append((n_cols, hi - lo))
            n_cols += 1
        elif np.isfinite(hi):
            offset[j] = hi
            columns.append([(n_cols, -1.0)])
            n_cols += 1
        else:
            columns.append([(n_cols, 1.0), (n_cols + 1, -1.0)])
            n_cols += 2

    m = lp.n_rows + len(bound_rows)
    A = np.zeros((m, n_cols))
    b = np.zeros(m)
    relations = []
    for i, row in enumerate(lp.constraints):
        rhs = row.rhs
        for j, a in row.coeffs.items():
            rhs -= a * offset[j]
            for col, s in columns[j]:
                A[i, col] += a * s
        b[i] = rhs
        relations.append(row.relation)
    for k, (col, width) in enumerate(bound_rows):
        A[lp.n_rows + k, col] = 1.0
        b[lp.n_rows + k] = width
        relations.append(LE)

    objective = np.asarray(lp.objective, dtype=float)
    c = np.zeros(n_cols)
    for j in range(n):
        for col, s in columns[j]:
            c[col] += sign * objective[j] * s
    constant = sign * float(objective @ offset) if n else 0.0

    return _StandardForm(A, b, relations, c, constant, columns, offset, lp.n_rows, infeasible)


# ─────────────────────────────────────────────
# Tableau simplex
# ─────────────────────────────────────────────
def _pivot(T: np.ndarray, r: int, j: int) -> None:
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    T[:, j] = 0.0
    T[r, j] = 1.0
    rhs = T[:-1, -1]
    rhs[(rhs < 0) & (rhs > -PHASE_ONE_TOL)] = 0.0
    T[np.abs(T) < ZERO_TOL] = 0.0


class _Iterations:
    def __init__(self, limit: int, bland_after: int):
        self.count = 0
        self.limit = limit
        self.bland_after = bland_after


def _run_simplex(T: np.ndarray, basis: np.ndarray, n_cols: int, it: _Iterations) -> str:
    """Pivots T (last row = reduced costs, last column = rhs) to optimality."""
    m = T.shape[0] - 1
    while True:
        if it.count >= it.limit:
            return "numerical_error"
        reduced = T[-1, :n_cols]
        candidates = np.flatnonzero(reduced < -SOLVER_TOL)
        if candidates.size == 0:
            return "optimal"
        if it.count >= it.bland_after:
            j = int(candidates[0])
        else:
            j = int(candidates[np.argmin(reduced[candidates])])

        col = T[:m, j]
        rows = np.flatnonzero(col > SOLVER_TOL)
        if rows.size == 0:
            return "unbounded"
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + SOLVER_TOL]
        r = int(tied[np.argmin(basis[tied])])

        _pivot(T, r, j)
        basis[r] = j
        it.count += 1


def _simplex(A: np.ndarray, b: np.ndarray, relations: list, c: np.ndarray) -> dict:
    """
    Two-phase tableau simplex for min c x, A x (rel) b, x >= 0.

    Returns a dict with status, x, duals (one per row, original row
    orientation), objective and iteration count.
    """
    m, n = A.shape
    A = A.copy()
    b = b.copy()
    rel = list(relations)
    row_sign = np.ones(m)
    for i in range(m):
        if b[i] < 0 or (b[i] == 0 and rel[i] == GE):
            A[i] *= -1.0
            b[i] *= -1.0
            rel[i] = _FLIP[rel[i]]
            row_sign[i] = -1.0

    n_slack = sum(1 for r in rel if r != EQ)
    n_art = sum(1 for r in rel if r != LE)
    n_real = n + n_slack
    total = n_real + n_art

    T = np.zeros((m + 1, total + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    basis = np.zeros(m, dtype=int)
    si, ai = n, n_real
    for i, r in enumerate(rel):
        if r == LE:
            T[i, si] = 1.0
            basis[i] = si
            si += 1
        elif r == GE:
            T[i, si] = -1.0
            si += 1
            T[i, ai] = 1.0
            basis[i] = ai
            ai += 1
        else:
            T[i, ai] = 1.0
            basis[i] = ai
            ai += 1
    A_full = T[:m, :n_real].copy()
    b_norm = b.copy()

    size = m + total
    it = _Iterations(limit=MAX_PIVOT_FACTOR * max(size, 1), bland_after=BLAND_FACTOR * max(size, 1))

    # ─────────────────────────────────────────────
    # Phase one: minimize the sum of artificials
    # ─────────────────────────────────────────────
    keep_rows = np.ones(m, dtype=bool)
    if n_art:
        art_rows = basis >= n_real
        T[-1, :] = 0.0
        T[-1, n_real:total] = 1.0
        T[-1, :] -= T[:m][art_rows].sum(axis=0)
        status = _run_simplex(T, basis, total, it)
        if status == "numerical_error":
            return {"status": status, "iterations": it.count, "message": "iteration limit in phase one"}
        infeasibility = -T[-1, -1]
        if infeasibility > PHASE_ONE_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
            return {"status": "infeasible", "iterations": it.count, "message": f"phase one residual {infeasibility:.3e}"}

        for i in range(m):
            if basis[i] < n_real:
                continue
            row = T[i, :n_real]
            nonzero = np.flatnonzero(np.abs(row) > SOLVER_TOL)
            if nonzero.size:
                j = int(nonzero[np.argmax(np.abs(row[nonzero]))])
                _pivot(T, i, j)
                basis[i] = j
            else:
                keep_rows[i] = False
        if not keep_rows.all():
            logger.debug(f"Dropped {int((~keep_rows).sum())} redundant rows after phase one")

    # ─────────────────────────────────────────────
    # Phase two on the original objective
    # ─────────────────────────────────────────────
    rows_idx = np.flatnonzero(keep_rows)
    T2 = np.vstack([T[rows_idx][:, list(range(n_real)) + [total]], np.zeros((1, n_real + 1))])
    basis2 = basis[rows_idx].copy()
    cost = np.zeros(n_real)
    cost[:n] = c
    T2[-1, :n_real] = cost - cost[basis2] @ T2[:-1, :n_real]
    T2[-1, -1] = -cost[basis2] @ T2[:-1, -1]

    status = _run_simplex(T2, basis2, n_real, it)
    if status != "optimal":
        message = "iteration limit in phase two" if status == "numerical_error" else ""
        return {"status": status, "iterations": it.count, "message": message}

    x_full = np.zeros(n_real)
    x_full[basis2] = T2[:-1, -1]
    x_full[x_full < 0] = 0.0

    # duals from the final basis: B^T y = c_B
    y_kept = np.zeros(rows_idx.size)
    if rows_idx.size:
        B = A_full[rows_idx][:, basis2]
        try:
            y_kept = np.linalg.solve(B.T, cost[basis2])
        except np.linalg.LinAlgError:
            y_kept = np.linalg.lstsq(B.T, cost[basis2], rcond=None)[0]
    y = np.zeros(m)
    y[rows_idx] = y_kept

    return {
        "status": "optimal",
        "x": x_full[:n],
        "objective": float(c @ x_full[:n]),
        "duals": y * row_sign,
        "dual_objective": float(b_norm[rows_idx] @ y_kept),
        "iterations": it.count,
        "message": "",
    }


# ─────────────────────────────────────────────
# Public operations
# ─────────────────────────────────────────────
def solve_lp(lp: LinearProgram) -> LpSolution:
    """
    Solves a linear program with the dense two-phase simplex.

    Parameters:
        lp (LinearProgram): The program

    Returns:
        LpSolution: status, primal values, objective (in the LP's own sense),
            row duals and dual objective; deterministic for a fixed input
    """
    std = _standard_form(lp)
    if std.infeasible_bounds:
        return LpSolution(status="infeasible", message="lower bound above upper bound")

    try:
        with np.errstate(divide="raise", invalid="raise", over="raise"):
            raw = _simplex(std.A, std.b, std.relations, std.c)
    except (np.linalg.LinAlgError, FloatingPointError, ValueError) as e:
        logger.warning(f"LP '{lp.name}' failed numerically: {e}")
        return LpSolution(status="numerical_error", message=str(e))

    if raw["status"] != "optimal":
        logger.debug(f"LP '{lp.name}' ended with status {raw['status']} {raw.get('message', '')}")
        return LpSolution(status=raw["status"], iterations=raw["iterations"], message=raw.get("message", ""))

    x_std = raw["x"]
    x = std.offset.copy()
    for j, cols in enumerate(std.columns):
        for col, s in cols:
            x[j] += s * x_std[col]

    sign = 1.0 if lp.sense == "min" else -1.0
    objective = float(np.asarray(lp.objective) @ x) if lp.n_vars else 0.0
    duals = sign * raw["duals"][: std.n_user_rows]
    dual_objective = sign * (std.constant + raw["dual_objective"])

    residual = _primal_residual(lp, x)
    if residual > PHASE_ONE_TOL * 10:
        logger.warning(f"LP '{lp.name}' primal residual {residual:.2e}")

    logger.debug(
        f"LP '{lp.name}': {lp.n_vars} vars, {lp.n_rows} rows, "
        f"{raw['iterations']} pivots, objective {objective:.10g}"
    )
    return LpSolution(
        status="optimal",
        x=x,
        objective=objective,
        duals=duals,
        dual_objective=dual_objective,
        iterations=raw["iterations"],
    )


def _primal_residual(lp: LinearProgram, x: np.ndarray) -> float:
    worst = 0.0
    for row in lp.constraints:
        lhs = sum(a * x[j] for j, a in row.coeffs.items())
        if row.relation == LE:
            worst = max(worst, lhs - row.rhs)
        elif row.relation == GE:
            worst = max(worst, row.rhs - lhs)
        else:
            worst = max(worst, abs(lhs - row.rhs))
    return worst


def solve_milp(mip: MixedIntegerProgram, time_limit: float = MILP_TIME_LIMIT,
               gap_tol: float = MILP_GAP_TOL) -> MilpResult:
    """
    Branch-and-bound over the binary variables of a MIP.

    Depth-first; branches on the most fractional binary (lowest index on
    ties) and explores the rounding direction first; prunes nodes whose
    relaxation bound is within gap_tol of the incumbent.

    Parameters:
        mip (MixedIntegerProgram): The program
        time_limit (float): Wall-clock seconds before returning "timeout"
        gap_tol (float): Absolute optimality gap

    Returns:
        MilpResult: status, incumbent, objective, best bound, gap and node count
    """
    lp = mip.lp
    sign = 1.0 if lp.sense == "min" else -1.0
    lower = list(lp.lower)
    upper = list(lp.upper)
    for j in mip.binaries:
        lower[j] = max(lower[j], 0.0)
        upper[j] = min(upper[j], 1.0)

    start = time.perf_counter()
    stack = [({}, -np.inf)]
    incumbent, incumbent_x = np.inf, None
    nodes = 0
    lp_iterations = 0
    timed_out = False

    while stack:
        if time.perf_counter() - start > time_limit:
            timed_out = True
            break
        fixings, parent_bound = stack.pop()
        if parent_bound >= incumbent - gap_tol:
            continue

        node_lower, node_upper = list(lower), list(upper)
        for j, v in fixings.items():
            node_lower[j] = node_upper[j] = float(v)
        sol = solve_lp(lp.with_bounds(node_lower, node_upper))
        nodes += 1
        lp_iterations += sol.iterations

        if sol.status == "unbounded" and nodes == 1:
            return MilpResult(status="unbounded", nodes=nodes, elapsed=time.perf_counter() - start)
        if sol.status == "numerical_error":
            logger.warning(f"Node {nodes} relaxation failed numerically; node dropped")
        if sol.status != "optimal":
            continue

        value = sign * sol.objective
        if value >= incumbent - gap_tol:
            continue

        branch_var, best_frac = None, INTEGRALITY_TOL
        for j in mip.binaries:
            if j in fixings:
                continue
            frac = min(sol.x[j] - np.floor(sol.x[j]), np.ceil(sol.x[j]) - sol.x[j])
            if frac > best_frac:
                branch_var, best_frac = j, frac

        if branch_var is None:
            incumbent = value
            incumbent_x = sol.x.copy()
            incumbent_x[mip.binaries] = np.round(incumbent_x[mip.binaries])
            logger.debug(f"Node {nodes}: new incumbent {sign * incumbent:.10g}")
            continue

        first = 1 if sol.x[branch_var] >= 0.5 else 0
        stack.append(({**fixings, branch_var: 1 - first}, value))
        stack.append(({**fixings, branch_var: first}, value))

    elapsed = time.perf_counter() - start
    if timed_out:
        open_bounds = [bound for _, bound in stack]
        bound = min([incumbent] + open_bounds)
        status = "timeout"
    elif incumbent_x is None:
        logger.info(f"MILP '{lp.name}' infeasible after {nodes} nodes")
        return MilpResult(status="infeasible", nodes=nodes, elapsed=elapsed, lp_iterations=lp_iterations)
    else:
        bound = incumbent
        status = "optimal"

    gap = incumbent - bound if incumbent_x is not None else np.inf
    logger.info(f"MILP '{lp.name}': status {status}, {nodes} nodes, {elapsed:.2f} s")
    return MilpResult(
        status=status,
        x=incumbent_x,
        objective=sign * incumbent if incumbent_x is not None else float("nan"),
        bound=sign * bound,
        gap=float(gap),
        nodes=nodes,
        elapsed=elapsed,
        lp_iterations=lp_iterations,
    )


def dump_lp(program) -> str:
    """
    Renders an LinearProgram or MixedIntegerProgram in LP text format.

    Layout: objective section, "Subject To" with one named row per line,
    "Bounds" for every variable whose bounds differ from [0, +inf),
    "Binaries" for 0/1 variables, then "End".
    """
    lp = program.lp if isinstance(program, MixedIntegerProgram) else program
    binaries = program.binaries if isinstance(program, MixedIntegerProgram) else []

    def term_list(pairs):
        parts = []
        for j, a in pairs:
            op = "-" if a < 0 else "+"
            parts.append(f"{op} {abs(a):.12g} {lp.var_names[j]}")
        text = " ".join(parts) if parts else "0"
        return text[2:] if text.startswith("+ ") else text

    lines = ["Minimize" if lp.sense == "min" else "Maximize"]
    obj = [(j, a) for j, a in enumerate(lp.objective) if a != 0.0]
    lines.append(f" obj: {term_list(obj)}")
    lines.append("Subject To")
    for row in lp.constraints:
        lines.append(f" {row.name}: {term_list(sorted(row.coeffs.items()))} {row.relation} {row.rhs:.12g}")
    bounds = [j for j in range(lp.n_vars) if lp.lower[j] != 0.0 or np.isfinite(lp.upper[j])]
    if bounds:
        lines.append("Bounds")
        for j in bounds:
            lo = "-inf" if not np.isfinite(lp.lower[j]) else f"{lp.lower[j]:.12g}"
            hi = "+inf" if not np.isfinite(lp.upper[j]) else f"{lp.upper[j]:.12g}"
            lines.append(f" {lo} <= {lp.var_names[j]} <= {hi}")
    if binaries:
        lines.append("Binaries")
        lines.append(" " + " ".join(lp.var_names[j] for j in binaries))
    lines.append("End")
    return "\n".join(lines) + "\n"
