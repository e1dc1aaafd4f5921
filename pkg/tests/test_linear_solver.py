"""
tests/test_linear_solver.py

Tests for the dense simplex and the branch-and-bound MILP solver:
small textbook programs, LP duality on random instances, MILP against
exhaustive enumeration, and the LP text dump.
"""

import itertools

import numpy as np
import pytest

from src.linear_solver import (
    EQ,
    GE,
    LE,
    LinearProgram,
    MixedIntegerProgram,
    dump_lp,
    solve_lp,
    solve_milp,
)


def test_max_single_variable():
    lp = LinearProgram(sense="max")
    x = lp.add_variable("x", cost=1.0)
    lp.add_constraint({x: 1.0}, LE, 3.0)
    sol = solve_lp(lp)
    assert sol.is_optimal
    assert sol.x[x] == pytest.approx(3.0)
    assert sol.objective == pytest.approx(3.0)


def test_min_with_upper_bound_row():
    lp = LinearProgram()
    x = lp.add_variable("x", cost=1.0)
    y = lp.add_variable("y", cost=1.0)
    lp.add_constraint({x: 1.0, y: 1.0}, GE, 2.0)
    lp.add_constraint({x: 1.0}, LE, 0.5)
    sol = solve_lp(lp)
    assert sol.is_optimal
    assert sol.objective == pytest.approx(2.0)
    assert sol.x[x] + sol.x[y] == pytest.approx(2.0)


def test_equality_and_free_variable():
    lp = LinearProgram()
    x = lp.add_variable("x", cost=1.0, lower=-np.inf)
    y = lp.add_variable("y", cost=2.0)
    lp.add_constraint({x: 1.0, y: 1.0}, EQ, 1.0)
    lp.add_constraint({x: 1.0}, GE, -4.0)
    sol = solve_lp(lp)
    assert sol.is_optimal
    assert sol.x[x] == pytest.approx(1.0)
    assert sol.objective == pytest.approx(1.0)


def test_infeasible():
    lp = LinearProgram()
    x = lp.add_variable("x", cost=1.0)
    lp.add_constraint({x: 1.0}, LE, 1.0)
    lp.add_constraint({x: 1.0}, GE, 2.0)
    assert solve_lp(lp).status == "infeasible"


def test_unbounded():
    lp = LinearProgram(sense="max")
    x = lp.add_variable("x", cost=1.0)
    y = lp.add_variable("y")
    lp.add_constraint({x: 1.0, y: -1.0}, LE, 1.0)
    assert solve_lp(lp).status == "unbounded"


def test_crossed_bounds_are_infeasible():
    lp = LinearProgram()
    lp.add_variable("x", cost=1.0, lower=2.0, upper=1.0)
    assert solve_lp(lp).status == "infeasible"


def test_undeclared_variable_rejected():
    lp = LinearProgram()
    with pytest.raises(ValueError):
        lp.add_constraint({3: 1.0}, LE, 1.0)


def _random_feasible_lp(rng):
    """Rows of every relation around a known feasible point, with finite upper bounds."""
    n, m = int(rng.integers(2, 8)), int(rng.integers(1, 7))
    lp = LinearProgram(sense=str(rng.choice(["min", "max"])))
    upper = rng.uniform(5.0, 10.0, n)
    point = rng.uniform(0.0, 1.0, n) * upper
    cols = [lp.add_variable(f"x{j}", cost=float(rng.uniform(-2.0, 2.0)), upper=float(upper[j])) for j in range(n)]
    n_eq = 0
    for i in range(m):
        coeffs = rng.uniform(-1.0, 1.0, n)
        level = float(coeffs @ point)
        # fewer equalities than variables keeps the rows independent
        relation = str(rng.choice([LE, GE, EQ] if n_eq < n - 1 else [LE, GE]))
        n_eq += relation == EQ
        if relation == LE:
            rhs = level + float(rng.uniform(0.0, 1.0))
        elif relation == GE:
            rhs = level - float(rng.uniform(0.0, 1.0))
        else:
            rhs = level
        lp.add_constraint({j: float(coeffs[j]) for j in cols}, relation, rhs, name=f"row{i}")
    return lp


@pytest.mark.parametrize("seed", range(50))
def test_duality_gap_closes(seed):
    lp = _random_feasible_lp(np.random.default_rng(seed))
    sol = solve_lp(lp)
    assert sol.is_optimal
    assert sol.objective == pytest.approx(sol.dual_objective, abs=1e-6)


def test_milp_rounding_forced():
    lp = LinearProgram()
    x = lp.add_variable("x", cost=1.0)
    lp.add_constraint({x: 1.0}, GE, 0.3)
    result = solve_milp(MixedIntegerProgram(lp, [x]))
    assert result.status == "optimal"
    assert result.x[x] == pytest.approx(1.0)


def test_milp_knapsack():
    lp = LinearProgram(sense="max")
    a = lp.add_variable("a", cost=3.0)
    b = lp.add_variable("b", cost=2.0)
    lp.add_constraint({a: 1.0, b: 1.0}, LE, 1.0)
    result = solve_milp(MixedIntegerProgram(lp, [a, b]))
    assert result.status == "optimal"
    assert result.objective == pytest.approx(3.0)


def test_milp_infeasible():
    lp = LinearProgram()
    x = lp.add_variable("x", cost=1.0)
    lp.add_constraint({x: 1.0}, EQ, 0.5)
    assert solve_milp(MixedIntegerProgram(lp, [x])).status == "infeasible"


@pytest.mark.parametrize("seed", range(8))
def test_milp_matches_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(3, 9))
    value = rng.integers(1, 20, n).astype(float)
    weight = rng.integers(1, 10, n).astype(float)
    capacity = float(weight.sum() // 2)

    lp = LinearProgram(sense="max", name="knapsack")
    cols = [lp.add_variable(f"x{j}", cost=value[j]) for j in range(n)]
    lp.add_constraint({j: weight[j] for j in cols}, LE, capacity)
    result = solve_milp(MixedIntegerProgram(lp, cols))

    best = max(
        float(value @ np.array(bits))
        for bits in itertools.product([0, 1], repeat=n)
        if float(weight @ np.array(bits)) <= capacity
    )
    assert result.status == "optimal"
    assert result.objective == pytest.approx(best, abs=1e-6)
    assert np.all(np.isin(np.round(result.x[cols], 9), [0.0, 1.0]))
    assert float(weight @ result.x[cols]) <= capacity + 1e-9


@pytest.mark.parametrize("seed", range(60))
def test_mixed_rows_milp_matches_enumeration(seed):
    rng = np.random.default_rng(500 + seed)
    n = int(rng.integers(2, 13))
    point = rng.integers(0, 2, n).astype(float)
    cost = rng.uniform(-3.0, 3.0, n)

    lp = LinearProgram(sense=str(rng.choice(["min", "max"])), name="mixed")
    cols = [lp.add_variable(f"x{j}", cost=float(cost[j]), upper=1.0) for j in range(n)]
    rows = []
    for i in range(int(rng.integers(1, 5))):
        coeffs = rng.integers(-3, 4, n).astype(float)
        relation = str(rng.choice([LE, GE, EQ]))
        shift = {LE: float(rng.integers(0, 3)), GE: -float(rng.integers(0, 3)), EQ: 0.0}[relation]
        rhs = float(coeffs @ point) + shift
        lp.add_constraint({j: float(coeffs[j]) for j in cols}, relation, rhs, name=f"row{i}")
        rows.append((coeffs, relation, rhs))
    result = solve_milp(MixedIntegerProgram(lp, cols))

    def satisfies(bits):
        for coeffs, relation, rhs in rows:
            level = float(coeffs @ bits)
            if (relation == LE and level > rhs + 1e-9) or (relation == GE and level < rhs - 1e-9) \
                    or (relation == EQ and abs(level - rhs) > 1e-9):
                return False
        return True

    values = [float(cost @ bits) for bits in map(np.array, itertools.product([0.0, 1.0], repeat=n)) if satisfies(bits)]
    best = min(values) if lp.sense == "min" else max(values)
    assert result.status == "optimal"
    assert result.objective == pytest.approx(best, abs=1e-6)
    assert satisfies(np.round(result.x[cols]))


def test_dump_lp_lists_sections():
    lp = LinearProgram(name="tiny")
    x = lp.add_variable("x", cost=1.0)
    y = lp.add_variable("y", cost=-2.0, upper=4.0)
    lp.add_constraint({x: 1.0, y: 1.0}, GE, 1.0, name="cover")
    text = dump_lp(MixedIntegerProgram(lp, [x]))
    assert text.startswith("Minimize")
    assert " obj: 1 x - 2 y" in text
    assert " cover: 1 x + 1 y >= 1" in text
    assert "Bounds" in text and "y <= 4" in text
    assert "Binaries" in text
    assert text.rstrip().endswith("End")
