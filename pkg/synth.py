"""
synth.py

Command-line entry point for policy synthesis on MDP documents.

Subcommands:
- validate, reach, cleanup: inspect an MDP
- synth-eps, check-exists, synth-exact, synth-approx: synthesis methods
- simulate: Monte-Carlo check of a policy
- oracle: exhaustive deterministic policy search
- gridworld: generate and solve the grid-world benchmark
- compare: eps / exact / approx side by side

Every command prints a table to standard output; --out writes the
structured document, --csv the tabular dump. Exit status is 1 on invalid
input or synthesis failure.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import pandas as pd

from src.config import DEFAULT_BIG_M_FACTOR, DEFAULT_LAYOUT_FILE, MILP_TIME_LIMIT, SIM_DEFAULT_TOL
from src.deterministic_approx import synth_approx, synth_discounted_baseline
from src.deterministic_exact import solve_exact
from src.epsilon_synthesis import synth_eps_optimal
from src.errors import DocumentError, SynthesisError
from src.existence import check_existence
from src.gridworld import generate_grid, load_layout, most_likely_path, risk_visits
from src.logger import get_logger, set_verbosity
from src.mdp_document import (
    existence_document,
    load_mdp,
    load_policy,
    parse_mdp,
    report_document,
    save_mdp,
    save_report,
    serialize_mdp,
)
from src.oracle import brute_force_oracle
from src.reachability import cleanup, max_reach, reach_prob
from src.discount_core import evaluate_cost
from src.report import comparison_frame, policy_frame
from src.simulate import simulate, trajectory_frame


logger = get_logger(__name__)


def _show(df: pd.DataFrame) -> None:
    print(df.to_string(index=False))


def _write_csv(df: pd.DataFrame, path) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False)
        logger.info(f"CSV written to {path}")


def _report_table(mdp, report) -> pd.DataFrame:
    frame = comparison_frame([report])
    print(f"method: {report.method}")
    _show(frame)
    for key, value in report.bounds.items():
        print(f"  {key}: {value}")
    for message in report.diagnostics:
        print(f"  note: {message}")
    return frame


# ─────────────────────────────────────────────
# Commands
# ─────────────────────────────────────────────
def cmd_validate(args) -> int:
    try:
        mdp = parse_mdp(Path(args.mdp).read_text(encoding="utf-8"))
    except DocumentError as e:
        print("invalid:")
        for message in e.diagnostics:
            print(f"  - {message}")
        return 1
    print(f"valid: {mdp.n_states} states, {mdp.n_actions} actions, "
          f"{int(mdp.enabled.sum())} state-action pairs, discount {mdp.discount}")
    return 0


def cmd_reach(args) -> int:
    mdp = load_mdp(args.mdp)
    ra = max_reach(mdp)
    part = ra.partition
    rows = []
    for s in range(mdp.n_states):
        group = "B" if s in part.targets else "S0" if s in part.zero else "Sr"
        rows.append({
            "state": mdp.state_names[s],
            "group": group,
            "x": float(ra.x[s]),
            "tmin": float(part.tmin[s]),
            "amax": " ".join(mdp.action_names[a] for a in range(mdp.n_actions) if ra.amax[s, a]),
        })
    frame = pd.DataFrame(rows)
    _show(frame)
    _write_csv(frame, args.csv)
    return 0


def cmd_cleanup(args) -> int:
    mdp = load_mdp(args.mdp)
    cleaned = cleanup(mdp, max_reach(mdp))
    removed = int(mdp.enabled.sum() - cleaned.enabled.sum())
    if args.out:
        save_mdp(cleaned, args.out)
    else:
        print(serialize_mdp(cleaned))
    print(f"removed {removed} state-action pairs", file=sys.stderr)
    return 0


def _finish_report(mdp, report, args) -> int:
    _report_table(mdp, report)
    if args.out:
        save_report(mdp, report, args.out)
    _write_csv(policy_frame(mdp, report.policy), args.csv)
    return 0


def cmd_synth_eps(args) -> int:
    mdp = load_mdp(args.mdp)
    return _finish_report(mdp, synth_eps_optimal(mdp, args.eps, backend=args.backend), args)


def cmd_check_exists(args) -> int:
    mdp = load_mdp(args.mdp)
    cert = check_existence(mdp, backend=args.backend)
    print(cert.summary())
    if cert.report is not None:
        _report_table(mdp, cert.report)
        _write_csv(policy_frame(mdp, cert.witness), args.csv)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(existence_document(mdp, cert).model_dump_json(indent=2), encoding="utf-8")
    return 0


def cmd_synth_exact(args) -> int:
    mdp = load_mdp(args.mdp)
    report = solve_exact(mdp, k=args.k, time_limit=args.time_limit, big_m_value=args.big_m, dump_path=args.dump_lp)
    return _finish_report(mdp, report, args)


def cmd_synth_approx(args) -> int:
    mdp = load_mdp(args.mdp)
    report = synth_approx(mdp, k=args.k, zero_out=args.zero_out, undiscounted=args.undiscounted)
    return _finish_report(mdp, report, args)


def cmd_simulate(args) -> int:
    mdp = load_mdp(args.mdp)
    if args.policy:
        pol = load_policy(mdp, args.policy)
    else:
        logger.info(f"No policy file given; simulating the eps-optimal policy (eps={args.eps:g})")
        pol = synth_eps_optimal(mdp, args.eps).policy
    result = simulate(mdp, pol, episodes=args.episodes, horizon=args.horizon, seed=args.seed,
                      n_jobs=args.jobs, tol=args.tol)
    exact_reach, exact_cost = reach_prob(mdp, pol), evaluate_cost(mdp, pol)
    frame = pd.DataFrame([
        {"quantity": "reach", "estimate": result.reach, "stderr": result.reach_se, "exact": exact_reach},
        {"quantity": "cost", "estimate": result.cost, "stderr": result.cost_se, "exact": exact_cost},
    ])
    _show(frame)
    print(f"episodes {result.episodes}, horizon {result.horizon}, tail bound {result.tail_bound:.3e}, "
          f"within 3 sigma: {result.within(exact_reach, exact_cost)}")
    if args.out:
        Path(args.out).write_text(json.dumps(result.__dict__, indent=2), encoding="utf-8")
    _write_csv(trajectory_frame(mdp, pol, episodes=10, horizon=result.horizon, seed=args.seed), args.csv)
    return 0


def cmd_oracle(args) -> int:
    mdp = load_mdp(args.mdp)
    result = brute_force_oracle(mdp)
    best = ",".join(f"{mdp.state_names[s]}:{mdp.action_names[a]}" for s, a in enumerate(result.policy.choices()))
    print(f"best deterministic policy: {best}")
    print(f"J = {result.cost:.9g}, x(s1) = {result.max_reach:.9g}")
    _show(result.table)
    _write_csv(result.table, args.csv)
    return 0


def cmd_gridworld(args) -> int:
    spec = load_layout(args.layout)
    mdp = generate_grid(spec)
    if args.out:
        save_mdp(mdp, args.out)

    reports = [
        synth_approx(mdp, k=args.k),
        synth_approx(mdp, k=args.k, undiscounted=True),
        synth_discounted_baseline(mdp),
    ]
    frame = comparison_frame(reports)
    visits = [risk_visits(spec, mdp, most_likely_path(mdp, r.policy)) for r in reports]
    frame["high_visits"] = [v["high"] for v in visits]
    frame["moderate_visits"] = [v["moderate"] for v in visits]
    frame["low_visits"] = [v["low"] for v in visits]
    _show(frame)
    _write_csv(frame, args.csv)
    return 0


def cmd_compare(args) -> int:
    mdp = load_mdp(args.mdp)
    reports = [
        synth_eps_optimal(mdp, args.eps, backend=args.backend),
        solve_exact(mdp, k=args.k, time_limit=args.time_limit),
        synth_approx(mdp, k=args.k, zero_out=args.zero_out),
    ]
    frame = comparison_frame(reports)
    _show(frame)
    _write_csv(frame, args.csv)
    if args.out:
        docs = [report_document(mdp, r).model_dump() for r in reports]
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps(docs, indent=2), encoding="utf-8")
    return 0


# ─────────────────────────────────────────────
# Argument parsing
# ─────────────────────────────────────────────
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synth", description="Reachability-constrained discounted-cost policy synthesis")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, handler, help_text, needs_mdp=True):
        p = sub.add_parser(name, help=help_text)
        if needs_mdp:
            p.add_argument("mdp", type=Path, help="MDP document (JSON)")
        p.add_argument("--out", type=Path, help="structured output file")
        p.add_argument("--csv", type=Path, help="tabular dump")
        p.set_defaults(handler=handler)
        return p

    command("validate", cmd_validate, "check an MDP document")
    command("reach", cmd_reach, "max reach probabilities and A_max")
    command("cleanup", cmd_cleanup, "write the cleaned-up MDP")

    p = command("synth-eps", cmd_synth_eps, "eps-optimal stationary policy")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--backend", choices=["vi", "lp"], default="vi")

    p = command("check-exists", cmd_check_exists, "decide whether an optimal policy exists")
    p.add_argument("--backend", choices=["vi", "lp"], default="vi")

    p = command("synth-exact", cmd_synth_exact, "optimal deterministic policy by MILP")
    p.add_argument("--k", type=int, default=DEFAULT_BIG_M_FACTOR)
    p.add_argument("--time-limit", type=float, default=MILP_TIME_LIMIT)
    p.add_argument("--big-m", type=float, default=None)
    p.add_argument("--dump-lp", type=Path, default=None)

    p = command("synth-approx", cmd_synth_approx, "LP approximation with suboptimality bounds")
    p.add_argument("--k", type=int, default=DEFAULT_BIG_M_FACTOR)
    p.add_argument("--zero-out", action="store_true", help="zero costs on targets and zero-reach states")
    p.add_argument("--undiscounted", action="store_true", help="use c instead of the modified cost")

    p = command("simulate", cmd_simulate, "Monte-Carlo estimates for a policy")
    p.add_argument("--policy", type=Path, default=None)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--episodes", type=int, default=100_000)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--tol", type=float, default=SIM_DEFAULT_TOL)

    command("oracle", cmd_oracle, "enumerate deterministic policies")

    p = command("gridworld", cmd_gridworld, "grid-world benchmark", needs_mdp=False)
    p.add_argument("--layout", type=Path, default=DEFAULT_LAYOUT_FILE)
    p.add_argument("--k", type=int, default=DEFAULT_BIG_M_FACTOR)

    p = command("compare", cmd_compare, "eps / exact / approx side by side")
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--k", type=int, default=DEFAULT_BIG_M_FACTOR)
    p.add_argument("--time-limit", type=float, default=MILP_TIME_LIMIT)
    p.add_argument("--backend", choices=["vi", "lp"], default="vi")
    p.add_argument("--zero-out", action="store_true")

    return parser


def main(argv=None) -> int:
    """
    Parses the command line and runs one subcommand.

    Returns:
        int: Process exit status
    """
    args = build_parser().parse_args(argv)
    set_verbosity(args.verbose)

    start = time.time()
    logger.info(f"Running '{args.command}'")
    try:
        status = args.handler(args)
    except (SynthesisError, OSError, ValueError) as e:
        logger.error(f"'{args.command}' failed: {e}", exc_info=args.verbose)
        return 1
    logger.info(f"'{args.command}' finished in {time.time() - start:.2f} seconds")
    return status


if __name__ == "__main__":
    sys.exit(main())
