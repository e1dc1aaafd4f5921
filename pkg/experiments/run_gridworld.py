"""
run_gridworld.py

Grid-world experiment: solves the shipped 10x10 layout with the
approximate synthesis, its undiscounted variant and the
discounted-reachability baseline, then compares the most likely
trajectories by risk class.
Logs parameters, metrics and a trajectory figure to MLflow.
"""

import sys
import datetime
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import mlflow
import numpy as np
import seaborn as sns


# ─────────────────────────────────────────────
# Step 1: Set Configurable Run Parameters
# ─────────────────────────────────────────────

# --- MLflow experiment tracking ---
experiment_name = "Grid World Synthesis"
base_run_name = "gridworld_approx"
timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
run_name = f"{base_run_name}_{timestamp}"

mlflow_tags = {
    "benchmark": "gridworld",
    "layout_version": "v1",
    "stage": "approximation_comparison",
}

big_m_factor = 100


# ─────────────────────────────────────────────
# Step 2: Configure Python Path for Imports
# ─────────────────────────────────────────────
try:
    project_root = Path(__file__).resolve().parent.parent
except NameError:
    project_root = Path().resolve()

if str(project_root) not in sys.path:
    sys.path.append(str(project_root))

from src.config import DEFAULT_LAYOUT_FILE, MLRUNS_DIR, REPORTS_DIR
from src.deterministic_approx import synth_approx, synth_discounted_baseline
from src.gridworld import GridSpec, generate_grid, load_layout, most_likely_path, risk_visits
from src.logger import get_logger
from src.mdp_document import save_report

logger = get_logger(__name__)


# ─────────────────────────────────────────────
# Step 3: Define Output Paths
# ─────────────────────────────────────────────
figure_file = REPORTS_DIR / "gridworld_paths.png"
REPORTS_DIR.mkdir(parents=True, exist_ok=True)


def plot_paths(spec: GridSpec, mdp, paths: dict, path_file: Path) -> None:
    """Risk heatmap with one most-likely trajectory per method."""
    grid = np.full((spec.height, spec.width), np.nan)
    for r, c in spec.free_cells():
        grid[r, c] = spec.risk_costs[spec.risk_class((r, c))]
    grid[tuple(spec.target)] = 0.0

    fig, ax = plt.subplots(figsize=(7, 7))
    sns.heatmap(grid, ax=ax, cmap="Reds", cbar_kws={"label": "risk cost"}, linewidths=0.5,
                linecolor="lightgray", square=True, mask=np.isnan(grid))
    offsets = np.linspace(-0.15, 0.15, len(paths))
    for (method, path), offset in zip(paths.items(), offsets):
        cells = [tuple(int(v) for v in mdp.state_names[s][1:].split("c")) for s in path]
        rows = [r + 0.5 + offset for r, _ in cells]
        cols = [c + 0.5 + offset for _, c in cells]
        ax.plot(cols, rows, marker="o", markersize=3, linewidth=2, label=method)
    ax.set_title("Most likely trajectories")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path_file, dpi=150)
    plt.close(fig)


# ─────────────────────────────────────────────
# Step 4: Run the Experiment
# ─────────────────────────────────────────────
def run_experiment(layout_file: Path = DEFAULT_LAYOUT_FILE):
    """
    Runs the three syntheses on the layout and logs the comparison to MLflow.

    Behavior:
        - Logs layout parameters and run tags.
        - Logs reach, J, surrogate values and risk-class visit counts per method.
        - Logs the trajectory figure and the report documents as artifacts.
    """
    spec = load_layout(layout_file)
    mdp = generate_grid(spec)

    mlflow.set_tracking_uri(f"file:///{MLRUNS_DIR.as_posix()}")
    mlflow.set_experiment(experiment_name)
    with mlflow.start_run(run_name=run_name):
        logger.info(f"Starting run: {run_name}")

        # ─────────────────────────────────────────────
        # Step 4.1: Set MLflow Tags and Parameters
        # ─────────────────────────────────────────────
        for k, v in mlflow_tags.items():
            mlflow.set_tag(k, v)
        mlflow.log_params({
            "width": spec.width,
            "height": spec.height,
            "obstacles": len(spec.obstacles),
            "success_prob": spec.success_prob,
            "discount": spec.discount,
            "big_m_factor": big_m_factor,
        })

        # ─────────────────────────────────────────────
        # Step 4.2: Synthesize
        # ─────────────────────────────────────────────
        reports = {
            "approx": synth_approx(mdp, k=big_m_factor),
            "undiscounted": synth_approx(mdp, k=big_m_factor, undiscounted=True),
            "baseline": synth_discounted_baseline(mdp),
        }

        # ─────────────────────────────────────────────
        # Step 4.3: Log Metrics
        # ─────────────────────────────────────────────
        paths = {}
        for method, report in reports.items():
            path = most_likely_path(mdp, report.policy)
            paths[method] = path
            visits = risk_visits(spec, mdp, path)
            metrics = {
                f"{method}_reach": report.reach,
                f"{method}_J": report.cost,
                f"{method}_path_length": len(path),
                f"{method}_high_visits": visits["high"],
                f"{method}_moderate_visits": visits["moderate"],
                f"{method}_low_visits": visits["low"],
            }
            if report.surrogate is not None and np.isfinite(report.surrogate):
                metrics[f"{method}_surrogate"] = report.surrogate
            mlflow.log_metrics(metrics)
            logger.info(f"{method}: reach={report.reach:.6f} J={report.cost:.4f} visits={visits}")

            report_file = REPORTS_DIR / f"gridworld_{method}.json"
            save_report(mdp, report, report_file)
            mlflow.log_artifact(str(report_file))

        approx_cert = reports["approx"].bounds
        mlflow.log_metrics({
            "lower_bound": approx_cert["lower_bound"],
            "linear_gap_bound": approx_cert["linear_gap_bound"],
        })

        # ─────────────────────────────────────────────
        # Step 4.4: Log the Figure
        # ─────────────────────────────────────────────
        plot_paths(spec, mdp, paths, figure_file)
        mlflow.log_artifact(str(figure_file))
        logger.info("Trajectory figure logged to MLflow.")
        return reports


# ─────────────────────────────────────────────
# Step 5: Main
# ─────────────────────────────────────────────
def main():
    """Runs the grid-world experiment on the default layout."""
    logger.info("Running grid-world experiment...")
    try:
        run_experiment()
        logger.info("Grid-world experiment completed.")
    except Exception as e:
        logger.error(f"Grid-world experiment failed: {e}", exc_info=True)


if __name__ == "__main__":
    main()
