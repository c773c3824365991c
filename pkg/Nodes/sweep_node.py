# Nodes/sweep_node.py
# Monte-Carlo sweeps over dynamic range and separation. Every cell
# (coordinate, seed, algorithm, alpha) is an independent job.

import time
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from agno.utils.log import log_info
from joblib import Parallel, delayed

from Nodes.node_result import failure, success
from Nodes.recover_node import solver_config
from settings import ExperimentConfig
from Spectral.errors import SolverError
from Spectral.instances import make_instance, staircase_taus
from Spectral.signal_model import match_frequencies
from Spectral.solver import run_algorithm

RECOVERY_TOLERANCE = 1e-4


@dataclass(frozen=True)
class SweepRow:
    sweep: str
    v: float
    coordinate: float
    seed: int
    algorithm: str
    alpha: int
    max_error: float
    recovered: bool
    rounds: int
    wall_time_s: float

    @property
    def label(self) -> str:
        return f"{self.algorithm}-a{self.alpha}"


def run_cell(
    config: ExperimentConfig,
    sweep: str,
    v: float,
    coordinate: float,
    seed: int,
    algorithm: str,
    alpha: int,
) -> SweepRow:
    """Build one instance, run one algorithm on it, score it."""
    if sweep == "dyn":
        preset, u, n_sep = "fig4", coordinate, config.n_sep
    else:
        preset, u, n_sep = f"fig6-v{v:g}", None, coordinate
    exact_count = config.measurements if config.exact_count_mask else None
    taus = staircase_taus(config.n, n_sep, config.s)
    instance = make_instance(
        config.n, taus, preset, seed, p=config.p, u=u, exact_count=exact_count, rng_name=config.rng
    )
    cfg = solver_config(config, config.n, alpha, instance.mask, config.gamma or 0.0, config.max_spikes or config.s)

    start = time.perf_counter()
    try:
        result = run_algorithm(algorithm, instance.samples, cfg)
        omegas, rounds = result.omegas, result.rounds
    except SolverError as e:
        omegas, rounds = np.zeros(0), len(e.trace) if e.trace is not None else 0
    wall_time = time.perf_counter() - start

    max_error = match_frequencies(omegas, instance.spikes).eps if omegas.size else float("inf")
    # An under-complete estimate leaves some truth unmatched
    if omegas.size < instance.spikes.s:
        max_error = float("inf")
    return SweepRow(
        sweep=sweep,
        v=float(v),
        coordinate=float(coordinate),
        seed=int(seed),
        algorithm=algorithm,
        alpha=int(alpha),
        max_error=float(max_error),
        recovered=bool(max_error < RECOVERY_TOLERANCE),
        rounds=int(rounds),
        wall_time_s=float(wall_time),
    )


def sweep_cells(config: ExperimentConfig, sweep: str) -> List[Tuple[float, float, int, str, int]]:
    if sweep == "dyn":
        grid = [(0.0, u) for u in config.u_values]
    else:
        grid = [(v, n_sep) for v in config.v_values for n_sep in config.n_sep_values]
    return [
        (v, coordinate, seed, algorithm, alpha)
        for v, coordinate in grid
        for seed in config.seeds
        for algorithm in config.algorithms
        for alpha in config.alphas
    ]


def run_sweep(config: ExperimentConfig, sweep: str, workers: int = 1) -> List[SweepRow]:
    cells = sweep_cells(config, sweep)
    rows = Parallel(n_jobs=workers)(
        delayed(run_cell)(config, sweep, v, coordinate, seed, algorithm, alpha)
        for v, coordinate, seed, algorithm, alpha in cells
    )
    # Canonical order, independent of completion order
    return sorted(rows, key=lambda r: (r.v, r.coordinate, r.algorithm, r.alpha, r.seed))


def rows_frame(rows: List[SweepRow]) -> pd.DataFrame:
    sweep = rows[0].sweep if rows else "dyn"
    frame = pd.DataFrame([{**asdict(r), "label": r.label} for r in rows])
    if frame.empty:
        return frame
    coordinate = "u" if sweep == "dyn" else "n_sep"
    frame = frame.rename(columns={"coordinate": coordinate})
    columns = ([] if sweep == "dyn" else ["v"]) + [
        coordinate, "seed", "algorithm", "alpha", "label", "max_error", "recovered", "rounds", "wall_time_s"
    ]
    return frame[columns]


def failure_summary(rows: List[SweepRow]) -> pd.DataFrame:
    """Failure probability per (v, coordinate, algorithm, alpha) cell."""
    frame = pd.DataFrame([asdict(r) for r in rows])
    grouped = (
        frame.groupby(["v", "coordinate", "algorithm", "alpha"], sort=True)
        .agg(trials=("recovered", "size"), failures=("recovered", lambda s: int((~s).sum())))
        .reset_index()
    )
    grouped["failure_probability"] = grouped["failures"] / grouped["trials"]
    return grouped


def transition_points(summary: pd.DataFrame) -> pd.DataFrame:
    """Smallest separation per (v, algorithm, alpha) whose cell never failed; inf if none."""
    rows = []
    for (v, algorithm, alpha), group in summary.groupby(["v", "algorithm", "alpha"], sort=True):
        clean = group.loc[group["failure_probability"] == 0.0, "coordinate"]
        rows.append(
            {
                "v": v,
                "algorithm": algorithm,
                "alpha": alpha,
                "transition_n_sep": float(clean.min()) if len(clean) else float("inf"),
            }
        )
    return pd.DataFrame(rows, columns=["v", "algorithm", "alpha", "transition_n_sep"])


def run_sweep_dyn(config: ExperimentConfig, workers: int = 1) -> Tuple[pd.DataFrame, pd.DataFrame]:
    rows = run_sweep(config, "dyn", workers)
    return rows_frame(rows), failure_summary(rows)


def run_sweep_separation(config: ExperimentConfig, workers: int = 1) -> Tuple[pd.DataFrame, pd.DataFrame]:
    rows = run_sweep(config, "sep", workers)
    return rows_frame(rows), failure_summary(rows)


class SweepNode:
    """Runs a dynamic-range or separation sweep and queues its CSVs."""

    def __init__(self, workers: int = 1):
        self.workers = workers

    def run(self, command: str, shared_state: "SharedState") -> Dict[str, Any]:
        command_upper = command.strip().upper()
        config = shared_state.config
        workers = config.workers or self.workers
        try:
            if command_upper == "SWEEP DYNAMIC RANGE":
                rows, summary = run_sweep_dyn(config, workers)
                name = "sweep_dyn"
            elif command_upper == "SWEEP SEPARATION":
                rows, summary = run_sweep_separation(config, workers)
                name = "sweep_sep"
            else:
                return {"status": "error", "error": f"Sweep node does not support the command: '{command}'", "kind": "config"}
        except Exception as e:
            return failure(e, "sweep_node")

        shared_state.store_result("sweep_rows", rows)
        shared_state.queue_table(f"{name}.csv", rows)
        shared_state.queue_table(f"{name}_summary.csv", summary)
        if name == "sweep_sep":
            transitions = transition_points(summary)
            shared_state.store_result("transitions", transitions)
            shared_state.queue_table(f"{name}_transitions.csv", transitions)
        if not bool(rows["recovered"].all()):
            shared_state.recovery_failed = True
        log_info(f"{name}: {len(rows)} cells, {int((~rows['recovered']).sum())} failures")
        return success(f"{name} finished with {len(rows)} cells.")
