# Nodes/oracle_node.py

from agno.utils.log import log_info
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from Nodes.node_result import failure, success
from Nodes.recover_node import solver_config
from Spectral.oracle import adversarial_instance, concentration_probe
from Spectral.signal_model import circular_distance, synthesize
from Spectral.solver import run_algorithm

# Plain pursuit on the raw Dirichlet dictionary against the preconditioned sliding variant
ADVERSARIAL_RUNS: List[Tuple[str, int]] = [("omp", 1), ("sliding_omp", 4)]


def nearest_errors(estimates: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """Distance from every true frequency to its closest estimate."""
    if estimates.size == 0:
        return np.full(taus.size, np.inf)
    return circular_distance(taus[:, None], estimates[None, :]).min(axis=1)


class AdversarialNode:
    """Builds the three-spike trap instance and runs both pursuits on it."""

    def run(self, command: str, shared_state: "SharedState") -> Dict[str, Any]:
        if command.strip().upper() != "RUN ADVERSARIAL INSTANCE":
            return {"status": "error", "error": f"Adversarial node does not support the command: '{command}'", "kind": "config"}
        config = shared_state.config
        try:
            instance = adversarial_instance(config.c, config.L, config.n, c0=config.c0)
            samples = synthesize(instance.spikes, config.n)
            rows = []
            summary: Dict[str, Any] = {
                "n": config.n,
                "c": config.c,
                "L": instance.L,
                "c0": instance.c0,
                "ell1": instance.ell1,
                "failure_bound": instance.failure_bound,
                "localization_cell": 1.0 / (2 * config.n + 4),
                "taus": [float(t) for t in instance.spikes.taus],
                "runs": {},
            }
            for algorithm, alpha in ADVERSARIAL_RUNS:
                cfg = solver_config(config, config.n, alpha, None, 0.0, max_spikes=instance.spikes.s)
                result = run_algorithm(algorithm, samples, cfg)
                errors = nearest_errors(result.omegas, instance.spikes.taus)
                for index, (tau, error) in enumerate(zip(instance.spikes.taus, errors)):
                    rows.append(
                        {
                            "algorithm": algorithm,
                            "alpha": alpha,
                            "tau_index": index + 1,
                            "tau": tau,
                            "magnitude": float(np.abs(instance.spikes.amps[index])),
                            "error": error,
                            "outside_cell": bool(error > summary["localization_cell"]),
                        }
                    )
                summary["runs"][f"{algorithm}-a{alpha}"] = {
                    "omegas": [float(w) for w in np.sort(result.omegas)],
                    "weakest_spike_error": float(errors[2]),
                    "stopped_reason": result.stopped_reason,
                }
        except Exception as e:
            return failure(e, "adversarial_node")

        frame = pd.DataFrame(rows)
        shared_state.store_result("adversarial", summary)
        shared_state.queue_table("adversarial.csv", frame, {"n": config.n, "c": config.c, "L": instance.L})
        shared_state.queue_document("adversarial.json", summary)
        log_info(f"Adversarial instance n={config.n}: weakest-spike errors "
                 f"{ {k: v['weakest_spike_error'] for k, v in summary['runs'].items()} }")
        return success("Adversarial instance evaluated.")


class ConcentrationProbeNode:
    """Monte-Carlo deviation of the subsampled kernel from its mean."""

    def __init__(self, workers: int = 1):
        self.workers = workers

    def run(self, command: str, shared_state: "SharedState") -> Dict[str, Any]:
        if command.strip().upper() != "PROBE CONCENTRATION":
            return {"status": "error", "error": f"Concentration node does not support the command: '{command}'", "kind": "config"}
        config = shared_state.config
        try:
            report = concentration_probe(
                config.n, config.p, config.trials, config.seeds[0],
                alpha=config.alpha, workers=config.workers or self.workers,
            )
        except Exception as e:
            return failure(e, "concentration_node")
        frame = report.to_frame()
        shared_state.store_result("concentration", report)
        shared_state.queue_table("concentration.csv", frame, {"n": config.n, "p": config.p, "trials": config.trials})
        shared_state.queue_document(
            "concentration.json",
            {
                "n": config.n,
                "p": config.p,
                "trials": config.trials,
                "median_deviation": {int(q): report.median_deviation(int(q)) for q in sorted(frame["q"].unique())},
                "max_ratio": {int(q): report.max_ratio(int(q)) for q in sorted(frame["q"].unique())},
            },
        )
        return success(f"Concentration probe finished ({config.trials} trials).")
