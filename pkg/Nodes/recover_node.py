# Nodes/recover_node.py

from agno.utils.log import log_info
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from Nodes.node_result import failure, success
from settings import ExperimentConfig
from Spectral.errors import ConfigError
from Spectral.instances import default_n_grid
from Spectral.kernels import build_sigma
from Spectral.signal_model import ObservationMask
from Spectral.solver import RecoveryResult, SolverConfig, run_algorithm


def solver_config(
    config: ExperimentConfig,
    n: int,
    alpha: int,
    mask: Optional[ObservationMask],
    gamma: float,
    max_spikes: Optional[int] = None,
) -> SolverConfig:
    n_grid = config.n_grid if config.n_grid is not None and config.n_grid >= 2 * n + 1 else default_n_grid(n)
    return SolverConfig(
        pc=build_sigma(alpha, n),
        gamma=gamma,
        n_grid=n_grid,
        eta0=config.eta0,
        t_slide=config.t_slide,
        max_spikes=max_spikes if max_spikes is not None else config.max_spikes,
        cond_limit=config.cond_limit,
        mask=mask,
    )


def estimates_frame(result: RecoveryResult) -> pd.DataFrame:
    order = np.argsort(result.omegas, kind="stable")
    return pd.DataFrame(
        {
            "omega": result.omegas[order],
            "re": result.coeffs[order].real,
            "im": result.coeffs[order].imag,
            "magnitude": np.abs(result.coeffs[order]),
        }
    )


def trace_frame(result: RecoveryResult) -> pd.DataFrame:
    rows = []
    for record in result.trace.rounds:
        rows.append(
            {
                "round": record.round,
                "grid_omega": np.nan if record.grid_omega is None else record.grid_omega,
                "correlation": record.correlation,
                "residual_norm": record.residual_norm,
                "slide_steps": record.slide_steps,
                "slide_status": record.slide_status,
                "pre_slide_omegas": ";".join(f"{w:.17g}" for w in record.pre_slide_omegas),
                "omegas": ";".join(f"{w:.17g}" for w in record.omegas),
            }
        )
    columns = ["round", "grid_omega", "correlation", "residual_norm", "slide_steps", "slide_status",
               "pre_slide_omegas", "omegas"]
    return pd.DataFrame(rows, columns=columns)


def recovery_summary(result: RecoveryResult, cfg: SolverConfig) -> Dict[str, Any]:
    return {
        "algorithm": result.algorithm,
        "alpha": cfg.pc.alpha,
        "n": cfg.pc.n,
        "n_grid": cfg.n_grid,
        "gamma": cfg.gamma,
        "rounds": result.rounds,
        "stopped_reason": result.stopped_reason,
        "residual_norm": result.residual.norm(),
        "omegas": [float(w) for w in np.sort(result.omegas)],
    }


class RecoverNode:
    """Runs the configured pursuit on samples loaded into the shared state."""

    def run(self, command: str, shared_state: "SharedState") -> Dict[str, Any]:
        if command.strip().upper() != "RECOVER FREQUENCIES":
            return {"status": "error", "error": f"Recover node does not support the command: '{command}'", "kind": "config"}
        config = shared_state.config
        try:
            if config.gamma is None:
                raise ConfigError("recover needs a stopping threshold: pass --gamma or --amplitude-floor.")
            samples = shared_state.get_result("samples")
            mask = shared_state.get_result("mask")
            cfg = solver_config(config, samples.n, config.alpha, mask, config.gamma)
            result = run_algorithm(config.algorithm, samples, cfg)
        except Exception as e:
            return failure(e, "recover_node")

        shared_state.store_result("recovery", result)
        shared_state.queue_table("estimates.csv", estimates_frame(result), {"algorithm": result.algorithm})
        shared_state.queue_table("trace.csv", trace_frame(result), {"algorithm": result.algorithm})
        shared_state.queue_document("summary.json", recovery_summary(result, cfg))
        if result.stopped_reason != "threshold":
            shared_state.recovery_failed = True
        log_info(f"Recovered {result.omegas.size} frequencies with {result.algorithm} ({result.stopped_reason}).")
        return success(f"{result.algorithm} found {result.omegas.size} frequencies, stopped on {result.stopped_reason}.")
