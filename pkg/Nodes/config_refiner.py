# Nodes/config_refiner.py

from typing import List, Optional

from agno.utils.log import log_debug

from settings import ExperimentConfig, validate_config
from Spectral.instances import default_n_grid, reference_p
from Spectral.solver import gamma_from_floor


class ConfigRefiner:
    """Fills derived defaults so every node sees a complete configuration."""

    def refine(self, config: ExperimentConfig, seed: Optional[int] = None, seed_count: Optional[int] = None) -> ExperimentConfig:
        data = config.model_dump()

        data["seeds"] = self._expand_seeds(config.seeds, seed, seed_count)

        if config.p is None:
            data["p"] = reference_p(config.n, config.measurements) if config.measurements else 1.0

        if config.n_grid is None and config.mode != "recover":
            # recover scales the grid from the sample file instead
            data["n_grid"] = default_n_grid(config.n)

        if config.gamma is None and config.amplitude_floor is not None:
            data["gamma"] = gamma_from_floor(config.amplitude_floor)

        if config.mode in ("sweep-dyn", "sweep-sep") and config.max_spikes is None:
            # Sweeps run with the oracle sparsity
            data["max_spikes"] = config.s

        if config.mode == "certify" and config.grid_size is None:
            data["grid_size"] = max(10 * config.n, 10_000)

        refined = validate_config(data)
        log_debug(f"Refined config {refined.config_hash()}: p={refined.p}, n_grid={refined.n_grid}, gamma={refined.gamma}")
        return refined

    def _expand_seeds(self, seeds: List[int], seed: Optional[int], seed_count: Optional[int]) -> List[int]:
        base = seeds[0] if seed is None else seed
        if seed_count is not None:
            return list(range(base, base + seed_count))
        if seed is not None:
            return [seed]
        return list(seeds)
