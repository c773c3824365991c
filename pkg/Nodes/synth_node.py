# Nodes/synth_node.py

from agno.utils.log import log_info
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from Nodes.node_result import failure, success
from settings import ExperimentConfig
from Spectral.instances import Instance, make_instance, random_instance, staircase_taus
from Spectral.signal_model import SampleVector, ObservationMask


def samples_frame(samples: SampleVector, mask: ObservationMask) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "ell": samples.ell,
            "re": samples.values.real,
            "im": samples.values.imag,
            "observed": mask.observed.astype(int),
        }
    )


def truth_frame(instance: Instance) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "tau": instance.spikes.taus,
            "re": instance.spikes.amps.real,
            "im": instance.spikes.amps.imag,
            "magnitude": np.abs(instance.spikes.amps),
        }
    )


def build_instance(config: ExperimentConfig, seed: int) -> Instance:
    exact_count = config.measurements if config.exact_count_mask else None
    if config.placement == "random":
        return random_instance(config.n, config.s, config.n_sep, seed, dyn=config.dyn, p=config.p, rng_name=config.rng)
    taus = staircase_taus(config.n, config.n_sep, config.s)
    return make_instance(
        config.n, taus, config.amplitudes, seed,
        p=config.p, u=config.u, dyn=config.dyn, exact_count=exact_count, rng_name=config.rng,
    )


class SynthNode:
    """Synthesizes one sample file (and its ground truth) per seed."""

    def run(self, command: str, shared_state: "SharedState") -> Dict[str, Any]:
        if command.strip().upper() != "SYNTHESIZE INSTANCES":
            return {"status": "error", "error": f"Synth node does not support the command: '{command}'", "kind": "config"}
        config = shared_state.config
        try:
            instances: List[Instance] = [build_instance(config, seed) for seed in config.seeds]
        except Exception as e:
            return failure(e, "synth_node")

        single = len(instances) == 1
        for instance in instances:
            suffix = "" if single else f"_seed{instance.seed}"
            meta = {"seed": instance.seed, "n": config.n, "s": instance.spikes.s}
            shared_state.queue_table(f"samples{suffix}.csv", samples_frame(instance.samples, instance.mask), meta)
            shared_state.queue_table(f"truth{suffix}.csv", truth_frame(instance), meta)
        shared_state.store_result("instances", instances)
        log_info(f"Synthesized {len(instances)} instance(s) with n={config.n}, preset={config.amplitudes}")
        return success(f"Synthesized {len(instances)} instance(s).")
