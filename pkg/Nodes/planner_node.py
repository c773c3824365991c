# Nodes/planner_node.py

from agno.utils.log import log_info
from typing import List, Dict, Any

WRITE_STEP = {"node": "artifact_writer_node", "description": "WRITE ARTIFACTS"}

PLANS: Dict[str, List[Dict[str, str]]] = {
    "synth": [
        {"node": "synth_node", "description": "SYNTHESIZE INSTANCES"},
        WRITE_STEP,
    ],
    "recover": [
        {"node": "sample_reader_node", "description": "READ SAMPLES"},
        {"node": "recover_node", "description": "RECOVER FREQUENCIES"},
        WRITE_STEP,
    ],
    "sweep-dyn": [
        {"node": "sweep_node", "description": "SWEEP DYNAMIC RANGE"},
        WRITE_STEP,
    ],
    "sweep-sep": [
        {"node": "sweep_node", "description": "SWEEP SEPARATION"},
        WRITE_STEP,
    ],
    "kernel-table": [
        {"node": "kernel_table_node", "description": "EMIT KERNEL TABLE"},
        WRITE_STEP,
    ],
    "certify": [
        {"node": "certify_node", "description": "CERTIFY ENVELOPES"},
        WRITE_STEP,
    ],
    "adversarial": [
        {"node": "adversarial_node", "description": "RUN ADVERSARIAL INSTANCE"},
        WRITE_STEP,
    ],
    "probe-concentration": [
        {"node": "concentration_node", "description": "PROBE CONCENTRATION"},
        WRITE_STEP,
    ],
}


class PlannerNode:
    """Turns a run mode into the ordered list of node steps that carry it out."""

    def plan(self, current_state: Dict[str, Any]) -> List[Dict[str, str]]:
        mode = current_state.get("mode")
        steps = PLANS.get(mode)
        if not steps:
            log_info(f"Planner has no plan for mode '{mode}'.")
            return []
        log_info(f"Planner created a {len(steps)}-step plan for '{mode}'.")
        return [dict(step) for step in steps]
