# Nodes/kernel_node.py

from agno.utils.log import log_info
from typing import Any, Dict

from Nodes.node_result import failure, success
from Spectral.kernels import certify_envelopes, kernel_table, tail_envelope


class KernelTableNode:
    """Plot-ready kernel values for every configured alpha."""

    def run(self, command: str, shared_state: "SharedState") -> Dict[str, Any]:
        if command.strip().upper() != "EMIT KERNEL TABLE":
            return {"status": "error", "error": f"Kernel table node does not support the command: '{command}'", "kind": "config"}
        config = shared_state.config
        try:
            table = kernel_table(config.alphas, config.n, config.resolution)
            tails = {
                f"tail_alpha{alpha}_at_5_over_n": tail_envelope(alpha, config.n, min(5.0 / config.n, 0.5))
                for alpha in config.alphas
            }
        except Exception as e:
            return failure(e, "kernel_table_node")
        shared_state.store_result("kernel_table", table)
        shared_state.queue_table("kernel_table.csv", table, {"n": config.n, "alphas": " ".join(map(str, config.alphas))})
        shared_state.queue_document("kernel_tails.json", {"n": config.n, **tails})
        log_info(f"Kernel table: {len(table)} points for alphas {config.alphas}")
        return success(f"Kernel table with {len(table)} points.")


class CertifyNode:
    """Numerical check of the concentration envelopes; failures are rows, not errors."""

    def run(self, command: str, shared_state: "SharedState") -> Dict[str, Any]:
        if command.strip().upper() != "CERTIFY ENVELOPES":
            return {"status": "error", "error": f"Certify node does not support the command: '{command}'", "kind": "config"}
        config = shared_state.config
        grid_size = config.grid_size or max(10 * config.n, 10_000)
        try:
            report = certify_envelopes(config.n, grid_size, alpha=config.alpha)
        except Exception as e:
            return failure(e, "certify_node")
        shared_state.store_result("certification", report)
        shared_state.queue_table(
            "certify.csv", report.to_frame(), {"n": config.n, "alpha": config.alpha, "grid_size": grid_size}
        )
        passed = sum(check.passed for check in report.checks)
        return success(f"{passed}/{len(report.checks)} envelopes hold for alpha={config.alpha}, n={config.n}.")
