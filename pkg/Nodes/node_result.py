# Nodes/node_result.py

from typing import Any, Dict

from agno.utils.log import log_info

from Spectral.errors import SuperResolutionError


def success(output: str, **extra: Any) -> Dict[str, Any]:
    return {"status": "success", "output": output, **extra}


def failure(error: BaseException, node: str) -> Dict[str, Any]:
    """Status dictionary for a failed step; the error kind picks the exit code."""
    if isinstance(error, SuperResolutionError):
        kind = error.kind
    elif isinstance(error, OSError):
        kind = "io"
    else:
        kind = "solver"
    log_info(f"{node} failed ({kind}): {error}")
    return {"status": "error", "error": str(error), "kind": kind}
