# Nodes/artifact_writer_node.py

import json
import shutil
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd
from agno.utils.log import log_info

from Nodes.node_result import failure, success
from settings import VERSION

FLOAT_FORMAT = "%.17g"


def _backup_existing_file(file_path: Path) -> bool:
    """Keep the previous version as <name>.backup before overwriting."""
    if file_path.exists():
        backup_path = file_path.with_suffix(file_path.suffix + ".backup")
        shutil.copy2(file_path, backup_path)
        log_info(f"Created backup: {backup_path}")
        return True
    return False


def metadata_block(metadata: Dict[str, Any]) -> str:
    return "".join(f"# {key}: {value}\n" for key, value in metadata.items())


def write_csv(frame: pd.DataFrame, file_path: Path, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """CSV with a '# key: value' comment block ahead of the header row."""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    _backup_existing_file(file_path)
    with open(file_path, "w", encoding="utf-8", newline="") as f:
        f.write(metadata_block(metadata or {}))
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return file_path


def write_json(document: Dict[str, Any], file_path: Path) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    _backup_existing_file(file_path)
    with open(file_path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    return file_path


class ArtifactWriterNode:
    """Writes every table and document queued in the shared state to the output directory."""

    def run(self, command: str, shared_state: "SharedState") -> Dict[str, Any]:
        if command.strip().upper() != "WRITE ARTIFACTS":
            return {"status": "error", "error": f"Artifact writer does not support the command: '{command}'", "kind": "config"}
        try:
            config = shared_state.config
            base_metadata = {
                "config_hash": config.config_hash(),
                "seeds": " ".join(str(s) for s in config.seeds),
                "version": VERSION,
                "command": shared_state.command,
            }
            written = []
            for filename, (frame, extra) in sorted(shared_state.pending_tables.items()):
                path = write_csv(frame, shared_state.output_directory / filename, {**base_metadata, **extra})
                written.append(str(path))
            for filename, document in sorted(shared_state.pending_documents.items()):
                path = write_json({**document, "metadata": base_metadata}, shared_state.output_directory / filename)
                written.append(str(path))
            shared_state.pending_tables.clear()
            shared_state.pending_documents.clear()
            log_info(f"Artifact writer wrote {len(written)} files to {shared_state.output_directory}")
            return success(f"Wrote {len(written)} files.", created_files=written)
        except Exception as e:
            return failure(e, "artifact_writer_node")
