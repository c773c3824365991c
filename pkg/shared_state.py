# shared_state.py

from typing import Dict, Any, List, Optional
from pathlib import Path

from settings import ExperimentConfig

EXIT_OK = 0
EXIT_RECOVERY_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3

EXIT_CODES = {
    "solver": EXIT_RECOVERY_FAILURE,
    "config": EXIT_CONFIG_ERROR,
    "io": EXIT_IO_ERROR,
}


class SharedState:
    def __init__(self, config: ExperimentConfig, command: str):
        self.config: ExperimentConfig = config
        self.command: str = command
        self.current_plan: List[Dict[str, Any]] = []
        self.output_directory: Path = Path(config.out)
        self.created_files: List[str] = []
        self.results: Dict[str, Any] = {}
        # Tables and JSON documents waiting for the artifact writer
        self.pending_tables: Dict[str, Any] = {}
        self.pending_documents: Dict[str, Dict[str, Any]] = {}
        self.last_execution_output: Optional[str] = None
        self.last_execution_error: Optional[str] = None
        self.error_kind: Optional[str] = None
        self.recovery_failed: bool = False
        self.current_status: str = "planning"
        self.history: List[str] = []

    def update_status(self, new_status: str):
        self.current_status = new_status
        self.add_to_history(f"Status changed to: {new_status}")

    def update_plan(self, plan: List[Dict[str, Any]]):
        self.current_plan = plan
        self.add_to_history(f"Execution plan has {len(plan)} steps.")

    def add_created_file(self, file_path: str):
        if file_path not in self.created_files:
            self.created_files.append(file_path)
            self.add_to_history(f"File written: {file_path}")

    def store_result(self, key: str, value: Any):
        self.results[key] = value
        self.add_to_history(f"Result stored: {key}")

    def get_result(self, key: str) -> Any:
        if key not in self.results:
            raise KeyError(f"No '{key}' result in shared state; an earlier step did not run.")
        return self.results[key]

    def queue_table(self, filename: str, frame, metadata: Optional[Dict[str, Any]] = None):
        self.pending_tables[filename] = (frame, metadata or {})

    def queue_document(self, filename: str, document: Dict[str, Any]):
        self.pending_documents[filename] = document

    def log_execution_output(self, output: Optional[str], error: Optional[str] = None, kind: Optional[str] = None):
        self.last_execution_output = output
        self.last_execution_error = error
        if error:
            self.error_kind = kind or "solver"
            self.update_status("failed")
            self.add_to_history(f"Step failed ({self.error_kind}): {error}")
        else:
            self.add_to_history(f"Step succeeded. Output: {output[:100] if output else 'No output.'}")

    def add_to_history(self, message: str):
        self.history.append(message)

    @property
    def exit_code(self) -> int:
        if self.current_status == "failed":
            return EXIT_CODES.get(self.error_kind or "solver", EXIT_RECOVERY_FAILURE)
        if self.recovery_failed and self.config.strict:
            return EXIT_RECOVERY_FAILURE
        return EXIT_OK

    def get_full_context(self) -> Dict[str, Any]:
        """The run as a JSON-ready dictionary."""
        return {
            "mode": self.config.mode,
            "command": self.command,
            "config_hash": self.config.config_hash(),
            "current_plan": self.current_plan,
            "output_directory": str(self.output_directory),
            "created_files": self.created_files,
            "result_keys": sorted(self.results.keys()),
            "last_execution_output": self.last_execution_output,
            "last_execution_error": self.last_execution_error,
            "error_kind": self.error_kind,
            "recovery_failed": self.recovery_failed,
            "current_status": self.current_status,
            "exit_code": self.exit_code,
            "history": self.history,
        }
