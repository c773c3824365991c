# Nodes/sample_reader_node.py

from agno.utils.log import log_info
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np
import pandas as pd

from Nodes.node_result import failure, success
from Spectral.errors import SampleFileError
from Spectral.signal_model import ObservationMask, SampleVector, apply_mask

SAMPLE_COLUMNS = ["ell", "re", "im", "observed"]
TRUE_TOKENS = {"1", "true", "yes"}
FALSE_TOKENS = {"0", "false", "no"}


def read_metadata(file_path: Path) -> Tuple[Dict[str, str], int]:
    """Leading '# key: value' lines and how many of them there are."""
    metadata: Dict[str, str] = {}
    count = 0
    with open(file_path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            count += 1
            key, _, value = line[1:].partition(":")
            if key.strip():
                metadata[key.strip()] = value.strip()
    return metadata, count


def _parse_observed(column: pd.Series, first_line: int) -> np.ndarray:
    tokens = column.astype(str).str.strip().str.lower()
    observed = np.zeros(len(tokens), dtype=bool)
    for i, token in enumerate(tokens):
        if token in TRUE_TOKENS:
            observed[i] = True
        elif token not in FALSE_TOKENS:
            raise SampleFileError(f"Cannot read '{token}' as an observed flag", line=first_line + i, field="observed")
    return observed


def _numeric(frame: pd.DataFrame, column: str, first_line: int) -> np.ndarray:
    # astype(float) parses each token exactly; pd.to_numeric can be off by an ulp
    tokens = frame[column]
    missing = np.flatnonzero(tokens.isna().to_numpy())
    if missing.size:
        raise SampleFileError("Missing value", line=first_line + int(missing[0]), field=column)
    tokens = tokens.str.strip()
    try:
        return tokens.astype(float).to_numpy()
    except ValueError:
        pass
    for i, token in enumerate(tokens):
        try:
            float(token)
        except ValueError:
            raise SampleFileError(f"Cannot read '{token}' as a number", line=first_line + i, field=column) from None
    raise SampleFileError(f"Cannot read column '{column}' as numbers", field=column)


def read_samples(file_path: Path) -> Tuple[SampleVector, ObservationMask, Dict[str, str]]:
    """Parse an 'ell,re,im,observed' sample file into samples and their mask."""
    file_path = Path(file_path)
    if not file_path.exists():
        raise SampleFileError(f"Sample file not found: {file_path}")
    metadata, comment_lines = read_metadata(file_path)
    try:
        frame = pd.read_csv(file_path, comment="#", dtype=str, skip_blank_lines=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SampleFileError(f"Malformed sample file {file_path.name}: {e}") from e

    for column in SAMPLE_COLUMNS:
        if column not in frame.columns:
            raise SampleFileError(f"Missing column '{column}' in {file_path.name}", line=comment_lines + 1, field=column)

    # First data row sits after the comment block and the header
    first_line = comment_lines + 2
    ell = _numeric(frame, "ell", first_line)
    re = _numeric(frame, "re", first_line).astype(float)
    im = _numeric(frame, "im", first_line).astype(float)
    observed = _parse_observed(frame["observed"], first_line)

    if ell.size == 0 or ell.size % 2 == 0:
        raise SampleFileError(f"Expected 2n+1 rows for ell = -n..n, got {ell.size}", field="ell")
    n = (ell.size - 1) // 2
    expected = np.arange(-n, n + 1)
    mismatch = np.flatnonzero(ell != expected)
    if mismatch.size:
        i = int(mismatch[0])
        raise SampleFileError(
            f"ell must run contiguously from {-n} to {n}; found {ell[i]:g} where {expected[i]} was expected",
            line=first_line + i,
            field="ell",
        )

    mask = ObservationMask(n=n, observed=observed, p=float(observed.mean()) or 1.0)
    samples = apply_mask(SampleVector(n=n, values=re + 1j * im), mask)
    return samples, mask, metadata


class SampleReaderNode:
    """Reads a sample file named in the configuration into the shared state."""

    def __init__(self):
        log_info("Initialized SampleReaderNode.")

    def run(self, command: str, shared_state: "SharedState") -> Dict[str, Any]:
        if command.strip().upper() != "READ SAMPLES":
            return {"status": "error", "error": f"Sample reader does not support the command: '{command}'", "kind": "config"}
        input_path = shared_state.config.input
        if not input_path:
            return {"status": "error", "error": "No sample file given; pass the input path to 'recover'.", "kind": "config"}
        try:
            samples, mask, metadata = read_samples(Path(input_path))
        except Exception as e:
            return failure(e, "sample_reader_node")
        shared_state.store_result("samples", samples)
        shared_state.store_result("mask", mask)
        shared_state.store_result("sample_metadata", metadata)
        log_info(f"Read {2 * samples.n + 1} samples (n={samples.n}, {mask.count} observed) from {input_path}")
        return success(f"Read samples from {Path(input_path).name}.")
