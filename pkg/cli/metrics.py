"""
CSV metrics files: fixed header, one row per epoch, a trailing ``#`` summary line.

Floats are written with ``repr`` (shortest round-trip form, always a decimal
point, never a thousands separator), so two runs with identical numbers give
identical text.
"""

import csv
import hashlib
import os
from typing import Dict, Iterable, List, Optional, Tuple

from core.exceptions import FormatException
from cli.schemas import MetricsRow

METRICS_HEADER = [
    "epoch",
    "wall_s",
    "train_loss",
    "train_acc",
    "test_acc",
    "residual",
    "objective",
    "phase_w_s",
    "phase_p_s",
    "phase_q_s",
    "phase_u_s",
]
TIMING_COLUMNS = {"wall_s", "phase_w_s", "phase_p_s", "phase_q_s", "phase_u_s"}
SUMMARY_PREFIX = "# summary"


def format_value(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def row_values(row: MetricsRow) -> List[str]:
    data = row.model_dump()
    return [format_value(data[column]) for column in METRICS_HEADER]


def numeric_digest(rows: Iterable[MetricsRow]) -> str:
    """sha256 over every non-timing column, in file order"""
    digest = hashlib.sha256()
    for row in rows:
        data = row.model_dump()
        digest.update(",".join(format_value(data[c]) for c in METRICS_HEADER if c not in TIMING_COLUMNS).encode())
        digest.update(b"\n")
    return digest.hexdigest()[:16]


class MetricsLogger:
    """Writes rows as they arrive and flushes after each one"""

    def __init__(self, path: str):
        self.path = path
        self._handle = None
        self._writer = None
        self._last_epoch = 0

    def __enter__(self) -> "MetricsLogger":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _open(self) -> None:
        folder = os.path.dirname(self.path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        self._handle = open(self.path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self._writer.writerow(METRICS_HEADER)

    def log(self, row: MetricsRow) -> None:
        if row.epoch <= self._last_epoch:
            raise FormatException(f"Epoch {row.epoch} does not follow epoch {self._last_epoch}", error_code="EPOCH_ORDER")
        if self._writer is None:
            self._open()
        self._writer.writerow(row_values(row))
        self._handle.flush()
        self._last_epoch = row.epoch

    def write_summary(self, summary: Dict[str, float]) -> None:
        if self._writer is None:
            self._open()
        fields = " ".join(f"{key}={format_value(value)}" for key, value in summary.items())
        self._handle.write(f"{SUMMARY_PREFIX}: {fields}\n")
        self._handle.flush()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def read_metrics(path: str) -> Tuple[List[MetricsRow], Optional[str]]:
    """Rows and the raw summary line (None when absent)"""
    rows: List[MetricsRow] = []
    summary = None
    with open(path, newline="", encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0].split(",") != METRICS_HEADER:
        raise FormatException(f"{path}: unexpected metrics header")
    body = [line for line in lines[1:] if line]
    if body and body[-1].startswith("#"):
        summary = body.pop()
    for record in csv.DictReader(body, fieldnames=METRICS_HEADER):
        rows.append(MetricsRow(**record))
    return rows, summary
