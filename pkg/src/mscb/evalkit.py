"""Evaluation arithmetic: per-column min-max normalization to [-1, 1],
signed row averaging, bitrate tables, and CSV/JSON report emission.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .container import MiscContainer, rate_report

HIGHER = "higher"
LOWER = "lower"

_DIRECTION_ROW = "__direction__"
_AVERAGE_COL = "__average__"


@dataclass
class MetricsTable:
    """Rectangular labeled metric values with a declared direction
    (higher-better or lower-better) per column."""

    rows: list[str]
    columns: list[str]
    directions: dict[str, str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def validate(self) -> None:
        if not self.rows:
            raise ValueError("metrics table has no rows")
        if not self.columns:
            raise ValueError("metrics table has no columns")
        if self.values.shape != (len(self.rows), len(self.columns)):
            raise ValueError(f"values shape {self.values.shape} does not match "
                             f"{len(self.rows)} rows x {len(self.columns)} columns")
        for col in self.columns:
            if self.directions.get(col) not in (HIGHER, LOWER):
                raise ValueError(f"column {col!r} needs a higher/lower direction")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("metrics table contains non-finite values")

    def __eq__(self, other):
        if not isinstance(other, MetricsTable):
            return NotImplemented
        return (self.rows == other.rows and self.columns == other.columns
                and self.directions == other.directions
                and np.array_equal(self.values, other.values))


@dataclass
class NormalizedReport:
    """Per-column normalized table plus the signed per-row averages."""

    table: MetricsTable
    averages: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, NormalizedReport):
            return NotImplemented
        return self.table == other.table and np.array_equal(self.averages, other.averages)


def normalize(table: MetricsTable) -> NormalizedReport:
    """Min-max normalize each column to [-1, 1] and average rows with
    +1/-1 signs for higher/lower-better columns.

    A degenerate column (max == min) normalizes to all zeros, the
    symmetric neutral value.
    """
    table.validate()
    values = table.values
    lo = values.min(axis=0)
    hi = values.max(axis=0)
    span = hi - lo
    out = np.zeros_like(values)
    live = span != 0
    out[:, live] = 2.0 * (values[:, live] - lo[live]) / span[live] - 1.0
    signs = np.array([1.0 if table.directions[c] == HIGHER else -1.0
                      for c in table.columns])
    averages = out @ signs
    normalized = MetricsTable(rows=list(table.rows), columns=list(table.columns),
                              directions=dict(table.directions), values=out)
    return NormalizedReport(table=normalized, averages=averages)


def bpp_table(containers: list[tuple[MiscContainer, str]]) -> MetricsTable:
    """One row per container: total bpp plus per-section bpp, all
    lower-better."""
    if not containers:
        raise ValueError("bpp_table needs at least one container")
    sections = ("header", "semantic", "maps", "pixel", "crc")
    columns = ["bpp"] + [f"{s}_bpp" for s in sections]
    rows = []
    values = []
    for container, label in containers:
        report = rate_report(container)
        pixels = container.width * container.height
        rows.append(label)
        values.append([report.bpp] + [report.section_bits[s] / pixels for s in sections])
    return MetricsTable(rows=rows, columns=columns,
                        directions={c: LOWER for c in columns},
                        values=np.array(values))


# -- serialization ----------------------------------------------------------


def emit_report(report: MetricsTable | NormalizedReport, format: str = "json") -> bytes:
    """Lossless CSV or JSON emission; column order is preserved and floats
    use shortest round-trippable form."""
    if format == "json":
        return _emit_json(report)
    if format == "csv":
        return _emit_csv(report)
    raise ValueError(f"unknown report format {format!r}")


def load_table(data: bytes, format: str = "json") -> MetricsTable:
    obj = _load(data, format)
    if isinstance(obj, NormalizedReport):
        raise ValueError("expected a metrics table, got a normalized report")
    return obj


def load_report(data: bytes, format: str = "json") -> NormalizedReport:
    obj = _load(data, format)
    if isinstance(obj, MetricsTable):
        raise ValueError("expected a normalized report, got a metrics table")
    return obj


def _emit_json(report) -> bytes:
    table = report.table if isinstance(report, NormalizedReport) else report
    table.validate()
    doc = {
        "columns": list(table.columns),
        "directions": {c: table.directions[c] for c in table.columns},
        "rows": [
            {"label": label, "values": [float(v) for v in table.values[i]]}
            for i, label in enumerate(table.rows)
        ],
    }
    if isinstance(report, NormalizedReport):
        for i, row in enumerate(doc["rows"]):
            row["average"] = float(report.averages[i])
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _emit_csv(report) -> bytes:
    table = report.table if isinstance(report, NormalizedReport) else report
    table.validate()
    is_report = isinstance(report, NormalizedReport)
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    header = ["label"] + list(table.columns) + ([_AVERAGE_COL] if is_report else [])
    writer.writerow(header)
    writer.writerow([_DIRECTION_ROW] + [table.directions[c] for c in table.columns]
                    + ([""] if is_report else []))
    for i, label in enumerate(table.rows):
        row = [label] + [repr(float(v)) for v in table.values[i]]
        if is_report:
            row.append(repr(float(report.averages[i])))
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


def _load(data: bytes, format: str):
    if format == "json":
        return _load_json(data)
    if format == "csv":
        return _load_csv(data)
    raise ValueError(f"unknown report format {format!r}")


def _load_json(data: bytes):
    doc = json.loads(data.decode("utf-8"))
    columns = doc["columns"]
    rows = [r["label"] for r in doc["rows"]]
    values = np.array([[float(v) for v in r["values"]] for r in doc["rows"]])
    table = MetricsTable(rows=rows, columns=list(columns),
                         directions=dict(doc["directions"]), values=values)
    table.validate()
    if all("average" in r for r in doc["rows"]):
        averages = np.array([float(r["average"]) for r in doc["rows"]])
        return NormalizedReport(table=table, averages=averages)
    return table


def _load_csv(data: bytes):
    reader = csv.reader(io.StringIO(data.decode("utf-8"), newline=""))
    rows = list(reader)
    if len(rows) < 3 or rows[0][0] != "label" or rows[1][0] != _DIRECTION_ROW:
        raise ValueError("CSV table needs a header and a direction row")
    is_report = rows[0][-1] == _AVERAGE_COL
    columns = rows[0][1:-1] if is_report else rows[0][1:]
    dir_cells = rows[1][1:len(columns) + 1]
    directions = dict(zip(columns, dir_cells))
    labels = []
    values = []
    averages = []
    for row in rows[2:]:
        labels.append(row[0])
        cells = row[1:]
        if is_report:
            averages.append(float(cells[-1]))
            cells = cells[:-1]
        values.append([float(v) for v in cells])
    table = MetricsTable(rows=labels, columns=list(columns),
                         directions=directions, values=np.array(values))
    table.validate()
    if is_report:
        return NormalizedReport(table=table, averages=np.array(averages))
    return table


# -- pixel fidelity helpers --------------------------------------------------


def mse(image: np.ndarray, reference: np.ndarray) -> float:
    err = image.astype(np.float64) - reference.astype(np.float64)
    return float(np.mean(err * err))


def psnr(image: np.ndarray, reference: np.ndarray, cap: float = 99.0) -> float:
    """Peak signal-to-noise ratio in dB, capped for identical inputs."""
    e = mse(image, reference)
    return cap if e == 0 else min(cap, float(10.0 * np.log10(255.0**2 / e)))
