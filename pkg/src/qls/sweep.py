"""SweepTable: labelled result grids with CSV/JSON serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

SIG_DIGITS = 9


def fmt(value: Any) -> Any:
    """Numbers to 9 significant digits; everything else passes through."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return float(f"{value:.{SIG_DIGITS}g}")
    return value


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


@dataclass
class SweepTable:
    columns: list[str]
    units: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.units) != len(self.columns):
            raise ValueError("one unit per column required")

    def add_row(self, values: Sequence[Any]) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values, table has {len(self.columns)} columns")
        self.rows.append(list(values))

    def column(self, name: str) -> list[Any]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for key in sorted(self.metadata):
            buf.write(f"# {key}: {json.dumps(self.metadata[key], sort_keys=True)}\n")
        writer.writerow([f"{c} [{u}]" if u else c for c, u in zip(self.columns, self.units)])
        for row in self.rows:
            writer.writerow([_csv_cell(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "columns": self.columns,
            "units": self.units,
            "rows": [[fmt(v) for v in row] for row in self.rows],
            "metadata": self.metadata,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def dumps(self, fmt_name: str = "csv") -> str:
        if fmt_name == "csv":
            return self.to_csv()
        if fmt_name == "json":
            return self.to_json()
        raise ValueError(f"unknown format {fmt_name!r}")

    @classmethod
    def from_json(cls, text: str) -> "SweepTable":
        doc = json.loads(text)
        return cls(doc["columns"], doc["units"], doc["rows"], doc["metadata"])

    @classmethod
    def from_csv(cls, text: str) -> "SweepTable":
        meta, body = {}, []
        for line in text.splitlines():
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                meta[key] = json.loads(value)
            else:
                body.append(line)
        reader = csv.reader(body)
        header = next(reader)
        columns, units = [], []
        for h in header:
            if h.endswith("]") and " [" in h:
                name, _, unit = h[:-1].partition(" [")
            else:
                name, unit = h, ""
            columns.append(name)
            units.append(unit)
        rows = [[_parse(v) for v in r] for r in reader]
        return cls(columns, units, rows, meta)


def _parse(cell: str) -> Any:
    if cell == "":
        return None
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)
    except ValueError:
        return cell
