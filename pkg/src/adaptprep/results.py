"""Tagged, column-typed experiment output with CSV/JSON round-tripping.

Emitted files are byte-reproducible for a fixed (config, seed); the only
run-dependent fields are isolated in the metadata block under the keys
"timestamp" and "runtime_s".
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

__all__ = ["ResultTable", "emit", "load"]

SCHEMA_VERSION = 1

# metadata keys allowed to differ between re-runs of the same config
VOLATILE_METADATA_KEYS = ("timestamp", "runtime_s")


@dataclass
class ResultTable:
    columns: list[str]
    units: list[str]
    rows: list[list]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.columns) != len(self.units):
            raise ValueError("columns and units must have equal length")
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("rows must be rectangular")

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [row[k] for row in self.rows]

    def headers(self) -> list[str]:
        return [
            f"{c} ({u})" if u else c for c, u in zip(self.columns, self.units)
        ]

    def equal_data(self, other: "ResultTable") -> bool:
        """Equality of columns, units, rows, and non-volatile metadata."""
        meta_a = {k: v for k, v in self.metadata.items() if k not in VOLATILE_METADATA_KEYS}
        meta_b = {k: v for k, v in other.metadata.items() if k not in VOLATILE_METADATA_KEYS}
        return (
            self.columns == other.columns
            and self.units == other.units
            and self.rows == other.rows
            and meta_a == meta_b
        )


def _format_cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _parse_cell(s: str):
    if s == "true":
        return True
    if s == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _to_csv_text(table: ResultTable) -> str:
    buf = io.StringIO()
    buf.write(f"# adaptprep-result schema={SCHEMA_VERSION}\n")
    buf.write("# metadata " + json.dumps(table.metadata, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.headers())
    for row in table.rows:
        writer.writerow([_format_cell(x) for x in row])
    return buf.getvalue()


def _from_csv_text(text: str) -> ResultTable:
    meta = {}
    lines = text.splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("# metadata "):
            meta = json.loads(line[len("# metadata "):])
        elif not line.startswith("#"):
            body_start = i
            break
    reader = csv.reader(lines[body_start:])
    headers = next(reader)
    columns, units = [], []
    for h in headers:
        if h.endswith(")") and " (" in h:
            name, unit = h.rsplit(" (", 1)
            columns.append(name)
            units.append(unit[:-1])
        else:
            columns.append(h)
            units.append("")
    rows = [[_parse_cell(c) for c in row] for row in reader if row]
    return ResultTable(columns=columns, units=units, rows=rows, metadata=meta)


def emit(table: ResultTable, path, fmt: str = "csv") -> None:
    """Write the table as CSV or JSON (UTF-8)."""
    if fmt == "csv":
        text = _to_csv_text(table)
    elif fmt == "json":
        payload = {
            "schema_version": SCHEMA_VERSION,
            "columns": table.columns,
            "units": table.units,
            "rows": table.rows,
            "metadata": table.metadata,
        }
        text = json.dumps(payload, indent=1, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown output format {fmt!r} (expected csv or json)")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load(path, fmt: str | None = None) -> ResultTable:
    """Read back an emitted table; parse-identical to the in-memory original."""
    path = str(path)
    if fmt is None:
        fmt = "json" if path.endswith(".json") else "csv"
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "json":
        payload = json.loads(text)
        if payload.get("schema_version") != SCHEMA_VERSION:
            raise ValueError("unsupported result schema version")
        return ResultTable(
            columns=payload["columns"],
            units=payload["units"],
            rows=payload["rows"],
            metadata=payload["metadata"],
        )
    return _from_csv_text(text)
