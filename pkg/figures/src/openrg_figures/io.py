"""Reading the delimited tables the openrg command line writes.

A table is a CSV header line, zero or more data rows, and optional footer
lines of the form `# key = value`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Table:
    """One parsed table: column names, rows as dicts, footer key-values."""

    path: str
    columns: tuple
    rows: tuple
    footer: dict = field(default_factory=dict)

    def column(self, name, convert=float):
        return [convert(row[name]) for row in self.rows]


def read_table(path):
    """Parse a CSV table with an optional `# key = value` footer."""
    columns = None
    rows = []
    footer = {}
    with open(path, newline="") as fh:
        for record in csv.reader(fh):
            if not record:
                continue
            if record[0].startswith("#"):
                text = ",".join(record).lstrip("#").strip()
                key, _, value = text.partition("=")
                footer[key.strip()] = value.strip()
                continue
            if columns is None:
                columns = tuple(record)
                continue
            rows.append(dict(zip(columns, record)))
    if columns is None:
        raise ValueError(f"{path}: no header line")
    return Table(path, columns, tuple(rows), footer)
