"""CSV rendering of result tables."""

from __future__ import annotations

import os

from .experiments import ResultTable


def render(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.12g}"
    text = str(value)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def to_csv(table: ResultTable) -> str:
    lines = [f"# {k}: {v}" for k, v in table.metadata.items()]
    lines.append(",".join(table.names))
    lines.extend(",".join(render(v) for v in row) for row in table.rows)
    return "\n".join(lines) + "\n"


def write_csv(table: ResultTable, destination: str | os.PathLike) -> int:
    """Write ``table`` to ``destination``; returns the number of bytes written."""
    data = to_csv(table).encode("utf-8")
    try:
        with open(destination, "wb") as fh:
            fh.write(data)
    except OSError as e:
        raise OSError(e.errno, f"cannot write CSV: {e.strerror}", str(destination)) from e
    return len(data)
