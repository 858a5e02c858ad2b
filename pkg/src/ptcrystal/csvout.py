"""Deterministic CSV writing: 9 significant digits, '\\n' endings, provenance header."""

import math
from pathlib import Path

import numpy as np


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    out = format(v, ".9g")
    return "0" if out == "-0" else out


def write_csv(path, columns, rows, digest, command, notes=()):
    """Write ``rows`` under a ``# config_sha256=... command=...`` comment and a header row."""
    path = Path(path)
    lines = [f"# config_sha256={digest} command={command}"]
    lines.extend(f"# {n}" for n in notes)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Header and float rows of a file produced by :func:`write_csv` (string cells kept)."""
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if header is None:
                header = cells
                continue
            parsed = []
            for c in cells:
                try:
                    parsed.append(float(c))
                except ValueError:
                    parsed.append(c)
            rows.append(parsed)
    return header, rows
