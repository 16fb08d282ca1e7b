"""Output helpers: atomic file writes, full-precision delimited tables and
report figures.

Floats are formatted with 17 significant digits so a CSV round-trip
reproduces the in-memory values bit for bit.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

__all__ = [
    "fmt",
    "atomic_write_text",
    "atomic_write_bytes",
    "write_csv",
    "write_json",
    "save_figure",
]


def fmt(x) -> str:
    """17-significant-digit float formatting (lossless round-trip)."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    return f"{float(x):.17g}"


def _atomic_write(path, data, mode):
    """Write via a sibling temp file and rename into place."""
    path = str(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".resona-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    _atomic_write(path, text, "w")


def atomic_write_bytes(path, blob: bytes) -> None:
    _atomic_write(path, blob, "wb")


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path, payload) -> None:
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def save_figure(fig, path) -> None:
    """Render a figure next to its data file (atomic like the tables)."""
    import io

    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=130, bbox_inches="tight")
    atomic_write_bytes(path, buf.getvalue())
