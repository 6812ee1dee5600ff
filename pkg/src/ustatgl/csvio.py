"""One-value-per-line CSV ingestion and export."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Union

import numpy as np

__all__ = ["CSVFormatError", "read_values", "parse_values", "format_values", "write_values"]


class CSVFormatError(ValueError):
    """A malformed row; ``line`` is 1-based."""

    def __init__(self, line: int, text: str, reason: str):
        self.line = line
        super().__init__(f"line {line}: {reason}: {text!r}")


def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("non-finite value")
    return v


def parse_values(lines: Iterable[str]) -> np.ndarray:
    """
    Parse one real per line.  A non-numeric first line is taken as a
    header; blank lines are skipped.  A row with more than one field takes
    its first column only when the rest are empty.
    """
    out = []
    first = True
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        field = text.split(",")
        if any(f.strip() for f in field[1:]):
            raise CSVFormatError(lineno, text, "expected one value per line")
        try:
            out.append(_parse_float(field[0].strip()))
        except ValueError as exc:
            if first and not out:
                first = False
                continue
            raise CSVFormatError(lineno, text, str(exc) if "non-finite" in str(exc) else "not a number") from None
        first = False
    return np.array(out, dtype=float)


def read_values(path: Union[str, Path]) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_values(fh)


def format_values(values) -> str:
    """Shortest round-trip repr, one value per line."""
    return "".join(f"{float(v)!r}\n" for v in np.asarray(values, dtype=float).ravel())


def write_values(path: Union[str, Path], values, header: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(header + "\n")
        fh.write(format_values(values))
