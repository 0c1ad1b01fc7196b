"""Deterministic CSV output with a provenance comment line."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence


def fmt(value) -> str:
    """Floats with 17 significant digits; integers and strings verbatim."""
    if isinstance(value, (bool, str)):
        return str(value)
    if isinstance(value, (int,)) or (hasattr(value, "dtype") and value.dtype.kind in "iu"):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def provenance(command: str, config_hash: str, seed: int, **extra) -> str:
    parts = [f"dsisd {command}", f"config_hash={config_hash}", f"seed={seed}"]
    parts += [f"{k}={v}" for k, v in extra.items()]
    return "# " + " ".join(parts)


def write_csv(path, comment: str, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [comment, ",".join(columns)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path
