"""
Writers for experiment output.

Series (rate profiles, tables, figure data) are lists of flat row dictionaries written as CSV
through ``pandas``; scalar summaries are JSON documents. Floats keep full double precision and
absent values are written as empty CSV cells or JSON ``null``.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, TextIO, Union

import numpy as np
import pandas as pd

from .model.results import RateProfile
from .oracle.ctmc import JointDistribution

__all__ = [
    "FORMATS",
    "joint_rows",
    "profile_rows",
    "rows_to_frame",
    "to_jsonable",
    "write_bundle",
    "write_document",
    "write_rows",
]

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")

Row = Dict[str, Any]
PathLike = Union[str, Path]


def to_jsonable(value: Any) -> Any:
    """Convert numpy values and ``nan`` recursively into plain JSON values."""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def rows_to_frame(rows: Sequence[Row]) -> pd.DataFrame:
    """Build a frame from rows, keeping the column order of first appearance."""
    columns: List[str] = []
    for row in rows:
        columns.extend(key for key in row if key not in columns)
    return pd.DataFrame(list(rows), columns=columns)


def profile_rows(profiles: Sequence[RateProfile], n_max: int, **extra: Any) -> List[Row]:
    """
    Flatten rate profiles into ``{..extra, server, n, source, value, stderr}`` rows.

    ``server`` is 1-based. Absent states are kept as rows with an empty value so the series of
    different sources stay aligned on ``n``.
    """
    rows = []
    for profile in profiles:
        for n in range(n_max + 1):
            rows.append(
                {
                    **extra,
                    "server": profile.server + 1,
                    "n": n,
                    "source": profile.provenance.value,
                    "value": profile.rate(n),
                    "stderr": profile.stderr_at(n),
                }
            )
    return rows


def joint_rows(dist: JointDistribution, min_prob: float = 0.0) -> List[Row]:
    """Flatten a joint distribution into ``{q1, q2, prob}`` rows with ``prob > min_prob``."""
    q1, q2 = np.nonzero(dist.pi > min_prob)
    return [{"q1": int(a), "q2": int(b), "prob": float(dist.pi[a, b])} for a, b in zip(q1, q2)]


def write_rows(
    rows: Sequence[Row], path: Optional[PathLike] = None, fmt: str = "csv", stream: Optional[TextIO] = None
) -> str:
    """
    Write rows as CSV or as a JSON list.

    Args:
        rows: Flat row dictionaries.
        path: Output file; the text is only returned when omitted.
        fmt: ``"csv"`` or ``"json"``.
        stream: Optional stream the text is also written to.

    Returns:
        The written text.

    Raises:
        ValueError: If the format is unknown.
    """
    if fmt not in FORMATS:
        raise ValueError(f"Unknown output format: {fmt}")
    if fmt == "csv":
        text = rows_to_frame(rows).to_csv(index=False, lineterminator="\n")
    else:
        text = json.dumps(to_jsonable(list(rows)), indent=2) + "\n"
    _emit(text, path, stream)
    return text


def write_document(
    document: Mapping[str, Any], path: Optional[PathLike] = None, stream: Optional[TextIO] = None
) -> str:
    """Write a JSON summary document and return its text."""
    text = json.dumps(to_jsonable(dict(document)), indent=2) + "\n"
    _emit(text, path, stream)
    return text


def write_bundle(tables: Mapping[str, Sequence[Row]], out_dir: PathLike, fmt: str = "csv") -> List[Path]:
    """
    Write every table of a bundle to ``out_dir/<name>.<fmt>``.

    Returns:
        The written paths, in table order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, rows in tables.items():
        path = out / f"{name}.{fmt}"
        write_rows(rows, path, fmt)
        paths.append(path)
    return paths


def _emit(text: str, path: Optional[PathLike], stream: Optional[TextIO]) -> None:
    if path is not None:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
        logger.info("Wrote %s", target)
    if stream is not None:
        stream.write(text)
