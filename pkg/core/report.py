"""
Output emission shared by every command.

Floats are written with 12 significant digits, JSON keeps insertion order,
and CSV follows RFC 4180 (minimal quoting, CRLF line ends), so identical
inputs always produce identical bytes.
"""

import csv
import io
import json
import math
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

SIGNIFICANT_DIGITS = 12
FLOAT_FORMAT = f"%.{SIGNIFICANT_DIGITS}g"


def format_float(value: float) -> str:
    return FLOAT_FORMAT % value


def rounded(obj: Any) -> Any:
    """`obj` with every float cut to 12 significant digits; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(key): rounded(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [rounded(value) for value in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            return None
        return float(format_float(value))
    return obj


def to_json(payload: Any) -> str:
    return json.dumps(rounded(payload), indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def frame_to_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(
        buffer,
        index=False,
        float_format=FLOAT_FORMAT,
        quoting=csv.QUOTE_MINIMAL,
        lineterminator="\r\n",
    )
    return buffer.getvalue()


def records_to_csv(records: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
    frame = pd.DataFrame.from_records([rounded(row) for row in records], columns=columns)
    return frame_to_csv(frame)


def flatten(payload: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Nested mapping as one flat CSV row (`a.b` keys); lists become JSON text."""
    row: Dict[str, Any] = {}
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            row.update(flatten(value, prefix=f"{name}."))
        elif isinstance(value, (list, tuple)):
            row[name] = json.dumps(rounded(value), separators=(",", ":"))
        else:
            row[name] = value
    return row


def render(payload: Any, fmt: str) -> str:
    """A report (mapping, list of rows, or DataFrame) as csv or json text."""
    if fmt == "json":
        if isinstance(payload, pd.DataFrame):
            payload = payload.to_dict(orient="records")
        return to_json(payload)
    if isinstance(payload, pd.DataFrame):
        return frame_to_csv(payload)
    if isinstance(payload, dict):
        return records_to_csv([flatten(payload)])
    return records_to_csv([flatten(row) for row in payload])


def emit(text: str, out: Optional[str] = None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
