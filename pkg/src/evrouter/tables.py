"""CSV/JSON emission for the CLI's result tables."""
from __future__ import annotations

import csv
import io
import json
import math

FLOAT_DIGITS = 6


def format_value(value, decimals: int | None = None) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if decimals is not None:
            return f"{value:.{decimals}f}"
        return f"{value:.{FLOAT_DIGITS}g}"
    return str(value)


def parse_value(text: str):
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def to_csv(rows: list[dict], decimals: dict[str, int] | None = None) -> str:
    """Header plus one line per row; ``decimals`` fixes some columns' format."""
    decimals = decimals or {}
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.writer(buf, lineterminator="\n")
    cols = list(rows[0])
    w.writerow(cols)
    for row in rows:
        w.writerow([format_value(row[c], decimals.get(c)) for c in cols])
    return buf.getvalue()


def from_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    return [{k: parse_value(v) for k, v in row.items()} for row in reader]


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def to_json(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2) + "\n"
