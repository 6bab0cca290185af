"""CSV output for run results.

Layout: a ``# magnon-echo v1`` line, a ``# config: {...}`` line holding the
full configuration as sorted JSON, the column header, then data rows.
Multi-curve results get a leading ``curve`` column.
"""
from __future__ import annotations

import io
import json
from typing import TextIO

import numpy as np

from .runner import AmplitudeSeries, LightCone, RunResult
from .series import EchoSeries

MAGIC = "# magnon-echo v1"
CONFIG_PREFIX = "# config: "


def fmt(x: float) -> str:
    """Positional decimal with 12 significant digits."""
    x = float(x)
    if x == 0.0:
        return "0"
    return np.format_float_positional(x, precision=12, unique=False, fractional=False, trim="-")


def _columns(curve) -> list[str]:
    if isinstance(curve, LightCone):
        return ["x", "n", "re", "im", "abs2"]
    if isinstance(curve, AmplitudeSeries):
        return [curve.axis, "re", "im"]
    return [curve.axis, "L"]


def _rows(curve) -> list[list[str]]:
    if isinstance(curve, LightCone):
        return [[str(x), str(n), fmt(v.real), fmt(v.imag), fmt(abs(v) ** 2)] for x, n, v in curve.rows]
    if isinstance(curve, AmplitudeSeries):
        return [[fmt(a), fmt(v.real), fmt(v.imag)] for a, v in zip(curve.params, curve.values)]
    return [[fmt(a), fmt(v)] for a, v in curve.samples]


def _is_empty(curve) -> bool:
    if isinstance(curve, LightCone):
        return not curve.rows
    return len(curve.params if isinstance(curve, AmplitudeSeries) else curve.samples) == 0


def render(result: RunResult) -> str:
    if not result.curves or all(_is_empty(c) for _, c in result.curves):
        raise ValueError("refusing to write an empty series")
    headers = {tuple(_columns(c)) for _, c in result.curves}
    if len(headers) != 1:
        raise ValueError("curves of one run must share their columns")
    multi = len(result.curves) > 1
    out = io.StringIO()
    out.write(MAGIC + "\n")
    out.write(CONFIG_PREFIX + json.dumps(result.config.as_dict(), sort_keys=True) + "\n")
    out.write(",".join((["curve"] if multi else []) + list(headers.pop())) + "\n")
    for label, curve in result.curves:
        for row in _rows(curve):
            out.write(",".join(([label.replace(",", ";")] if multi else []) + row) + "\n")
    return out.getvalue()


def write_csv(result: RunResult, path: str | None = None, stream: TextIO | None = None) -> str:
    """Write to ``path`` (or ``stream``) and return the text."""
    text = render(result)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    elif stream is not None:
        stream.write(text)
    return text


def read_csv(path_or_text: str, is_text: bool = False) -> dict:
    """Parse an emitted file into ``{"config": dict, "columns": [...], "rows": [...]}``.

    Numeric fields come back as floats, the curve label as a string.
    """
    if is_text:
        text = path_or_text
    else:
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    lines = text.split("\n")
    if lines[0] != MAGIC:
        raise ValueError("not a magnon-echo v1 file")
    if not lines[1].startswith(CONFIG_PREFIX):
        raise ValueError("missing config line")
    config = json.loads(lines[1][len(CONFIG_PREFIX):])
    columns = lines[2].split(",")
    rows = []
    for line in lines[3:]:
        if not line:
            continue
        fields = line.split(",")
        rows.append([f if c == "curve" else float(f) for c, f in zip(columns, fields)])
    return {"config": config, "columns": columns, "rows": rows}


__all__ = ["MAGIC", "fmt", "read_csv", "render", "write_csv", "EchoSeries"]
