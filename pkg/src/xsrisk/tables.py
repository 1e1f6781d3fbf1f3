"""CSV and JSON curve tables.

Columns are ``alpha``, then methods in canonical order, then the reference
values (constant columns). Numbers use 12 significant digits and +inf is the
literal ``inf``. A CSV ends with ``# key: value`` metadata lines.
"""

import json
import math
import os
import tempfile

import numpy as np

METHOD_ORDER = ("renyi", "js", "sibson")
REFERENCE_ORDER = ("mi", "lautum", "true_excess")


def fmt(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def parse(token):
    return float(token)


def columns(curve):
    """Ordered (name, values) pairs for a BoundCurve."""
    n = len(curve.alphas)
    cols = [("alpha", np.asarray(curve.alphas, dtype=float))]
    cols += [(m, np.asarray(curve.curves[m], dtype=float)) for m in METHOD_ORDER if m in curve.curves]
    cols += [(r, np.full(n, float(curve.references[r]))) for r in REFERENCE_ORDER if r in curve.references]
    return cols


def to_csv(curve, metadata):
    cols = columns(curve)
    lines = [",".join(name for name, _ in cols)]
    for i in range(len(curve.alphas)):
        lines.append(",".join(fmt(v[i]) for _, v in cols))
    for key in sorted(metadata):
        lines.append(f"# {key}: {json.dumps(metadata[key], sort_keys=True, default=_jsonable)}")
    return "\n".join(lines) + "\n"


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _json_number(x):
    x = float(x)
    return fmt(x) if math.isinf(x) or math.isnan(x) else float(fmt(x))


def to_json(curve, metadata):
    doc = {
        "metadata": metadata,
        "columns": {name: [_json_number(x) for x in v] for name, v in columns(curve)},
    }
    return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n"


def read_csv(text):
    """Parse CSV text back into (column dict, metadata dict)."""
    rows, meta = [], {}
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = json.loads(value)
        elif line:
            rows.append(line.split(","))
    header, body = rows[0], rows[1:]
    cols = {h: np.array([parse(r[i]) for r in body]) for i, h in enumerate(header)}
    return cols, meta


def write_atomic(path, text):
    """Write to a sibling temp file and rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
