"""Sweep rows and their CSV serialization.

Every figure CSV starts with two comment lines (schema version and config
digest) followed by a header. Floats are written with 9 significant digits,
missing values as empty fields, so reruns of the same config are
byte-identical.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

SCHEMA_VERSION = 1


@dataclass
class SweepRow:
    series: str = ""
    slice: float | None = None
    D_S: float | None = None
    D_X1: float | None = None
    D_X2: float | None = None
    D_X_sum: float | None = None
    snr_db: float | None = None
    sigma2: float | None = None
    outer_closed: float | None = None
    outer_numeric: float | None = None
    conditional: float | None = None
    slb: float | None = None
    inner: float | None = None
    region: str = ""
    R_sum: float | None = None
    R_sum_se: float | None = None
    R1: float | None = None
    R2: float | None = None
    D_S_meas: float | None = None
    D_S_meas_se: float | None = None
    D_X1_meas: float | None = None
    D_X2_meas: float | None = None
    D_X_meas_se: float | None = None
    step: float | None = None
    trials: int | None = None
    seed: int | None = None


COLUMNS = tuple(f.name for f in fields(SweepRow))


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return "%.9g" % v
    if hasattr(v, "dtype"):
        return fmt(v.item())
    return str(v)


def render_csv(rows, digest: str, kind: str) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: semantic-mt-sweep/{SCHEMA_VERSION} kind={kind}\n")
    buf.write(f"# config-sha256: {digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([fmt(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def write_csv(path, rows, digest: str, kind: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(render_csv(rows, digest, kind))
    return path


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Return the comment lines and the rows as dicts of strings."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return comments, list(csv.DictReader(body))


def parallel_map(fn, items, threads: int = 1) -> list:
    """Ordered map; threads only change wall time, never the output."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
