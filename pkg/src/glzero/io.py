"""Result envelopes (JSON), tables (CSV) and complex fields (binary + JSON header)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

TABLE_SCHEMAS = {
    "curve": ["tau", "lambda", "err"],
    "e1d": ["b", "alpha0", "e1d", "fh_residual", "z1", "z2"],
    "ecurve": ["L", "E", "err", "fit_c"],
    "gtable": ["b", "g", "envelope", "r_max"],
    "decay": ["t_lo", "t_hi", "mass", "area"],
    "verify": ["kappa", "H", "regime", "E_computed", "C0", "relative_gap", "mass_gap"],
}


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def _restore(obj):
    if isinstance(obj, dict):
        return {k: _restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore(v) for v in obj]
    if obj in ("nan", "inf", "-inf"):
        return float(obj)
    return obj


@dataclass
class ResultEnvelope:
    command: str
    config: dict
    payload: dict
    timings: dict = field(default_factory=dict)
    schema: int = SCHEMA_VERSION

    def dumps(self) -> str:
        doc = {"schema": self.schema, "command": self.command, "config": self.config,
               "timings": self.timings, "payload": self.payload}
        return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ResultEnvelope":
        doc = _restore(json.loads(text))
        if doc.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported envelope schema {doc.get('schema')!r}")
        return cls(doc["command"], doc["config"], doc["payload"], doc.get("timings", {}), doc["schema"])

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def read(cls, path) -> "ResultEnvelope":
        return cls.loads(Path(path).read_text())


def format_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def table_text(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(row.get(c, "")) for c in columns])
    return buf.getvalue()


def write_table(path, columns: list[str], rows: list[dict]) -> None:
    Path(path).write_text(table_text(columns, rows))


def read_table(path) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        try:
            header = next(r)
        except StopIteration:
            raise ValueError(f"{path}: empty table") from None
        rows = []
        for line in r:
            row = {}
            for k, v in zip(header, line):
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
            rows.append(row)
    return header, rows


def detect_schema(header: list[str]) -> str:
    for name, cols in TABLE_SCHEMAS.items():
        if header[:len(cols)] == cols:
            return name
    raise ValueError(f"unknown table schema with columns {header}")


def write_field(path, u: np.ndarray, meta: dict) -> Path:
    """Interleaved little-endian float64 (re, im) pairs plus ``<path>.json`` header."""
    path = Path(path)
    u = np.ascontiguousarray(u, dtype=np.complex128)
    pairs = np.empty(u.shape + (2,), dtype="<f8")
    pairs[..., 0] = u.real
    pairs[..., 1] = u.imag
    path.write_bytes(pairs.tobytes())
    header = dict(meta)
    header["dims"] = list(u.shape)
    header["dtype"] = "float64-le re/im interleaved"
    hdr = path.with_name(path.name + ".json")
    hdr.write_text(json.dumps(_clean(header), indent=2, sort_keys=True) + "\n")
    return hdr


def read_field(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    header = json.loads(path.with_name(path.name + ".json").read_text())
    dims = tuple(header["dims"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    if raw.size != 2 * int(np.prod(dims)):
        raise ValueError(f"{path}: {raw.size} values, header expects {2 * int(np.prod(dims))}")
    pairs = raw.reshape(dims + (2,))
    return pairs[..., 0] + 1j * pairs[..., 1], header
