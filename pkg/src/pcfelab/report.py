"""Verdict reports and their JSON/CSV serialisation."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np

CONSISTENT = "Consistent"
VIOLATED = "Violated"
INCONCLUSIVE = "Inconclusive"
VERDICTS = (CONSISTENT, VIOLATED, INCONCLUSIVE)


def plain(obj: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):  # enums
        return obj.value
    return obj


def digest(inputs: dict) -> str:
    blob = json.dumps(plain(inputs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class VerdictReport:
    check: str
    inputs: dict
    statistics: dict
    verdict: str
    tolerances: dict = field(default_factory=dict)
    seed: Optional[int] = None
    runtime_ms: float = 0.0
    residual_sup: Optional[float] = None
    classification: Optional[str] = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        self.inputs = plain(self.inputs)
        self.inputs.setdefault("digest", digest(self.inputs))
        self.statistics = plain(self.statistics)
        self.tolerances = plain(self.tolerances)
        self.residual_sup = plain(self.residual_sup)
        self.runtime_ms = float(self.runtime_ms)
        self.notes = [str(n) for n in self.notes]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "VerdictReport":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "VerdictReport":
        return cls.from_dict(json.loads(text))


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def table_to_csv(columns: dict) -> str:
    """Columns (equal-length sequences keyed by header) as CSV text."""
    names = list(columns)
    cols = [np.asarray(columns[k]).ravel() for k in names]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
