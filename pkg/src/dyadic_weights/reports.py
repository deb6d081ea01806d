"""Weight files, JSON reports and CSV summaries.

Floats are written with Python's shortest round-trip ``repr``, so every value
reads back bit-identical.  NaN and infinities are rejected at write time.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dyadic import DyadicInterval, DyadicWeight, build_weight

__all__ = [
    "Report",
    "SCALAR_VOCABULARY",
    "SchemaError",
    "check_scalar_key",
    "dumps_report",
    "loads_report",
    "read_report",
    "read_weight",
    "summarize",
    "weight_from_dict",
    "weight_to_dict",
    "write_report",
    "write_summary",
    "write_weight",
]

#: allowed scalar names; a name may also carry a parameter suffix such as ``Ap(2)``
SCALAR_VOCABULARY = frozenset({
    # constants of a weight
    "Ap", "Ainf", "RHp", "RH1", "RH1viaMaximal", "RH1viaLuxemburg",
    "WeakRHp", "WeakRH1", "WeakRH1viaLuxemburg", "doubling",
    # summation constants and sums
    "RHpB", "ApB", "AinfB", "WeakRHpB",
    "sum", "gap", "ratio", "bound_upper", "bound_lower", "lower_ratio", "upper_ratio",
    # convexity coefficients
    "alpha", "beta", "beta_closed_form", "q", "C", "max_violation",
    # Bellman machinery
    "Q", "Q0", "Q0_direct", "Q0_closed_form", "Q0_ratio", "residual", "residual_closed_form", "iterations", "min_deficit",
    "samples", "seed", "x", "y", "value", "delta", "grid_min", "vertex_min",
    "x_plus", "x_lo", "x_hi", "max_slope", "right_value", "oracle", "gap_relative",
    # generic comparison fields
    "lhs", "rhs", "bound", "margin", "lower_margin", "upper_margin", "max_ratio", "mean_ratio", "count", "failures", "depth", "trials",
})

_KEY = re.compile(r"^([A-Za-z][A-Za-z0-9_]*)(\([^()]*\))?$")


class SchemaError(ValueError):
    """A report or weight file does not follow the documented schema."""


def check_scalar_key(key: str) -> str:
    m = _KEY.match(key)
    if m is None or m.group(1) not in SCALAR_VOCABULARY:
        raise SchemaError(f"scalar key {key!r} is not in the vocabulary")
    return key


def _finite_float(v, what: str) -> float:
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise SchemaError(f"{what} is not a number: {v!r}") from None
    if not math.isfinite(f):
        raise SchemaError(f"{what} is not finite: {f!r}")
    return f


@dataclass
class Report:
    name: str
    scalars: dict[str, float] = field(default_factory=dict)
    flags: dict[str, bool] = field(default_factory=dict)
    argmax: DyadicInterval | None = None
    metadata: dict = field(default_factory=lambda: {"seed": None, "depth": None, "timestamp": None})

    def validate(self) -> "Report":
        if not isinstance(self.name, str) or not self.name:
            raise SchemaError("report name must be a nonempty string")
        for k, v in self.scalars.items():
            check_scalar_key(k)
            _finite_float(v, f"scalar {k!r}")
        for k, v in self.flags.items():
            if not isinstance(v, (bool, np.bool_)):
                raise SchemaError(f"flag {k!r} must be a bool")
        if self.argmax is not None:
            a = DyadicInterval(*self.argmax)
            if not a.is_valid():
                raise SchemaError(f"invalid argmax {tuple(a)}")
        extra = set(self.metadata) - {"seed", "depth", "timestamp"}
        if extra:
            raise SchemaError(f"unknown metadata keys {sorted(extra)}")
        return self

    def to_dict(self) -> dict:
        self.validate()
        md = {k: self.metadata.get(k) for k in ("seed", "depth", "timestamp")}
        return {
            "name": self.name,
            "scalars": {k: float(self.scalars[k]) for k in sorted(self.scalars)},
            "flags": {k: bool(self.flags[k]) for k in sorted(self.flags)},
            "argmax": None if self.argmax is None else [int(self.argmax[0]), int(self.argmax[1])],
            "metadata": md,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Report":
        try:
            argmax = d.get("argmax")
            r = cls(
                name=d["name"],
                scalars={str(k): float(v) for k, v in d.get("scalars", {}).items()},
                flags={str(k): v for k, v in d.get("flags", {}).items()},
                argmax=None if argmax is None else DyadicInterval(int(argmax[0]), int(argmax[1])),
                metadata=dict(d.get("metadata", {"seed": None, "depth": None, "timestamp": None})),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise SchemaError(f"malformed report: {exc}") from None
        return r.validate()

    def __eq__(self, other) -> bool:
        return isinstance(other, Report) and self.to_dict() == other.to_dict()


def dumps_report(report: Report) -> str:
    return json.dumps(report.to_dict(), allow_nan=False, indent=2, sort_keys=True) + "\n"


def loads_report(text: str) -> Report:
    return Report.from_dict(json.loads(text))


def write_report(report: Report, path) -> None:
    text = dumps_report(report)  # validates before the file is touched
    Path(path).write_text(text)


def read_report(path) -> Report:
    return loads_report(Path(path).read_text())


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

def weight_to_dict(w: DyadicWeight) -> dict:
    return {"depth": w.depth, "root_length": float(w.root_length), "leaves": [float(v) for v in w.leaves]}


def weight_from_dict(d: Mapping) -> DyadicWeight:
    try:
        leaves = [_finite_float(v, "leaf") for v in d["leaves"]]
        root_length = _finite_float(d.get("root_length", 1.0), "root_length")
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed weight: {exc}") from None
    if any(v <= 0 for v in leaves):
        raise SchemaError("leaf values must be strictly positive")
    try:
        w = build_weight(leaves, root_length)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    if "depth" in d and int(d["depth"]) != w.depth:
        raise SchemaError(f"depth {d['depth']} does not match {len(leaves)} leaves")
    return w


def write_weight(w: DyadicWeight, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_text("".join(f"{float(v)!r}\n" for v in w.leaves))
    else:
        path.write_text(json.dumps(weight_to_dict(w), allow_nan=False) + "\n")


def read_weight(path) -> DyadicWeight:
    """JSON ``{"depth", "root_length", "leaves"}`` or CSV with one leaf per line."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and r[0].strip()]
        return weight_from_dict({"leaves": [r[0].strip() for r in rows]})
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise SchemaError("weight JSON must be an object")
    return weight_from_dict(d)


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------

def summarize(reports: Iterable[Report]) -> str:
    """CSV, one row per report; columns ``name`` then the sorted union of scalar keys."""
    reports = list(reports)
    keys = sorted({k for r in reports for k in r.scalars})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["name"] + keys)
    for r in reports:
        r.validate()
        writer.writerow([r.name] + [repr(float(r.scalars[k])) if k in r.scalars else "" for k in keys])
    return buf.getvalue()


def write_summary(reports: Sequence[Report], path) -> None:
    Path(path).write_text(summarize(reports), newline="")
