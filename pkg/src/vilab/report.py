"""Report rows shared by the solver monitors, the checks and the CLI."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = ["Row", "DiagnosticsReport", "fmt", "HOLDS", "VIOLATED", "MONITORED"]

HOLDS = "holds"
VIOLATED = "violated"
MONITORED = "monitored"
VERDICTS = (HOLDS, VIOLATED, MONITORED)

NORM_NOTE = "matrix sup norm = max absolute entry"


def fmt(x) -> str:
    """Shortest round-trip decimal for floats, locale independent."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    if x is None:
        return ""
    return str(x)


def _params_str(params: dict) -> str:
    return ";".join(f"{k}={fmt(v)}" for k, v in sorted(params.items()))


@dataclass(frozen=True)
class Row:
    check: str
    params: dict
    measured: float
    reference: float | None
    verdict: str
    tolerance: float | None
    anchor: str
    note: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"bad verdict {self.verdict!r}")
        if not self.anchor:
            raise ValueError("every row names its anchor")
        object.__setattr__(self, "measured", _num(self.measured))
        object.__setattr__(self, "reference", None if self.reference is None else _num(self.reference))
        object.__setattr__(self, "tolerance", None if self.tolerance is None else _num(self.tolerance))

    def key(self):
        return (self.check, _params_str(self.params))

    @property
    def failed(self) -> bool:
        return self.verdict == VIOLATED


def _num(x):
    if isinstance(x, (bool, int)):
        return x
    return float(x)


def assertion(check, params, measured, reference, ok, tolerance, anchor, note="") -> Row:
    return Row(check, params, measured, reference, HOLDS if ok else VIOLATED, tolerance, anchor, note)


def monitor(check, params, measured, reference, anchor, note="", tolerance=None) -> Row:
    return Row(check, params, measured, reference, MONITORED, tolerance, anchor, note)


@dataclass
class DiagnosticsReport:
    rows: list[Row] = field(default_factory=list)
    header: list[str] = field(default_factory=lambda: [NORM_NOTE])

    def extend(self, rows: Iterable[Row]):
        self.rows.extend(rows)
        return self

    def sorted(self) -> "DiagnosticsReport":
        return DiagnosticsReport(sorted(self.rows, key=Row.key), list(self.header))

    @property
    def violated(self) -> list[Row]:
        return [r for r in self.rows if r.failed]

    @property
    def ok(self) -> bool:
        return not self.violated

    def by_check(self, name: str) -> list[Row]:
        return [r for r in self.rows if r.check == name]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self.header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "params", "measured", "reference", "verdict", "tolerance", "anchor", "note"])
        for r in self.sorted().rows:
            w.writerow([r.check, _params_str(r.params), fmt(r.measured), fmt(r.reference),
                        r.verdict, fmt(r.tolerance), r.anchor, r.note])
        return buf.getvalue()

    def summary(self) -> dict:
        rows = self.sorted().rows
        counts = {v: sum(r.verdict == v for r in rows) for v in VERDICTS}
        return {
            "ok": self.ok,
            "counts": counts,
            "header": list(self.header),
            "violated": [{"check": r.check, "params": _params_str(r.params),
                          "measured": fmt(r.measured), "reference": fmt(r.reference)}
                         for r in rows if r.failed],
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"
