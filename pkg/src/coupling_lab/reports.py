"""Pass/fail reports shared by the exact and the Monte Carlo checks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any


def jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if hasattr(value, "item") and not isinstance(value, (list, tuple, dict)):  # numpy scalar
        value = value.item()
    if isinstance(value, float):
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return value


@dataclass
class TestReport:
    """Outcome of one check.

    ``value`` is the statistic that was compared against ``threshold``;
    ``rows`` holds per-bin or per-cell detail as plain dicts.
    """

    __test__ = False  # keep pytest from collecting this class

    name: str
    passed: bool
    value: Any = None
    threshold: Any = None
    rows: list[dict] = field(default_factory=list)
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": jsonable(self.value),
            "threshold": jsonable(self.threshold),
            "note": self.note,
            "rows": jsonable(self.rows),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


ExactReport = TestReport


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def format_table(reports: list[TestReport]) -> str:
    """Human-readable summary, one line per report."""
    header = f"{'check':<34} {'result':<6} {'value':>14} {'threshold':>14}"
    lines = [header, "-" * len(header)]
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"{r.name:<34} {status:<6} {_fmt(r.value):>14} {_fmt(r.threshold):>14}"
        )
    return "\n".join(lines) + "\n"
