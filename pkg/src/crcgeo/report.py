"""Check reports shared by the verification suites and the CLI.

A report is a list of named checks, each pass/fail/inconclusive with a
details mapping.  Aggregation: fail dominates, then inconclusive, then
pass.  Serialization is deterministic (sorted keys); wall-clock timing is
carried in a separate field so byte-level comparisons can drop it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass
class Check:
    name: str
    status: str
    details: dict = field(default_factory=dict)
    timing_s: float | None = None

    def to_dict(self) -> dict:
        out = {"name": self.name, "status": self.status, "details": self.details}
        if self.timing_s is not None:
            out["timing_s"] = self.timing_s
        return out


@dataclass
class Report:
    title: str
    checks: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    timing_s: float | None = None

    def add(self, name: str, ok, details: dict | None = None) -> Check:
        if isinstance(ok, str):
            status = ok
        else:
            status = PASS if ok else FAIL
        check = Check(name, status, details or {})
        self.checks.append(check)
        return check

    @property
    def overall(self) -> str:
        statuses = [c.status for c in self.checks]
        if FAIL in statuses:
            return FAIL
        if INCONCLUSIVE in statuses:
            return INCONCLUSIVE
        return PASS

    def to_dict(self, include_timing: bool = True) -> dict:
        checks = [c.to_dict() for c in self.checks]
        if not include_timing:
            for c in checks:
                c.pop("timing_s", None)
        out = {
            "title": self.title,
            "config": self.config,
            "checks": checks,
            "overall": self.overall,
        }
        if include_timing and self.timing_s is not None:
            out["timing_s"] = self.timing_s
        return out

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2)

    def to_text(self) -> str:
        lines = [f"== {self.title} =="]
        for c in self.checks:
            lines.append(f"[{c.status.upper():^12}] {c.name}")
            for k in sorted(c.details):
                lines.append(f"    {k}: {c.details[k]}")
        lines.append(f"overall: {self.overall}")
        return "\n".join(lines)

    def failed_checks(self) -> list:
        return [c for c in self.checks if c.status == FAIL]
