"""Check reports: records, verdicts and lossless JSON round-trips."""

from __future__ import annotations

import json
import math
import platform
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__

SCHEMA = 1


@dataclass(frozen=True)
class CheckRecord:
    name: str
    anchor: str
    residual: float
    tolerance: float
    precision: str = "double"
    points: int = 1
    negative: bool = False
    informational: bool = False

    @property
    def passed(self) -> bool:
        if math.isnan(self.residual):
            return False
        if self.negative:
            return self.residual >= self.tolerance
        return self.residual <= self.tolerance

    @property
    def status(self) -> str:
        if self.passed:
            return "pass"
        return "known-fail" if self.informational else "FAIL"


def environment_stamp() -> dict:
    return {
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


@dataclass
class CheckReport:
    command: str
    model_id: str
    seed: int
    samples: int
    records: list[CheckRecord] = field(default_factory=list)
    options: dict = field(default_factory=dict)
    environment: dict = field(default_factory=environment_stamp)
    schema: int = SCHEMA

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records if not r.informational)

    @property
    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed and not r.informational]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self) -> str:
        # repr-level floats: json emits the shortest round-trip form
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        recs = [CheckRecord(**r) for r in d["records"]]
        return cls(d["command"], d["model_id"], d["seed"], d["samples"], recs,
                   d.get("options", {}), d["environment"], d["schema"])

    @classmethod
    def from_json(cls, text: str) -> "CheckReport":
        return cls.from_dict(json.loads(text))

    def table(self) -> str:
        w = max([len(r.name) for r in self.records] + [5])
        lines = [f"{self.command} {self.model_id}  seed={self.seed}  samples={self.samples}",
                 f"{'check':<{w}}  {'residual':>10}  {'tol':>8}  {'prec':<8}  status"]
        for r in self.records:
            op = ">=" if r.negative else "<="
            lines.append(f"{r.name:<{w}}  {r.residual:10.3e}  {op}{r.tolerance:<7.0e} {r.precision:<8}  {r.status}")
        lines.append("ALL PASS" if self.passed else
                     "FAILED: " + ", ".join(r.name for r in self.failures))
        return "\n".join(lines)
