"""Run configuration, report assembly and canonical serialization.

A report body is deterministic for a fixed configuration and seed; wall-clock
figures live under the separate ``timing`` key so bodies can be compared
byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import __version__
from .certify import FAIL, PASS, UNKNOWN
from .germ import SEADE_CONVENTION, MapGerm

__all__ = ["RunConfig", "Report", "to_jsonable", "dumps", "exit_code_for", "ERROR", "NOT_APPLICABLE"]

ERROR = "ERROR"
NOT_APPLICABLE = "NOT_APPLICABLE"


@dataclass
class RunConfig:
    germ: str
    r_in: float = 0.05
    r_out: float = 0.1
    halvings: int = 4
    rho: float = 0.05
    delta: float = 0.05
    depth: int = 32
    tol: float = 1e-8
    phases: int = 8
    points: int = 16
    grid: int = 16
    seed: int = 0
    eps: float = 0.1
    workers: int = 1
    force: bool = False
    out: str | None = None

    def __post_init__(self):
        if not (self.r_in > 0 and self.r_out > 0):
            raise ValueError("radii must be positive")
        if not self.r_in < self.r_out:
            raise ValueError(f"r_in = {self.r_in} must be smaller than r_out = {self.r_out}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def to_jsonable(v: Any) -> Any:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): to_jsonable(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [to_jsonable(u) for u in v]
    if hasattr(v, "to_dict"):
        return to_jsonable(v.to_dict())
    if hasattr(v, "item"):  # numpy scalars
        return to_jsonable(v.item())
    return v


def dumps(doc: dict) -> str:
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=2) + "\n"


@dataclass
class Report:
    command: str
    config: RunConfig
    germ: MapGerm | None = None
    checks: list[dict] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    # checks whose verdict is recorded but does not drive the exit code
    informational: set = field(default_factory=set)

    def add(self, name: str, result: dict, informational: bool = False) -> dict:
        entry = {"name": name, **result}
        self.checks.append(entry)
        if informational:
            self.informational.add(name)
            entry["informational"] = True
        return entry

    def verdicts(self) -> list[str]:
        return [c.get("verdict", ERROR) for c in self.checks if c["name"] not in self.informational]

    def overall(self) -> str:
        vs = self.verdicts()
        if FAIL in vs:
            return FAIL
        if UNKNOWN in vs or ERROR in vs:
            return UNKNOWN
        return PASS

    def body(self) -> dict:
        return {
            "tool": {"name": "milnorfib", "version": __version__},
            "convention": SEADE_CONVENTION,
            "command": self.command,
            "config": self.config.to_dict(),
            "germ": self.germ.to_dict() if self.germ else None,
            "checks": self.checks,
            "artifacts": sorted(self.artifacts),
            "summary": {"verdict": self.overall(), "exit_code": exit_code_for(self.overall())},
        }

    def to_dict(self) -> dict:
        return {**self.body(), "timing": self.timing}

    def write(self, directory: str | Path) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        name = self.germ.name if self.germ else "all"
        path = d / f"{name}-{self.command}-report.json"
        path.write_text(dumps(self.to_dict()))
        return path


def exit_code_for(verdict: str) -> int:
    return {PASS: 0, FAIL: 1}.get(verdict, 2)
