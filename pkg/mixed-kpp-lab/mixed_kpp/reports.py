"""Verification reports shared by every checker and written as JSON by the CLI."""
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List

import numpy as np


@dataclass
class Check:
    name: str
    stat: float
    tol: float
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def at_most(cls, name: str, stat: float, tol: float, **details) -> "Check":
        stat = float(stat)
        return cls(name, stat, float(tol), bool(math.isfinite(stat) and stat <= tol), details)

    @classmethod
    def at_least(cls, name: str, stat: float, tol: float, **details) -> "Check":
        stat = float(stat)
        return cls(name, stat, float(tol), bool(math.isfinite(stat) and stat >= tol), details)

    @classmethod
    def record(cls, name: str, stat: float, **details) -> "Check":
        """A measured value with no acceptance threshold; always passes."""
        return cls(name, float(stat), float("nan"), True, details)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "stat": self.stat,
            "tol": self.tol,
            "pass": self.passed,
            "details": self.details,
        }


class Report:
    def __init__(self, name: str, checks: List[Check] = None, **data):
        self.name = name
        self.checks: List[Check] = list(checks or [])
        self.data: Dict[str, Any] = dict(data)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "Report", prefix: str = None) -> None:
        for c in other.checks:
            name = f"{prefix}.{c.name}" if prefix else c.name
            self.checks.append(Check(name, c.stat, c.tol, c.passed, c.details))

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(f"no check named {name!r} in report {self.name!r}")

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "pass": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "data": self.data,
        }


class ReportEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, (Report, Check)):
            return o.to_dict()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, Enum):
            return o.value
        if hasattr(o, "to_dict"):
            return o.to_dict()
        return super().default(o)


def dumps(obj) -> str:
    # NaN/inf are legal stats (unbounded tolerances); json emits them as NaN/Infinity
    return json.dumps(obj, cls=ReportEncoder, sort_keys=True, indent=2)
