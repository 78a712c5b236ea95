import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from sensipy.exceptions import ValidationError

logger = logging.getLogger(__name__)

LABELS = ("exact", "upper bound", "MC estimate")
DIRECTIONS = ("upper", "lower", "equal")
NOT_BOUNDABLE = "not boundable"


@dataclass(frozen=True)
class Quantity:
    """A reported number with its kind.

    Attributes:
        name: identifier, e.g. "input_distance"
        value: the number
        label: "exact", "upper bound" or "MC estimate"
        stderr: Monte Carlo standard error, if any
        level: truncation level the number belongs to, if any
    """
    name: str
    value: float
    label: str
    stderr: Optional[float] = None
    level: Optional[int] = None

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValidationError(f"quantity label must be one of {LABELS}, got {self.label!r}")

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "label": self.label,
                "stderr": self.stderr, "level": self.level}


@dataclass(frozen=True)
class Check:
    """Comparison of an observed value with a bound.
    An "upper" check passes if observed <= bound + slack * stderr + tolerance,
    a "lower" check mirrors it and an "equal" check needs both. A check
    without a bound is reported as not boundable and does not fail.
    >>> Check("gap", 1.2, 1.0, stderr=0.1).passed
    True
    >>> Check("gap", 1.2, 1.0, stderr=0.0).status
    'fail'
    >>> Check("gap", 0.3, None, note="esssup").status
    'not boundable'
    """
    name: str
    observed: float
    bound: Optional[float]
    stderr: float = 0.0
    slack: float = 3.0
    tolerance: float = 0.0
    direction: str = "upper"
    note: str = ""
    level: Optional[int] = None

    def __post_init__(self) -> None:
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")

    @property
    def margin(self) -> float:
        return self.slack * self.stderr + self.tolerance

    @property
    def status(self) -> str:
        if self.bound is None:
            return NOT_BOUNDABLE
        if self.direction == "upper":
            ok = self.observed <= self.bound + self.margin
        elif self.direction == "lower":
            ok = self.observed >= self.bound - self.margin
        else:
            ok = abs(self.observed - self.bound) <= self.margin
        return "pass" if ok else "fail"

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        return {"name": self.name, "observed": self.observed, "bound": self.bound,
                "stderr": self.stderr, "slack": self.slack, "tolerance": self.tolerance,
                "direction": self.direction, "status": self.status, "note": self.note,
                "level": self.level}


@dataclass
class StudyReport:
    """Outcome of a study.

    Attributes:
        study: study name
        config: resolved configuration
        version: package version
        quantities: reported numbers
        checks: bound comparisons
        rows: per-sample table rows, all with the same keys in the same order
        notes: free-form remarks, e.g. estimated constants inside a bound
    """
    study: str
    config: Dict[str, Any]
    version: str
    quantities: List[Quantity] = field(default_factory=list)
    checks: List[Check] = field(default_factory=list)
    rows: List[Dict[str, Any]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def add(self, name: str, value: float, label: str,
            stderr: Optional[float] = None, level: Optional[int] = None) -> Quantity:
        quantity = Quantity(name, float(value), label, _optional(stderr), level)
        self.quantities.append(quantity)
        return quantity

    def check(self, name: str, observed: float, bound: Optional[float], **kwargs) -> Check:
        check = Check(name, float(observed), _optional(bound), **kwargs)
        if not check.passed:
            logger.warning("check %s failed: observed %.6g against bound %.6g",
                           name, check.observed, check.bound)
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def quantity(self, name: str, level: Optional[int] = None) -> Quantity:
        for q in self.quantities:
            if q.name == name and q.level == level:
                return q
        raise KeyError(name if level is None else f"{name} at level {level}")

    def for_level(self, level: int) -> "StudyReport":
        """Part of a truncation report that belongs to one level K."""
        return StudyReport(
            self.study, self.config, self.version,
            [q for q in self.quantities if q.level == level],
            [c for c in self.checks if c.level == level],
            [r for r in self.rows if r.get("level") == level],
            list(self.notes))

    def to_dict(self) -> dict:
        """Summary without the per-sample rows."""
        return {
            "study": self.study,
            "version": self.version,
            "passed": self.passed,
            "config": self.config,
            "quantities": [q.to_dict() for q in self.quantities],
            "checks": [c.to_dict() for c in self.checks],
            "notes": list(self.notes),
        }


def _optional(value: Optional[float]) -> Optional[float]:
    return None if value is None else float(np.asarray(value))


if __name__ == "__main__":
    import doctest
    doctest.testmod()
