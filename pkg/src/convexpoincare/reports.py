"""Verification reports shared by the checkers and the command line."""

import math
from dataclasses import dataclass, field


def _jsonable(value):
    import numpy as np

    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if hasattr(value, "to_dict"):
        return _jsonable(value.to_dict())
    return value


# details that combine by taking the maximum when reports are merged
MAX_DETAILS = ("max_value", "worst_ratio", "empirical_ratio", "max_defect")


@dataclass
class VerificationReport:
    """Outcome of checking one inequality on a batch of instances.

    ``worst_slack`` is the smallest ``rhs - lhs`` seen (``inf`` when nothing
    was checked); an instance is a violation when its slack is below
    ``-tolerance``.
    """

    inequality: str
    tolerance: float = 1e-8
    instances: int = 0
    worst_slack: float = math.inf
    violations: list = field(default_factory=list)
    vacuous: int = 0
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return not self.violations

    def add(self, lhs, rhs, payload=None):
        """Record one instance; returns its slack."""
        slack = float(rhs) - float(lhs)
        self.instances += 1
        if slack < self.worst_slack or math.isnan(slack):
            self.worst_slack = slack
            self.details["worst_instance"] = {"lhs": lhs, "rhs": rhs, **(payload or {})}
        if not slack >= -self.tolerance:
            self.violations.append({"lhs": lhs, "rhs": rhs, "slack": slack, **(payload or {})})
        return slack

    def add_vacuous(self):
        self.instances += 1
        self.vacuous += 1

    def merge(self, other):
        """Combine two reports of the same inequality (order-independent up to ties)."""
        if other.inequality != self.inequality:
            raise ValueError("cannot merge reports of different inequalities")
        out = VerificationReport(self.inequality, max(self.tolerance, other.tolerance))
        out.instances = self.instances + other.instances
        out.vacuous = self.vacuous + other.vacuous
        out.violations = self.violations + other.violations
        first, second = (self, other) if self.worst_slack <= other.worst_slack else (other, self)
        out.worst_slack = first.worst_slack
        out.details = {**second.details, **first.details}
        for key in MAX_DETAILS:
            vals = [r.details[key] for r in (self, other) if key in r.details]
            if vals:
                out.details[key] = max(vals)
        return out

    def reindex(self, index):
        """Set the ``index`` field of every stored payload (single-instance reports)."""
        for v in self.violations:
            v["index"] = index
        if "worst_instance" in self.details:
            self.details["worst_instance"]["index"] = index
        return self

    def to_dict(self):
        return _jsonable({
            "inequality": self.inequality,
            "instances": self.instances,
            "vacuous": self.vacuous,
            "tolerance": self.tolerance,
            "worst_slack": self.worst_slack,
            "passed": self.passed,
            "violations": self.violations,
            "details": self.details,
        })
