"""Pass/fail records for algebraic identity checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .novikov import NovikovScalar, format_fraction


def _residual_json(r):
    if isinstance(r, NovikovScalar):
        return r.to_json()
    if isinstance(r, Fraction):
        return format_fraction(r)
    return r


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of checking one identity.

    ``violations`` holds ``(index tuple, residual)`` pairs; the identity
    passes exactly when there are none.
    """

    identity: str
    violations: tuple[tuple[tuple, object], ...] = field(default=())
    cutoff: Fraction | None = None

    @property
    def status(self) -> str:
        return "pass" if not self.violations else "fail"

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.passed

    def first(self):
        return self.violations[0] if self.violations else None

    def summary(self) -> str:
        if self.passed:
            return f"{self.identity}: pass"
        idx, res = self.violations[0]
        more = f" (+{len(self.violations) - 1} more)" if len(self.violations) > 1 else ""
        return f"{self.identity}: fail at {idx} residual {res}{more}"

    def to_json(self) -> dict:
        return {
            "identity": self.identity,
            "status": self.status,
            "cutoff": None if self.cutoff is None else format_fraction(self.cutoff),
            "violations": [{"index": list(idx), "residual": _residual_json(r)} for idx, r in self.violations],
        }
