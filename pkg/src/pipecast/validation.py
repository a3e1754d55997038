"""Shared validation report types.

Validators return violations as data rather than raising: a report with no
errors means the input is acceptable, and warnings never block anything.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Violation:
    severity: str  # ERROR or WARNING
    code: str      # stable machine-readable identifier
    subject: str   # id of the offending stage/node/service/config
    message: str

    def __str__(self) -> str:
        return f"{self.severity.upper()} [{self.code}] {self.subject}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, severity: str, code: str, subject: str, message: str) -> None:
        self.violations.append(Violation(severity, code, subject, message))

    def extend(self, other: "ValidationReport") -> None:
        self.violations.extend(other.violations)

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == ERROR]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == WARNING]

    @property
    def ok(self) -> bool:
        """True when the report contains no hard errors (warnings allowed)."""
        return not self.errors

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)
