import json
import math
from typing import Any, Dict, List, Literal, Optional

from packaging.version import Version
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from twistred import __version__

# boolean checks are encoded as residual 0 (holds) or 1 (fails) against this
BOOLEAN_TOLERANCE = 0.5


class BaseReportModel(BaseModel):
    """
    Base model for everything written to a report.
    """

    model_config = ConfigDict(populate_by_name=True)


class CheckEntry(BaseReportModel):
    """One named residual with its verdict and sampling provenance.

    ``kind="measure"`` entries carry data only and never affect the verdict.
    """

    name: str
    kind: Literal["check", "measure"] = "check"
    residual: Optional[float] = None
    tolerance: Optional[float] = None
    passed: Optional[bool] = None
    points: int = 0
    trials: int = 0
    detail: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def derive_verdict(self):
        if self.kind == "measure":
            self.passed = None
            return self
        if self.residual is None or self.tolerance is None:
            raise ValueError(f"check '{self.name}' needs a residual and a tolerance")
        self.passed = bool(
            not math.isnan(self.residual) and self.residual <= self.tolerance
        )
        return self

    @classmethod
    def check(
        cls, name: str, residual: float, tolerance: float, points: int = 0, trials: int = 0, **detail
    ) -> "CheckEntry":
        return cls(
            name=name,
            residual=float(residual),
            tolerance=float(tolerance),
            points=points,
            trials=trials,
            detail=detail,
        )

    @classmethod
    def boolean(cls, name: str, holds: bool, **detail) -> "CheckEntry":
        return cls(
            name=name,
            residual=0.0 if holds else 1.0,
            tolerance=BOOLEAN_TOLERANCE,
            detail=detail,
        )

    @classmethod
    def measure(cls, name: str, value: Optional[float] = None, points: int = 0, **detail) -> "CheckEntry":
        return cls(
            name=name,
            kind="measure",
            residual=None if value is None else float(value),
            points=points,
            detail=detail,
        )


class EnvironmentStamp(BaseReportModel):
    seed: int
    precision: str = "complex128"
    threads: int = 1
    tolerance_overrides: Dict[str, Any] = Field(default_factory=dict)
    version: str = __version__

    @field_validator("version")
    def validate_version(cls, v):
        Version(v)
        return v


class VerificationReport(BaseReportModel):
    scenario: Dict[str, Any] = Field(default_factory=dict)
    entries: List[CheckEntry] = Field(default_factory=list)
    environment: EnvironmentStamp
    wall_time: Optional[float] = None

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries if e.kind == "check")

    def add(self, entry: CheckEntry) -> CheckEntry:
        self.entries.append(entry)
        return entry

    def extend(self, entries: List[CheckEntry]):
        self.entries.extend(entries)

    def failures(self) -> List[CheckEntry]:
        return [e for e in self.entries if e.kind == "check" and not e.passed]

    def first_failure(self) -> Optional[CheckEntry]:
        failures = self.failures()
        return failures[0] if failures else None

    def get(self, name: str) -> CheckEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_json(self) -> str:
        """Deterministic JSON text; wall time only when it was recorded."""
        data = self.model_dump(mode="json")
        data["passed"] = self.passed
        if data.get("wall_time") is None:
            data.pop("wall_time", None)
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
