"""
Scenario files: what to reduce, where to sample and which checks to run.

Built-in scenarios live as JSON next to this module; any other path given on
the command line is parsed with the same models.
"""

import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from twistred.constants import DEFAULT_CHECK_POINTS, DEFAULT_POINTS, DEFAULT_TRIALS, PRECISION
from twistred.core.exceptions import ScenarioError
from twistred.core.logging import logger

Entries = List[List[float]]  # upper-triangle (i, j, re, im)

EXTRAS = (
    "basis-change",
    "charges",
    "collinearity",
    "common-root",
    "horizontal-dim",
    "normalization",
    "norm-identity",
    "pfaffian",
    "pipeline",
    "probe",
    "subtori",
    "zero-bound",
)


class BaseScenarioModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class MatrixSpec(BaseScenarioModel):
    """Either explicit entries or a random draw from the scenario seed."""

    entries: Optional[Entries] = None
    random: Optional[Literal["generic", "lt"]] = None
    scale: Optional[List[float]] = Field(
        None, min_length=2, max_length=2, description="[re, im] of the LT multiple"
    )

    @model_validator(mode="after")
    def exactly_one_source(self):
        if (self.entries is None) == (self.random is None):
            raise ValueError("matrix needs exactly one of 'entries' or 'random'")
        return self


class SkewTwist(BaseScenarioModel):
    type: Literal["skew"] = "skew"
    matrix: MatrixSpec


class GramSchmidtTwist(BaseScenarioModel):
    type: Literal["gram-schmidt"] = "gram-schmidt"
    first: Optional[MatrixSpec] = None
    second: Optional[MatrixSpec] = None
    orthogonalize: bool = True

    @model_validator(mode="after")
    def both_or_neither(self):
        if (self.first is None) != (self.second is None):
            raise ValueError("give both matrices or neither (random generic pair)")
        return self


class HirzebruchTwist(BaseScenarioModel):
    type: Literal["hirzebruch"] = "hirzebruch"
    n: int


class VeroneseTwist(BaseScenarioModel):
    type: Literal["veronese"] = "veronese"
    n: int = Field(..., ge=1, le=2)
    matrix: MatrixSpec


TwistSpec = Union[SkewTwist, GramSchmidtTwist, HirzebruchTwist, VeroneseTwist]


class ProbeSpec(BaseScenarioModel):
    lambdas: List[float] = Field(..., min_length=4, max_length=4)
    z1: List[List[float]] = Field(..., min_length=2, max_length=2)  # [re, im] pairs
    eps: List[float] = Field(default_factory=lambda: [1e-2, 1e-3, 1e-4, 1e-5, 1e-6])

    @field_validator("lambdas")
    def distinct_nonzero(cls, v):
        if len(set(v)) != len(v) or 0 in v:
            raise ValueError("probe eigenvalues must be distinct and nonzero")
        return v


class Scenario(BaseScenarioModel):
    name: str = Field(..., pattern=r"^[a-zA-Z0-9_-]+$", min_length=1, max_length=100)
    description: str = ""
    N: int = Field(..., ge=2)
    charges: List[List[int]] = Field(..., min_length=1)
    level: List[float] = Field(..., min_length=1)
    twist: TwistSpec = Field(discriminator="type")
    normalize: bool = False

    points: int = Field(DEFAULT_POINTS, ge=1)
    trials: int = Field(DEFAULT_TRIALS, ge=1)
    check_points: int = Field(DEFAULT_CHECK_POINTS, ge=1)
    seed: int = 0
    tolerance: Optional[float] = Field(None, gt=0)
    precision: str = PRECISION

    singular_floor: Optional[float] = Field(None, ge=0)
    zero_search_starts: Optional[int] = Field(None, ge=0)
    symbolic_basic: bool = False
    measure_domega: bool = True
    finite_difference: Literal["all", "twist"] = "all"
    intermediate: bool = True
    audit: Optional[bool] = None  # default: only with two or more twists
    torsion: bool = False
    lt: bool = False
    extras: List[str] = Field(default_factory=list)
    probe: Optional[ProbeSpec] = None
    basis_change: Optional[List[List[float]]] = None

    @field_validator("precision")
    def only_complex_double(cls, v):
        if v != PRECISION:
            raise ValueError(f"precision '{v}' is not supported, only '{PRECISION}'")
        return v

    @field_validator("extras")
    def known_extras(cls, v):
        unknown = sorted(set(v) - set(EXTRAS))
        if unknown:
            raise ValueError(f"unknown extras {unknown}; known: {list(EXTRAS)}")
        return v

    @model_validator(mode="after")
    def consistent_shapes(self):
        if any(len(row) != self.N for row in self.charges):
            raise ValueError(f"every charge row must have N = {self.N} entries")
        if len(self.level) != len(self.charges):
            raise ValueError("level must have one entry per torus generator")
        if "probe" in self.extras and self.probe is None:
            raise ValueError("extra 'probe' needs a 'probe' section")
        if (self.torsion or self.lt) and (self.N != 4 or not isinstance(self.twist, SkewTwist)):
            raise ValueError("torsion checks need a single skew twist on C^4")
        return self

    @property
    def s(self) -> int:
        return len(self.charges)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json", exclude_none=True), indent=2, sort_keys=True) + "\n"


def get_scenario_dir() -> Path:
    # __file__: twistred/scenario.py
    # dst:      twistred/scenarios
    return Path(__file__).parent / "scenarios"


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        return Scenario.model_validate_json(text)
    except ValidationError as e:
        raise ScenarioError(f"Invalid scenario {source}:\n{e}") from e


def load_scenario_file(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"Scenario file {path} does not exist")
    return parse_scenario(path.read_text(encoding="utf-8"), str(path))


def list_scenarios() -> Dict[str, Scenario]:
    """Built-in registry, keyed and sorted by name."""
    registry: Dict[str, Scenario] = {}
    for path in sorted(get_scenario_dir().glob("*.json")):
        scenario = load_scenario_file(path)
        if scenario.name in registry:
            raise ScenarioError(f"Duplicate scenario name '{scenario.name}' in {path}")
        registry[scenario.name] = scenario
    logger.debug(f"Loaded {len(registry)} built-in scenarios")
    return registry


def resolve_scenario(name_or_path: str) -> Scenario:
    """A registry name, or else a path to a scenario JSON file."""
    registry = list_scenarios()
    if name_or_path in registry:
        return registry[name_or_path]
    path = Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        return load_scenario_file(path)
    raise ScenarioError(
        f"Unknown scenario '{name_or_path}'. Available: {', '.join(registry)}"
    )
