import hashlib
import json
import tomllib
from pathlib import Path
from typing import Annotated, Any, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, field_validator, model_validator

from app.core.curves import LaurentMap, ParamCurve, ellipse, from_laurent
from app.core.errors import ConfigurationError


def parse_complex(value: Any) -> complex:
    """Accept a number, a "re,im" or Python complex string, or a [re, im] pair"""
    if isinstance(value, complex):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex pair must have two entries, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        text = value.strip().replace(" ", "")
        if "," in text:
            re_part, im_part = text.split(",", 1)
            return complex(float(re_part), float(im_part))
        return complex(text)
    raise ValueError(f"cannot read {value!r} as a complex number")


ComplexLiteral = Annotated[complex, BeforeValidator(parse_complex)]


# ============ Geometry Schemas ============

class EllipseBoundary(BaseModel):
    kind: Literal["ellipse"] = "ellipse"
    semi_major: float = Field(..., gt=0)
    semi_minor: float = Field(..., gt=0)

    @model_validator(mode="after")
    def check_axes(self):
        if self.semi_major < self.semi_minor:
            raise ValueError("semi_major must be >= semi_minor")
        return self

    def curve(self, nodes: int) -> ParamCurve:
        return ellipse(self.semi_major, self.semi_minor, nodes)


class LaurentLiteral(BaseModel):
    kind: Literal["laurent"] = "laurent"
    a1: ComplexLiteral
    a0: ComplexLiteral = 0j
    negative: List[ComplexLiteral] = Field(default_factory=list)
    label: str = ""

    def to_map(self) -> LaurentMap:
        return LaurentMap(self.a1, self.a0, tuple(self.negative))

    def curve(self, nodes: int) -> ParamCurve:
        return from_laurent(self.to_map(), nodes)


OuterBoundary = Annotated[Union[EllipseBoundary, LaurentLiteral], Field(discriminator="kind")]


# ============ Run Schemas ============

class CenterRange(BaseModel):
    start: float
    stop: float
    count: int = Field(..., ge=0)


class SweepConfig(BaseModel):
    centers: List[ComplexLiteral] = Field(default_factory=list)
    center_range: Optional[CenterRange] = None
    noises: List[float] = Field(default_factory=list)

    @field_validator("noises")
    @classmethod
    def check_noises(cls, value):
        if any(not 0.0 <= v <= 1.0 for v in value):
            raise ValueError("sweep noise levels must lie in [0, 1]")
        return value

    def center_grid(self) -> List[complex]:
        grid = list(self.centers)
        if self.center_range is not None:
            r = self.center_range
            grid.extend(complex(x) for x in np.linspace(r.start, r.stop, r.count))
        return grid


class RunConfig(BaseModel):
    """Everything one experiment needs; CLI flags override document fields before validation"""

    model_config = ConfigDict(extra="forbid")

    name: str = "run"
    outer: OuterBoundary
    cavity: Optional[LaurentLiteral] = None
    nodes: int = 256
    inner_nodes: Optional[int] = None
    order: int = Field(8, ge=2, le=16)
    center: ComplexLiteral = 0j
    noise: float = Field(0.0, ge=0.0, le=1.0)
    seeds: List[int] = Field(default_factory=lambda: [0])
    variant: Literal["literal", "corrected"] = "corrected"
    output_dir: str = "results"
    stability_threshold: float = Field(0.5, gt=0.0)
    sweep: SweepConfig = Field(default_factory=SweepConfig)

    @field_validator("cavity", mode="before")
    @classmethod
    def none_cavity(cls, value):
        if isinstance(value, str) and value.strip().lower() == "none":
            return None
        return value

    @field_validator("nodes", "inner_nodes")
    @classmethod
    def check_nodes(cls, value):
        if value is not None and (value % 2 != 0 or value < 16):
            raise ValueError(f"node count must be even and >= 16, got {value}")
        return value

    @field_validator("seeds")
    @classmethod
    def check_seeds(cls, value):
        if not value:
            raise ValueError("at least one seed is required")
        return value

    def config_hash(self) -> str:
        """Hash of everything that determines the numbers (the output directory does not)"""
        canonical = json.dumps(self.model_dump(mode="json", exclude={"output_dir"}), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def outer_curve(self) -> ParamCurve:
        return self.outer.curve(self.nodes)

    def cavity_map(self) -> Optional[LaurentMap]:
        return self.cavity.to_map() if self.cavity is not None else None

    def cavity_curve(self) -> Optional[ParamCurve]:
        if self.cavity is None:
            return None
        return self.cavity.curve(self.inner_nodes or self.nodes)

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)


def load_run_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Read a TOML or JSON run document and apply CLI overrides"""
    document: dict = {}
    if path is not None:
        file = Path(path)
        try:
            text = file.read_text(encoding="utf-8")
            document = json.loads(text) if file.suffix == ".json" else tomllib.loads(text)
        except (OSError, tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read config {path}: {e}") from e
    document.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig.model_validate(document)


# ============ Output Schemas ============

class MeasurementMetadata(BaseModel):
    config_hash: str
    name: str
    order: int
    scale: float
    center: List[float]
    nodes: int
    inner_nodes: Optional[int] = None
    has_cavity: bool
    outer_capacity: float
    cavity_capacity: Optional[float] = None
    conditions: dict = Field(default_factory=dict)

