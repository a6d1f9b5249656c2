"""Experiment configuration: a single JSON document validated by pydantic.

``load_config`` turns syntax and schema problems into :class:`ConfigError`
carrying one human-readable diagnostic per problem (line/column for JSON
syntax, dotted field path for schema violations).
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .discrepancy import DISCREPANCY_NAMES

EXPERIMENTS = ("table1", "table2", "coverage", "rademacher", "bounds", "support-check")

TABLE_DEFAULT_DISCREPANCIES = {
    "table1": ["mmd", "wasserstein", "summary-mean", "kl"],
    "table2": ["mmd", "wasserstein", "summary-cov", "kl"],
}


class ConfigError(ValueError):
    def __init__(self, diagnostics: list[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BoundsSection(_Strict):
    n: int = Field(100, ge=1)
    b: float = Field(1.0, gt=0)
    L: float = Field(1.0, gt=0)
    c_pi: float = Field(1.0, gt=0)
    eps_star: float = Field(0.0, ge=0)
    eps_bar: Optional[float] = Field(None, gt=0)
    R: float = Field(0.0, ge=0)
    R_s: Optional[float] = Field(None, ge=0)
    alpha: float = Field(0.0, ge=0, lt=1)
    K: float = Field(1.0, gt=0)
    nu: float = Field(1.0, gt=0)
    M: Optional[float] = Field(None, gt=0)
    delta: float = Field(0.1, ge=0)
    complexity_source: Literal["plug-in", "closed-form"] = "plug-in"


class SampleSource(_Strict):
    """Either explicit ``values`` or a generated ``normal``/``uniform`` sample."""

    values: Optional[List[List[float]]] = None
    family: Optional[Literal["normal", "uniform"]] = None
    n: Optional[int] = Field(None, ge=1)
    dim: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.values is None) == (self.family is None):
            raise ValueError("give exactly one of 'values' or 'family'")
        if self.family is not None and self.n is None:
            raise ValueError("'n' is required with 'family'")
        return self


class RademacherSection(_Strict):
    sample: SampleSource
    function_class: Literal["rkhs-gaussian", "ks", "sup-norm", "lipschitz"] = "ks"
    bandwidth: float = Field(1.0, gt=0)
    b: float = Field(1.0, gt=0)
    draws: int = Field(256, ge=1)
    exhaustive: Optional[bool] = None


class CoverageSection(_Strict):
    suite: Literal["iid", "blocked", "both"] = "both"
    replicates: int = Field(1000, ge=1)
    iid_n: int = Field(100, ge=2)
    iid_support: int = Field(10, ge=2)
    iid_deltas: List[float] = [0.0, 0.1, 0.2, 0.3]
    blocked_n: int = Field(100, ge=4)
    blocked_theta: float = Field(0.5, gt=-1, lt=1)
    blocked_deltas: List[float] = [0.5, 1.0]
    sign_draws: int = Field(256, ge=1)
    slack: float = Field(0.03, ge=0)


class SupportSection(_Strict):
    n: int = Field(1000, ge=2)
    T: int = Field(2000, ge=1)
    eps: float = Field(0.3, gt=0)
    bandwidth: float = Field(1.0, gt=0)
    prior_sd: float = Field(1.0, gt=0)


class ExperimentConfig(_Strict):
    experiment: Literal["table1", "table2", "coverage", "rademacher", "bounds", "support-check"]
    alphas: List[float] = [0.05, 0.10, 0.15]
    n: int = Field(100, ge=2)
    m: int = Field(100, ge=2)
    T: int = Field(25000, ge=1)
    q: float = Field(0.01, gt=0, le=1)
    replicates: int = Field(50, ge=1)
    discrepancies: Optional[List[str]] = None
    seed: int = Field(0, ge=0)
    output: Optional[str] = None
    workers: Optional[int] = Field(None, ge=1)
    bounds: Optional[BoundsSection] = None
    rademacher: Optional[RademacherSection] = None
    coverage: Optional[CoverageSection] = None
    support: Optional[SupportSection] = None

    @field_validator("alphas")
    @classmethod
    def _alphas(cls, v):
        if not v:
            raise ValueError("at least one contamination level is required")
        for a in v:
            if not 0 <= a < 1:
                raise ValueError(f"contamination level {a} outside [0, 1)")
        return v

    @field_validator("discrepancies")
    @classmethod
    def _known(cls, v):
        if v is None:
            return v
        if not v:
            raise ValueError("at least one discrepancy is required")
        bad = [d for d in v if d not in DISCREPANCY_NAMES]
        if bad:
            raise ValueError(f"unknown discrepancies {bad}; known: {list(DISCREPANCY_NAMES)}")
        return v

    @model_validator(mode="after")
    def _per_experiment(self):
        if self.experiment in ("table1", "table2"):
            if self.n != self.m:
                raise ValueError("table experiments need n == m")
            if self.discrepancies is None:
                self.discrepancies = list(TABLE_DEFAULT_DISCREPANCIES[self.experiment])
        if self.experiment == "rademacher" and self.rademacher is None:
            raise ValueError("experiment 'rademacher' needs a 'rademacher' section")
        if self.experiment == "bounds" and self.bounds is None:
            self.bounds = BoundsSection()
        if self.experiment == "coverage" and self.coverage is None:
            self.coverage = CoverageSection()
        if self.experiment == "support-check" and self.support is None:
            self.support = SupportSection()
        return self


def _format_validation(exc: ValidationError) -> list[str]:
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        out.append(f"field {loc}: {err['msg']}")
    return out


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from None
    if not isinstance(data, dict):
        raise ConfigError([f"{source}: top level must be a JSON object"])
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError([f"{source}: {d}" for d in _format_validation(exc)]) from None


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError([f"{p}: cannot read config ({exc.strerror})"]) from None
    return parse_config(text, str(p))


def json_schema() -> dict:
    return ExperimentConfig.model_json_schema()
