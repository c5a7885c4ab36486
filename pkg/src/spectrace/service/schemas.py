"""Pydantic request/response models for the service endpoints."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

Complex2 = list  # [re, im]


class FormModel(BaseModel):
    p: list[Complex2] = Field(default_factory=list)
    q: list[Complex2] = Field(default_factory=list)


class AtomModel(BaseModel):
    x: float
    h: Complex2


class PieceModel(BaseModel):
    a: float
    b: float
    value: Complex2


class MeasureModel(BaseModel):
    atoms: list[AtomModel] = Field(default_factory=list)
    density: list[PieceModel] = Field(default_factory=list)


class RunModel(BaseModel):
    annuli: list[int] = Field(default=[0, 40])
    tolerance: float = 5e-2
    oracle: str = "all"
    out: str = "."


class ProblemConfigModel(BaseModel):
    n: int
    forms: list[FormModel]
    measure: MeasureModel = Field(default_factory=MeasureModel)
    run: RunModel = Field(default_factory=RunModel)


class AnalyzeResponse(BaseModel):
    status: str
    exit_code: int
    report: Optional[dict] = None
    detail: str = ""


class SpectrumResponse(BaseModel):
    status: str
    exit_code: int
    csv: str = ""
    count: int = 0
    detail: str = ""


class TraceResponse(BaseModel):
    status: str
    exit_code: int
    estimate: Optional[dict] = None
    csv: str = ""
    detail: str = ""


class GreenOracleValues(BaseModel):
    closed_form_frak_C: Optional[Complex2] = None
    lemma51_frak_C: Optional[Complex2] = None


class GreenResponse(BaseModel):
    status: str
    exit_code: int
    csv: str = ""
    limit: Optional[Complex2] = None
    error_bar: Optional[float] = None
    target: Optional[Complex2] = None
    verdict: str = "inconclusive"
    oracles: GreenOracleValues = Field(default_factory=GreenOracleValues)
    detail: str = ""


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class SeedCheckResponse(BaseModel):
    status: str
    exit_code: int
    checks: list[CheckResult] = Field(default_factory=list)
    detail: str = ""


class HealthResponse(BaseModel):
    status: str
    version: str
