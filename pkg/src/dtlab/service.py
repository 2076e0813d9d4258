"""FastAPI service wrapping the experiment runner.

One POST endpoint per command; request bodies are validated by pydantic
models mirroring the runner's parameter schema, responses carry the full
run report.  Start with ``uvicorn dtlab.service:app`` (or ``dtlab serve``).
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .errors import PrecisionError, UsageError
from .runner import RunConfig, execute

app = FastAPI(title="dtlab", version=__version__,
              description="Verification laboratory for DT-operator free probability")


class RecordModel(BaseModel):
    name: str
    expected: str
    actual: str
    tolerance: str
    passed: bool
    provenance: str


class ReportModel(BaseModel):
    schema_version: str
    tool_version: str
    command: str
    config: dict
    records: list[RecordModel]
    passed: bool
    wall_clock_s: float
    artifacts: dict = {}


class VerifyRequest(BaseModel):
    suite: str = "all"
    t: Optional[str] = None
    csq: Optional[str] = None
    pairs: Optional[list[list[str]]] = None
    max_len: Optional[int] = None
    degree: Optional[int] = None
    a: Optional[str] = None
    b: Optional[str] = None
    seed: int = Field(default=0, ge=0, lt=2 ** 64)


class MomentsRequest(BaseModel):
    mu: str = "delta:0"
    c: str = "1"
    n: int = Field(default=500, ge=8)
    reps: int = Field(default=200, ge=2)
    words: list[str] = ["ZZ*", "ZZ*ZZ*", "ZZ"]
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    bias_const: float = 1.0


class FisherRequest(BaseModel):
    t: str = "1/4"
    csq: str = "3/4"
    seed: int = Field(default=0, ge=0, lt=2 ** 64)


class DimensionRequest(BaseModel):
    csq: str = "3/4"
    t_grid: Optional[list[str]] = None
    analytic_flag: bool = False
    eps_sq: str = "1/4"
    seed: int = Field(default=0, ge=0, lt=2 ** 64)


class SpectraRequest(BaseModel):
    n: int = Field(default=2000, ge=2)
    reps: int = Field(default=2, ge=2)
    cutout_n: int = 1024
    cutout_k: list[int] = [4, 16, 64]
    kaplansky_dim: int = 16
    kaplansky_pairs: int = 100
    pencil_count: int = 50
    pencil_max_dim: int = 20
    gammas: Optional[list[str]] = None
    point_spectrum_n: int = 128
    seed: int = Field(default=0, ge=0, lt=2 ** 64)


def _run(command: str, params: dict) -> ReportModel:
    params = {k: v for k, v in params.items() if v is not None}
    try:
        report = execute(RunConfig(command, params))
    except UsageError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    except PrecisionError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return ReportModel(**report.to_dict())


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/verify", response_model=ReportModel)
def verify(req: VerifyRequest):
    return _run("verify", req.model_dump())


@app.post("/moments", response_model=ReportModel)
def moments(req: MomentsRequest):
    return _run("moments", req.model_dump())


@app.post("/fisher", response_model=ReportModel)
def fisher(req: FisherRequest):
    return _run("fisher", req.model_dump())


@app.post("/dimension", response_model=ReportModel)
def dimension(req: DimensionRequest):
    return _run("dimension", req.model_dump())


@app.post("/spectra", response_model=ReportModel)
def spectra(req: SpectraRequest):
    return _run("spectra", req.model_dump())
