"""FastAPI service wrapping the core package."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI

from spectrace import __version__, runners
from spectrace.bc import DependentForms
from spectrace.config import ProblemConfig
from spectrace.determinants import NotRegular, OddOrderUnsupported
from spectrace.green import NearSpectrum, PoleOnPath, QuadratureNotConverged
from spectrace.measure import UnsupportedEndpointDerivative
from spectrace.service import schemas
from spectrace.spectrum import ContourTooClose, CountMismatch
from spectrace.trace import NotConverged, PairingMismatch

# exit codes shared with the CLI: 0 ok, 1 input error, 2 not regular,
# 3 unsupported measure, 4 numerical non-convergence
_NUMERICAL = (CountMismatch, ContourTooClose, QuadratureNotConverged,
              NotConverged, PairingMismatch, NearSpectrum, PoleOnPath)
_INPUT = (ValueError, DependentForms, OddOrderUnsupported)


def _c2(v):
    if v is None:
        return None
    return [float(np.real(v)), float(np.imag(v))]


def _guard(fn, response_cls, **extra):
    try:
        return fn()
    except NotRegular as exc:
        return response_cls(status="not-regular", exit_code=2,
                            detail=str(exc), **extra)
    except UnsupportedEndpointDerivative as exc:
        return response_cls(status="unsupported-measure", exit_code=3,
                            detail=str(exc), **extra)
    except _NUMERICAL as exc:
        return response_cls(status="non-convergence", exit_code=4,
                            detail=str(exc), **extra)
    except _INPUT as exc:
        return response_cls(status="input-error", exit_code=1,
                            detail=str(exc), **extra)


def create_app() -> FastAPI:
    app = FastAPI(title="spectrace", version=__version__)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/analyze", response_model=schemas.AnalyzeResponse)
    def analyze(cfg: schemas.ProblemConfigModel):
        def work():
            report = runners.run_analyze(ProblemConfig.from_dict(cfg.model_dump()))
            return schemas.AnalyzeResponse(status="ok", exit_code=0,
                                           report=report)
        return _guard(work, schemas.AnalyzeResponse)

    @app.post("/spectrum", response_model=schemas.SpectrumResponse)
    def spectrum(cfg: schemas.ProblemConfigModel):
        def work():
            _, csv, count = runners.run_spectrum(
                ProblemConfig.from_dict(cfg.model_dump()))
            return schemas.SpectrumResponse(status="ok", exit_code=0,
                                            csv=csv, count=count)
        return _guard(work, schemas.SpectrumResponse)

    @app.post("/trace", response_model=schemas.TraceResponse)
    def trace(cfg: schemas.ProblemConfigModel):
        def work():
            pc = ProblemConfig.from_dict(cfg.model_dump())
            estimate, csv = runners.run_trace(pc)
            # a finished run reports its verdict; only an unresolved Cesaro
            # tail counts as non-convergence
            code = 0 if estimate.error_bar <= pc.run.tolerance else 4
            return schemas.TraceResponse(status="ok", exit_code=code,
                                         estimate=estimate.to_json_dict(),
                                         csv=csv)
        return _guard(work, schemas.TraceResponse)

    @app.post("/green", response_model=schemas.GreenResponse)
    def green(cfg: schemas.ProblemConfigModel):
        def work():
            out = runners.run_green(ProblemConfig.from_dict(cfg.model_dump()))
            oracles = schemas.GreenOracleValues(
                closed_form_frak_C=_c2(out["oracles"].get("closed_form_frak_C")),
                lemma51_frak_C=_c2(out["oracles"].get("lemma51_frak_C")),
            )
            return schemas.GreenResponse(
                status="ok", exit_code=0, csv=out["csv"],
                limit=_c2(out["limit"]), error_bar=out["error_bar"],
                target=_c2(out["target"]), verdict=out["verdict"],
                oracles=oracles)
        return _guard(work, schemas.GreenResponse)

    @app.post("/seed-check", response_model=schemas.SeedCheckResponse)
    def seed_check(cfg: schemas.ProblemConfigModel):
        def work():
            checks = runners.run_seed_check(
                ProblemConfig.from_dict(cfg.model_dump()))
            ok = all(c["passed"] for c in checks)
            return schemas.SeedCheckResponse(
                status="ok" if ok else "non-convergence",
                exit_code=0 if ok else 4,
                checks=[schemas.CheckResult(**c) for c in checks])
        return _guard(work, schemas.SeedCheckResponse)

    return app
