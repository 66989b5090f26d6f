"""
FastAPI application for the coordination runtime
Provides HTTP endpoints for message validation, experiments and scenario runs
"""

import logging
from datetime import datetime, timezone
from typing import Any, Dict, List

from fastapi import Body, FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from config import MessageKinds, Modes, config
from contracts.validation import validate
from errors import ContractViolation, DomainError, InvalidInputError
from sim.experiments import gain_experiment, overhead_experiment
from sim.scenario import parse_scenario, run_scenario

logger = logging.getLogger(__name__)

VERSION = "1.0.0"


# === FASTAPI APP AND MODELS ===

app = FastAPI(
    title="Temporal Hierarchy Coordination API",
    version=VERSION,
    description="Typed message contracts, authority manifolds and arbitration for layered agents",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["http://localhost:5173", "http://localhost:3000", "http://127.0.0.1:5173"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class GainRequest(BaseModel):
    """Request model for a gain curve"""
    depth: int = Field(ge=1, le=32)
    trials: int = Field(default=1000, ge=1, le=100_000)
    seed: int = Field(default_factory=lambda: config.DEFAULT_SEED)
    n: int = Field(default=4, ge=1, le=64)
    low: float = 0.0
    high: float = 1.5


# === ERROR MAPPING ===

@app.exception_handler(InvalidInputError)
async def invalid_input_handler(request: Request, exc: InvalidInputError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(DomainError)
async def domain_error_handler(request: Request, exc: DomainError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(ContractViolation)
async def contract_violation_handler(request: Request, exc: ContractViolation):
    logger.error(f"Contract violation on {request.url.path}: {exc}")
    return JSONResponse(status_code=500, content={"detail": f"Contract violation: {exc}"})


# === API ENDPOINTS ===

@app.post("/validate/{kind}")
def validate_message(kind: str, message: Any = Body(default=None)) -> Dict[str, Any]:
    """
    Push a raw message through its contract.

    Returns the ValidationOutcome: status valid, repaired or defaulted.
    """
    if kind not in MessageKinds.ALL:
        raise HTTPException(status_code=400, detail=f"Kind must be one of {list(MessageKinds.ALL)}")
    return validate(message, kind).model_dump()


@app.get("/overhead")
def overhead(n_max: int = Query(default=4, ge=1, le=16)) -> List[Dict[str, Any]]:
    """Per-step messages and comparisons for every mode and n = 1..n_max"""
    rows = overhead_experiment(range(1, n_max + 1))
    return [{**r.model_dump(), "matches": r.matches} for r in rows]


@app.post("/gain")
def gain(request: GainRequest) -> Dict[str, Any]:
    """Composite gain curve for unconstrained and projected chains"""
    entries = request.trials * request.depth * request.n ** 2
    if entries > config.GAIN_MAX_ENTRIES:
        raise DomainError(f"Gain request samples {entries} matrix entries, limit is {config.GAIN_MAX_ENTRIES}")
    curve = gain_experiment(request.depth, request.trials, request.seed,
                            n=request.n, low=request.low, high=request.high)
    return curve.model_dump()


@app.post("/runs")
def create_run(scenario: Dict[str, Any], mode: str = Query(default=Modes.CTHA)) -> Dict[str, Any]:
    """
    Run a scenario synchronously.

    The body is a scenario document; the response is the full report.
    """
    script = parse_scenario(scenario)
    report = run_scenario(script, mode)
    if not report.is_consistent():
        raise ContractViolation("Report aggregates do not match its traces")
    return report.model_dump(mode="json")


@app.get("/health")
async def health_check():
    """Verifies the API is running and the configuration directories exist"""
    return {
        "status": "healthy",
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": VERSION,
        "config_valid": config.validate(),
    }


@app.get("/")
async def root():
    """API root endpoint with documentation links"""
    return {
        "name": "Temporal Hierarchy Coordination API",
        "version": VERSION,
        "documentation": "/docs",
        "openapi": "/openapi.json",
        "health": "/health",
        "endpoints": {
            "POST /validate/{kind}": "Validate a summary, plan or policy message",
            "GET /overhead?n_max=N": "Traffic accounting per mode and layer count",
            "POST /gain": "Gain curve of unconstrained and projected residual chains",
            "POST /runs?mode=MODE": "Run a scenario and return its report",
            "GET /health": "Health check",
        },
    }


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host=config.APP_HOST, port=config.APP_PORT)
