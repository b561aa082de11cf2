"""
REST API server exposing assembly design, centerline simulation and the
curvature pipeline.
"""
import logging
from typing import Any, Dict, List, Optional

import uvicorn
from fastapi import Depends, FastAPI, HTTPException, Query, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

import config
from analysis import AnalysisError, PipelineParams, analyze_centerline
from assembly import AssemblyError, Centerline, design_assembly, render_centerline
from data_manager import SchemaError, assembly_to_document, parse_assembly_document, parse_design_targets
from free_model import GeometryDomainError, InfeasibleDesignError, fiber_angle_band
from main import samples_per_segment

logging.basicConfig(level=config.LOG_LEVEL, format=config.LOG_FORMAT)
logger = logging.getLogger(__name__)

app = FastAPI(
    title="FREE Snake Robot API",
    description="Design FREE bending segments, render assemblies and estimate curvature profiles",
    version="1.0.0"
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


class DesignRequest(BaseModel):
    """Per-role targets in the same layout as the design targets file"""
    targets: Dict[str, Any]
    R0_m: float = Field(config.RELAXED_RADIUS_M, gt=0)
    body_length_m: float = Field(config.BODY_LENGTH_M, gt=0)


class DesignResponse(BaseModel):
    status: str
    spec: Dict[str, Any]
    bands: Dict[str, str]
    max_curvature_per_m: Dict[str, float]


class SimulateRequest(BaseModel):
    spec: Dict[str, Any]
    samples: int = Field(config.SIMULATION_SAMPLES, ge=2)


class SimulateResponse(BaseModel):
    status: str
    total_length_m: float
    points: List[List[float]]


class ProfileRequest(BaseModel):
    points: List[List[float]]
    n: int = Field(config.RESAMPLE_POINTS, ge=3)
    span: int = Field(config.SMOOTHING_SPAN, ge=1)
    offset: int = Field(config.CURVATURE_OFFSET, ge=1)
    trial_id: str = ""


class ProfileResponse(BaseModel):
    status: str
    trial_id: str
    arc_fraction: List[float]
    curvature: List[Optional[float]]
    valid: List[bool]


def verify_auth_code(auth_code: Optional[str] = Query(None, description="Authentication code when AUTH_CODE is set")):
    """
    Dependency to verify the authentication code

    Raises:
        HTTPException: If AUTH_CODE is configured and the code does not match
    """
    if config.AUTH_CODE and auth_code != config.AUTH_CODE:
        logger.warning("Unauthorized access attempt")
        raise HTTPException(
            status_code=status.HTTP_401_UNAUTHORIZED,
            detail="Invalid authentication code"
        )
    return auth_code


def _bad_request(e: Exception) -> HTTPException:
    logger.error(f"Rejected request: {str(e)}")
    return HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


@app.get("/", response_model=Dict[str, str])
async def root():
    """API root endpoint that returns basic information"""
    return {"status": "online", "message": "FREE snake robot API is running"}


@app.post("/design", response_model=DesignResponse, dependencies=[Depends(verify_auth_code)])
async def design(request: DesignRequest):
    """Solve fiber angles for per-role target curvatures"""
    try:
        targets = parse_design_targets(request.targets)
        spec = design_assembly(targets, request.R0_m, request.body_length_m)
    except SchemaError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    except InfeasibleDesignError as e:
        logger.error(f"Infeasible design: {str(e)}")
        return JSONResponse(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            content={"status": "error", "message": str(e), "attainable": e.attainable}
        )
    except (AssemblyError, GeometryDomainError) as e:
        raise _bad_request(e)

    return {
        "status": "success",
        "spec": assembly_to_document(spec),
        "bands": {s.label: fiber_angle_band(s.geom.fiber_angle) for s in spec.segments},
        "max_curvature_per_m": {s.label: s.max_curvature for s in spec.segments},
    }


@app.post("/simulate", response_model=SimulateResponse, dependencies=[Depends(verify_auth_code)])
async def simulate(request: SimulateRequest):
    """Render the centerline of an assembly spec document"""
    try:
        spec = parse_assembly_document(request.spec)
        line = render_centerline(spec, samples_per_segment(request.samples, len(spec.segments)))
    except SchemaError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    except AssemblyError as e:
        raise _bad_request(e)

    return {"status": "success", "total_length_m": spec.total_length, "points": line.points.tolist()}


@app.post("/profile", response_model=ProfileResponse, dependencies=[Depends(verify_auth_code)])
async def profile(request: ProfileRequest):
    """Resample, smooth and profile one centerline given in meters"""
    try:
        line = Centerline(request.points, "m")
        result = analyze_centerline(line, PipelineParams(request.n, request.span, request.offset),
                                    trial_id=request.trial_id)
    except (AssemblyError, AnalysisError, ValueError) as e:
        raise _bad_request(e)

    return {
        "status": "success",
        "trial_id": result.trial_id,
        "arc_fraction": result.arc_fraction.tolist(),
        "curvature": [float(v) if ok else None for v, ok in zip(result.curvature, result.valid)],
        "valid": result.valid.tolist(),
    }


@app.exception_handler(HTTPException)
async def http_exception_handler(request, exc):
    return JSONResponse(
        status_code=exc.status_code,
        content={"status": "error", "message": exc.detail}
    )


@app.exception_handler(Exception)
async def global_exception_handler(request, exc):
    """Global exception handler for all unhandled exceptions"""
    logger.error(f"Unhandled exception: {str(exc)}")
    return JSONResponse(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        content={"status": "error", "message": f"Internal server error: {str(exc)}"}
    )


def start_server():
    """Start the API server"""
    try:
        uvicorn.run(
            "api_server:app",
            host=config.HOST,
            port=config.PORT,
            reload=False,
            log_level=config.LOG_LEVEL.lower()
        )
    except Exception as e:
        logger.critical(f"Failed to start server: {str(e)}")
        raise
