"""HTTP front end. Every request is parsed, checked and answered by
:mod:`iotforge.workflow`; this module only moves JSON in and out."""

import logging
import os
import uuid

from fastapi import FastAPI, HTTPException, Request
from fastapi.concurrency import run_in_threadpool
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from .. import __version__
from ..workflow import OPERATIONS
from .schemas import AnalysisRequest, AnalysisResponse, ErrorResponse, HealthResponse

log = logging.getLogger(__name__)

MAX_BODY_BYTES = 1 << 20
DEFAULT_PORT = 8470

app = FastAPI(title="iotforge", version=__version__)


@app.exception_handler(RequestValidationError)
async def _bad_request(request: Request, exc: RequestValidationError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": "invalid request"})


@app.exception_handler(Exception)
async def _internal_error(request: Request, exc: Exception) -> JSONResponse:
    error_id = uuid.uuid4().hex
    log.exception("request failed [%s]", error_id)
    body = ErrorResponse(detail="internal error", error_id=error_id)
    return JSONResponse(status_code=500, content=body.model_dump())


async def _read_body(request: Request) -> bytes:
    declared = request.headers.get("content-length")
    if declared and declared.isdigit() and int(declared) > MAX_BODY_BYTES:
        raise HTTPException(status_code=413, detail="request body exceeds 1 MiB")
    body = bytearray()
    async for chunk in request.stream():
        body += chunk
        if len(body) > MAX_BODY_BYTES:
            raise HTTPException(status_code=413, detail="request body exceeds 1 MiB")
    return bytes(body)


@app.get("/v1/health", response_model=HealthResponse)
async def health() -> HealthResponse:
    return HealthResponse()


@app.post(
    "/v1/{operation}",
    response_model=AnalysisResponse,
    responses={400: {"model": ErrorResponse}, 413: {"model": ErrorResponse}, 500: {"model": ErrorResponse}},
    openapi_extra={"requestBody": {
        "required": True,
        "content": {"application/json": {"schema": AnalysisRequest.model_json_schema()}},
    }},
)
async def run_operation(operation: str, request: Request) -> AnalysisResponse:
    handler = OPERATIONS.get(operation)
    if handler is None:
        raise HTTPException(status_code=400, detail=f"unknown operation {operation!r}")
    raw = await _read_body(request)
    try:
        req = AnalysisRequest.model_validate_json(raw)
    except ValidationError as exc:
        raise HTTPException(status_code=400, detail=_first_error(exc)) from None
    if req.operation is not None and req.operation != operation:
        raise HTTPException(status_code=400, detail="operation in body does not match the URL")
    outcome = await run_in_threadpool(handler, req.model_text)
    return AnalysisResponse.model_validate(outcome.to_dict())


def _first_error(exc: ValidationError) -> str:
    err = exc.errors()[0]
    where = ".".join(str(p) for p in err.get("loc", ())) or "body"
    return f"{where}: {err['msg']}"


def port_from_env() -> int:
    return int(os.environ.get("IOTFORGE_PORT", DEFAULT_PORT))


def serve(host: str = "127.0.0.1", port=None) -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port or port_from_env())
