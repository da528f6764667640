"""FastAPI app over one frozen checkpoint.

Error contract: 400 for malformed bodies and mask-length mismatches, 422
only for a mask that selects nothing, 500 with an opaque incident id (never
a stack trace) for anything unexpected.  Handlers never mutate the engine,
so concurrent identical requests return identical bodies.
"""

from __future__ import annotations

import sys
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..errors import AllMaskedError, SelectgenError
from .engine import Engine
from .schemas import (
    EncodeRequest,
    EncodeResponse,
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    PosteriorRequest,
    PosteriorResponse,
    SampleMasksRequest,
    SampleMasksResponse,
)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


def create_app(checkpoint_path: str | Path) -> FastAPI:
    engine = Engine.load(checkpoint_path)
    app = FastAPI(title="selectgen", version="1")
    # the studio page is served from elsewhere (file:// or a static host)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(RequestValidationError)
    async def bad_body(request: Request, exc: RequestValidationError):
        return _error(400, "bad_request", str(exc.errors()[:3]))

    @app.exception_handler(AllMaskedError)
    async def all_masked(request: Request, exc: AllMaskedError):
        return _error(422, "all_masked", str(exc))

    @app.exception_handler(SelectgenError)
    async def domain_error(request: Request, exc: SelectgenError):
        return _error(400, "bad_request", str(exc))

    @app.exception_handler(Exception)
    async def internal(request: Request, exc: Exception):
        incident = uuid.uuid4().hex[:12]
        print(f"internal error {incident}: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return _error(500, "internal", f"internal error (incident {incident})")

    @app.get("/v1/health", response_model=HealthResponse,
             response_model_by_alias=True)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", checkpoint_id=engine.checkpoint_id)

    @app.post("/v1/encode", response_model=EncodeResponse)
    def encode(req: EncodeRequest) -> EncodeResponse:
        tokens, gamma = engine.encode(req.source)
        return EncodeResponse(tokens=tokens, gamma=gamma)

    @app.post("/v1/generate", response_model=GenerateResponse)
    def generate(req: GenerateRequest) -> GenerateResponse:
        outs = engine.generate(req.source, req.mask, req.mode, req.samples,
                               req.seed, req.temperature, req.beam_width)
        return GenerateResponse(texts=[o.text for o in outs],
                                scores=[o.score for o in outs],
                                mask=outs[0].mask if outs else [])

    @app.post("/v1/sample-masks", response_model=SampleMasksResponse)
    def sample_masks(req: SampleMasksRequest) -> SampleMasksResponse:
        return SampleMasksResponse(masks=engine.sample_masks(req.source, req.k,
                                                             req.seed))

    @app.post("/v1/posterior", response_model=PosteriorResponse)
    def posterior(req: PosteriorRequest) -> PosteriorResponse:
        q, best = engine.posterior(req.source, req.target)
        return PosteriorResponse(q=q, best_mask=best)

    return app
