#!/usr/bin/env python3
import logging
from contextlib import asynccontextmanager
from typing import Any, AsyncGenerator, Optional

import uvicorn
from fastapi import FastAPI, Request, status
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import JSONResponse

from src.models import ErrorResponse
from src.logger import setup_logger
from src.harness.service import ValidationService
from src.settings import BIND, CATALOG_PATH, WORKERS, split_bind
from src.engine.catalog import AsteroidCatalog, load_asteroid_catalog
from src.engine.verifier import ValidatorConfig

logger = logging.getLogger("gtoc12")


def _error(code: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=code, content=ErrorResponse(message=message).model_dump())


def create_app(service: Optional[ValidationService] = None, catalog_path: str = CATALOG_PATH) -> FastAPI:
    """
    The /validate service.

    Without a ready service the catalog is loaded from catalog_path when the
    app starts.
    """

    @asynccontextmanager
    async def lifespan(app: FastAPI) -> AsyncGenerator[Any, Any]:
        setup_logger()
        if app.state.service is None:
            catalog = await run_in_threadpool(load_asteroid_catalog, catalog_path)
            app.state.service = ValidationService(catalog, ValidatorConfig(workers=WORKERS))
        logger.info(f"Validation service ready with {len(app.state.service.catalog)} asteroids")
        yield

    web = FastAPI(
        title="GTOC 12 Validator",
        description="Solution validation and scoring for the GTOC 12 asteroid mining problem",
        version="1.0.0",
        lifespan=lifespan,
    )
    web.state.service = service

    @web.post("/validate")
    async def validate(request: Request):
        """Validate a multipart upload in the `file` field."""

        try:
            form = await request.form()
        except Exception as e:
            return _error(status.HTTP_400_BAD_REQUEST, f"malformed upload: {e}")

        upload = form.get("file")
        if upload is None:
            return _error(status.HTTP_400_BAD_REQUEST, "no file")
        data = upload.encode("utf-8") if isinstance(upload, str) else await upload.read()
        if not data:
            return _error(status.HTTP_400_BAD_REQUEST, "no file")

        try:
            response = await run_in_threadpool(web.state.service.validate_bytes, data)
            return response.model_dump()
        except Exception as e:
            logger.error(f"Error from validate endpoint: {e}")
            return _error(status.HTTP_500_INTERNAL_SERVER_ERROR, f"internal error: {e}")

    @web.get("/health")
    async def health_check():
        """Health Check Endpoint"""
        service = web.state.service
        return {"status": "healthy", "asteroids": len(service.catalog) if service else 0}

    return web


def serve_validate(
    bind: str = BIND,
    catalog: Optional[AsteroidCatalog] = None,
    config: ValidatorConfig = ValidatorConfig(workers=WORKERS),
) -> None:
    host, port = split_bind(bind)
    service = ValidationService(catalog, config) if catalog is not None else None
    logger.info(f"Serving POST /validate on {host}:{port}")
    uvicorn.run(create_app(service), host=host, port=port)
