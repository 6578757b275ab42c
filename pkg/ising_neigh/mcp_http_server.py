#!/usr/bin/env python3
"""Tool server over HTTP with optional SSE-formatted streaming responses."""
from __future__ import annotations

from typing import Optional

from fastapi import FastAPI
from starlette.middleware.cors import CORSMiddleware

from ising_neigh import __version__
from ising_neigh.config import Settings
from ising_neigh.middleware import OriginValidatorMiddleware
from ising_neigh.routes import health_router, mcp_router


def create_app(settings: Optional[Settings] = None) -> FastAPI:
    settings = settings or Settings.from_env()
    app = FastAPI(
        title="ising-neigh HTTP Server",
        description="Interaction neighborhood estimation tools over streamable HTTP",
        version=__version__,
    )
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.add_middleware(
        OriginValidatorMiddleware,
        protected_paths=["/mcp/http"],
        extra_origins=settings.allowed_origins,
    )
    app.include_router(health_router)
    app.include_router(mcp_router)
    return app


app = create_app()


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host="0.0.0.0", port=8080)
