"""Health check and info routes."""
from fastapi import APIRouter

from ising_neigh import __version__
from ising_neigh.tool_registry import TOOL_COUNT

router = APIRouter(tags=["health"])


@router.get("/")
async def root():
    """Root endpoint with server information."""
    return {
        "name": "ising-neigh HTTP Server",
        "version": __version__,
        "protocol": "JSON-RPC over streamable HTTP",
        "tools": TOOL_COUNT,
        "transports": {
            "http": {
                "endpoint": "/mcp/http",
                "method": "POST",
                "streaming": (
                    "Add 'Accept: text/event-stream' or 'X-Stream: true' header"
                ),
            }
        },
        "examples": {
            "http_regular": (
                "curl -X POST http://localhost:8080/mcp/http "
                "-H 'Content-Type: application/json' "
                "-d '{\"jsonrpc\":\"2.0\",\"id\":1,\"method\":\"tools/list\","
                "\"params\":{}}'"
            ),
        },
        "docs": "/docs - Interactive API documentation",
    }


@router.get("/health")
async def health():
    return {"status": "healthy", "service": "ising-neigh"}
