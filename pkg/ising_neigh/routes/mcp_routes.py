"""JSON-RPC route."""
import json

from fastapi import APIRouter, Request
from fastapi.responses import StreamingResponse

from ising_neigh.core.server import MCPServer, error_response

router = APIRouter(prefix="/mcp", tags=["mcp"])

mcp_server = MCPServer()


@router.post("/http")
async def http_transport_endpoint(request: Request):
    """Single JSON response, or one SSE event on request.

    Streaming is selected by 'Accept: text/event-stream' or 'X-Stream: true'.
    """
    accept_header = request.headers.get("Accept", "")
    wants_stream = (
        "text/event-stream" in accept_header
        or request.headers.get("X-Stream", "").lower() == "true"
    )

    try:
        body = await request.json()
    except Exception as e:
        return error_response(None, -32700, f"Parse error: {str(e)}")
    if not isinstance(body, dict):
        return error_response(
            None, -32700, "Parse error: request must be a JSON object"
        )

    if wants_stream:

        async def stream_response():
            try:
                response = await mcp_server.handle_request(body)
                if response:
                    yield f"data: {json.dumps(response)}\n\n"
            except Exception as e:
                failure = error_response(
                    body.get("id"), -32603, f"Internal error: {str(e)}"
                )
                yield f"data: {json.dumps(failure)}\n\n"

        return StreamingResponse(
            stream_response(),
            media_type="text/event-stream",
            headers={
                "Cache-Control": "no-cache",
                "Connection": "keep-alive",
                "X-Accel-Buffering": "no",
            },
        )

    response = await mcp_server.handle_request(body)
    if response is None:
        return {"status": "ok"}
    return response
