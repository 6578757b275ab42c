"""JSON-RPC dispatcher used by both transports."""
import json
from typing import Any, Dict, Optional

from ising_neigh import __version__
from ising_neigh.handlers import estimators
from ising_neigh.tool_registry import TOOLS

from .tool_registry import get_registry, tool

PROTOCOL_VERSION = "2024-11-05"


def register_tools() -> None:
    """Register every handler named in the central registry."""
    for tool_def in TOOLS:
        handler = getattr(estimators, tool_def["function"])
        tool(
            name=tool_def["name"],
            description=tool_def["description"],
            input_schema=tool_def["inputSchema"],
        )(handler)


def error_response(request_id: Any, code: int, message: str) -> Dict[str, Any]:
    return {
        "jsonrpc": "2.0",
        "id": request_id,
        "error": {"code": code, "message": message},
    }


class MCPServer:
    """Handles initialize, tools/list and tools/call requests."""

    def __init__(self) -> None:
        register_tools()
        self.registry = get_registry()

    async def handle_request(self, request: Dict[str, Any]) -> Optional[Dict[str, Any]]:
        """Handle one request; notifications return None."""
        method = request.get("method")
        params = request.get("params") or {}
        request_id = request.get("id")

        try:
            if method == "initialize":
                return self._handle_initialize(request_id)
            if method == "tools/list":
                return self._handle_tools_list(request_id)
            if method == "tools/call":
                return await self._handle_tools_call(request_id, params)
            if method == "notifications/initialized":
                return None
            return error_response(request_id, -32601, f"Method not found: {method}")
        except Exception as e:
            return error_response(request_id, -32603, f"Internal error: {str(e)}")

    def _handle_initialize(self, request_id: Any) -> Dict[str, Any]:
        return {
            "jsonrpc": "2.0",
            "id": request_id,
            "result": {
                "protocolVersion": PROTOCOL_VERSION,
                "capabilities": {"tools": {}},
                "serverInfo": {"name": "ising-neigh", "version": __version__},
            },
        }

    def _handle_tools_list(self, request_id: Any) -> Dict[str, Any]:
        tools = self.registry.get_tools()
        return {
            "jsonrpc": "2.0",
            "id": request_id,
            "result": {
                "tools": [{"name": name, **schema} for name, schema in tools.items()]
            },
        }

    async def _handle_tools_call(
        self, request_id: Any, params: Dict[str, Any]
    ) -> Dict[str, Any]:
        tool_name = params.get("name")
        arguments = params.get("arguments") or {}
        result = await self.registry.call_tool(tool_name, arguments)
        return {
            "jsonrpc": "2.0",
            "id": request_id,
            "result": {
                "content": [
                    {
                        "type": "text",
                        "text": json.dumps(result, indent=2, ensure_ascii=False),
                    }
                ]
            },
        }
