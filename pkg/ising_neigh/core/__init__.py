"""Tool registry and JSON-RPC dispatch."""
from .tool_registry import ToolRegistry, get_registry, tool

__all__ = ["ToolRegistry", "get_registry", "tool"]
