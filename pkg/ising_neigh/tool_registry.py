"""
Central registry for all tools and their metadata.

Input schemas are generated from the handler signatures at import time.
"""
import importlib
import inspect
from typing import Any, Dict, List, Optional, Union, get_type_hints

from ising_neigh.tool_definitions import TOOL_DEFINITIONS


def get_type_schema(type_hint: Any) -> Dict[str, Any]:
    """Convert a Python type hint to a JSON schema."""
    if type_hint is str:
        return {"type": "string"}
    if type_hint is bool:
        return {"type": "boolean"}
    if type_hint is int:
        return {"type": "integer"}
    if type_hint is float:
        return {"type": "number"}
    if type_hint in (list, List):
        return {"type": "array"}
    if type_hint in (dict, Dict):
        return {"type": "object"}

    origin = getattr(type_hint, "__origin__", None)
    if origin is Union:
        args = [a for a in type_hint.__args__ if a is not type(None)]
        if len(args) == 1:
            return get_type_schema(args[0])
    elif origin is list:
        if type_hint.__args__:
            return {"type": "array", "items": get_type_schema(type_hint.__args__[0])}
        return {"type": "array"}
    elif origin is dict:
        return {"type": "object"}
    return {"type": "object"}


def generate_schema(module_name: str, function_name: str) -> Dict[str, Any]:
    """Generate a JSON schema from a handler signature."""
    module = importlib.import_module(f"ising_neigh.{module_name}")
    func = getattr(module, function_name)
    sig = inspect.signature(func)
    type_hints = get_type_hints(func)

    properties: Dict[str, Any] = {}
    required: List[str] = []
    for param_name, param in sig.parameters.items():
        if param_name in type_hints:
            schema = get_type_schema(type_hints[param_name])
        else:
            schema = {"type": "string"}
        schema["description"] = f"Parameter {param_name}"
        if param.default is inspect.Parameter.empty:
            required.append(param_name)
        elif param.default is not None:
            schema["default"] = param.default
        properties[param_name] = schema
    return {"type": "object", "properties": properties, "required": required}


def _build_tools() -> List[Dict[str, Any]]:
    tools = []
    for tool_def in TOOL_DEFINITIONS:
        tool = dict(tool_def)
        tool["inputSchema"] = generate_schema(tool_def["module"], tool_def["function"])
        tools.append(tool)
    return tools


TOOLS = _build_tools()


def get_all_tool_names() -> List[str]:
    """Get list of all tool names."""
    return [tool["name"] for tool in TOOLS]


def get_tools_by_category(category: str) -> List[Dict[str, Any]]:
    """Get tools filtered by category."""
    return [tool for tool in TOOLS if tool["category"] == category]


def get_tool_count() -> int:
    return len(TOOLS)


def get_categories() -> List[str]:
    """Get list of all categories, in definition order."""
    return list(dict.fromkeys(tool["category"] for tool in TOOLS))


def get_tool_schemas() -> Dict[str, Dict[str, Any]]:
    """Map tool name to description and inputSchema."""
    return {
        tool["name"]: {
            "description": tool["description"],
            "inputSchema": tool["inputSchema"],
        }
        for tool in TOOLS
    }


def get_tool_by_name(name: str) -> Optional[Dict[str, Any]]:
    for tool in TOOLS:
        if tool["name"] == name:
            return tool
    return None


def get_function_name_mapping() -> Dict[str, str]:
    return {tool["name"]: tool["function"] for tool in TOOLS}


ALL_TOOL_NAMES = get_all_tool_names()
TOOL_COUNT = get_tool_count()
TOOL_SCHEMAS = get_tool_schemas()
FUNCTION_NAME_MAPPING = get_function_name_mapping()
