"""
ising-neigh - interaction neighborhood estimation for Ising models.

Estimates, from i.i.d. samples, which sites influence the conditional law of a
target site: penalized model selection calibrated by the slope heuristic, a
select-and-cut two-step estimator, correlation screening for large site sets,
exact-enumeration oracles for small models and a simulation harness.

Usage:
    # Command line
    ising-neigh simulate --model grid3x3 --n 1000 --out samples.txt
    ising-neigh estimate --samples samples.txt --site 4

    # Tool server over stdio, or HTTP
    ising-neigh-mcp
    uvicorn ising_neigh.mcp_http_server:app --host 0.0.0.0 --port 8080

    # Direct import
    from ising_neigh import estimate
    result = estimate(site=4, samples_path="samples.txt")
"""

import importlib
import importlib.metadata

try:
    __version__ = importlib.metadata.version("ising_neigh")
except importlib.metadata.PackageNotFoundError:
    __version__ = "0.0.0"

from ising_neigh.tool_registry import TOOL_COUNT, TOOLS  # noqa: E402

__all__ = ["TOOLS", "TOOL_COUNT", "__version__"]
for _tool in TOOLS:
    try:
        _module = importlib.import_module(f"ising_neigh.{_tool['module']}")
    except ImportError:
        continue
    if hasattr(_module, _tool["function"]):
        globals()[_tool["function"]] = getattr(_module, _tool["function"])
        __all__.append(_tool["function"])
