"""Exception hierarchy shared by the library, the CLI and the tool handlers."""
from __future__ import annotations


class IsingNeighError(Exception):
    """Base class for all errors raised by ising_neigh."""

    exit_code = 1


class InputError(IsingNeighError, ValueError):
    """Invalid argument, unknown site or malformed input file."""

    exit_code = 1


class ModelError(IsingNeighError):
    """The model cannot be used on the requested path (e.g. non-classical potential)."""

    exit_code = 1


class CapacityError(IsingNeighError):
    """Exact enumeration or pattern key width would exceed the configured capacity."""

    exit_code = 2
