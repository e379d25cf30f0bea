"""Exception types shared across the solvers."""

from __future__ import annotations


class GatekeepingError(Exception):
    """Base class; ``code`` is a short machine-readable tag."""

    code = "error"

    def __init__(self, message: str, code: str | None = None, **diagnostics):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.diagnostics = diagnostics


class ValidationError(GatekeepingError, ValueError):
    """Bad user input: invalid parameters, malformed config."""

    code = "validation"


class SolverError(GatekeepingError, RuntimeError):
    """A numerical routine failed to produce a result."""

    code = "solver"
