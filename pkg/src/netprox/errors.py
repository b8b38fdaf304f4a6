"""Shared error types for the distributed rounds."""


class ProtocolError(RuntimeError):
    """A node broke the synchronous message protocol (missing/extra message)."""


class InnerSolveError(RuntimeError):
    """An inner subproblem solver hit its iteration cap before its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual
