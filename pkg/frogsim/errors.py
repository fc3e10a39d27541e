"""Exceptions and the exit codes the CLI reports for them.

Exit codes: 0 success, 2 bad input, 3 numerical failure. A failure that a user can fix by
changing the input is a DomainError; anything else the library raises is numerical.
"""

import json

from pydantic import ValidationError


class FrogsimError(Exception):
    """Root of everything this package raises on purpose."""


class DomainError(FrogsimError, ValueError):
    """An argument is outside the domain of the operation."""


class ConvergenceRadiusError(DomainError):
    """A generating function was evaluated at or beyond its radius of convergence."""


class DivergenceError(FrogsimError):
    """A series oracle cannot converge at the requested argument."""


class NonConvergenceError(FrogsimError):
    def __init__(self, message: str, *, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class BushCapExceeded(FrogsimError):
    def __init__(self, vertex: tuple[int, ...], cap: int):
        super().__init__(
            f"bush-cap exceeded: bush rooted at {vertex} has more than {cap} vertices; "
            f"re-run with a larger bush cap"
        )
        self.vertex = vertex
        self.cap = cap


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, (DomainError, ValidationError, OSError, json.JSONDecodeError)):
        return EXIT_CONFIG
    return EXIT_NUMERICAL
