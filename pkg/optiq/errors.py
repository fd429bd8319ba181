"""
Exception hierarchy shared by the solvers, the linear algebra kernels and the CLI.
"""


class ConfigurationError(ValueError):
    """Unknown problem/solver names, invalid dimensions, malformed suite files."""


class ContractError(ValueError):
    """Index-set or shape contract violated by a caller."""


class NumericalFailure(ArithmeticError):
    """Non-finite values, unrecoverable factorizations, step-size underflow."""


class Diverged(NumericalFailure):
    """Iterate or objective value left the finite/bounded region."""


class LineSearchFailure(NumericalFailure):
    """Armijo backtracking exhausted its budget or got a non-descent direction."""


class NotApplicable(ValueError):
    """Quantity is undefined at this point (e.g. nonpositive curvature)."""


class SafeguardNeeded(Exception):
    """No admissible time constant; the caller must take a safeguarded step."""
