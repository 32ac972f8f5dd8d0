"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: :class:`DomainError` -> 1,
:class:`NumericalError` (including LP failures) -> 2.
"""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class InfeasibleMomentsError(DomainError):
    """No distribution on the grid matches the requested moments."""


class SizeGuardError(DomainError):
    """An LP would exceed the configured nonzero budget."""


class NumericalError(ArithmeticError):
    """A numeric routine failed (singular basis, iteration limit, bad radicand)."""


class LpFailure(NumericalError):
    """An LP that was expected to be solvable came back infeasible or unbounded."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class InvariantViolation(ValueError):
    """A value object was constructed in a state that breaks its invariants."""


class ParseError(ValueError):
    """Malformed serialized input.  Carries the JSON path (and line, if known)."""

    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field!r}")
        full = f"{message} ({', '.join(where)})" if where else message
        super().__init__(full)
        self.field = field
        self.line = line
