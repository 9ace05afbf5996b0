"""Exception hierarchy.

Each error class carries an ``exit_code`` used by the CLI:
2 for validation problems, 3 for exhausted budgets, 4 for anything else.
"""

from __future__ import annotations


class JamisonError(Exception):
    exit_code = 4


class ValidationError(JamisonError):
    exit_code = 2

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ParseError(ValidationError):
    pass


class BudgetExceeded(JamisonError):
    exit_code = 3


class InfiniteIndex(JamisonError):
    """Raised when an operation needs ``[G:G0] < oo``."""


class NotInSubgroup(JamisonError):
    pass


class NotCertifiable(JamisonError):
    """No exact residue orbit is available for the sequence."""


NoResidueOracle = NotCertifiable


class ResolutionInsufficient(JamisonError):
    exit_code = 3


class SupportTooLarge(BudgetExceeded):
    pass


class InsufficientSupport(JamisonError):
    pass


class WitnessUnavailable(JamisonError):
    pass
