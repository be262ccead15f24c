"""Exception types shared across the package."""

from __future__ import annotations


class RekoError(Exception):
    """Base class for all domain errors. Carries a stable machine-readable code."""

    code = "ERROR"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class ModuleParseError(RekoError):
    """A document could not be turned into a module (syntax, missing field, bad type)."""

    code = "PARSE_ERROR"

    def __init__(self, message: str, *, code: str = "PARSE_ERROR", path: str = "",
                 line: int | None = None, column: int | None = None):
        super().__init__(message, code=code)
        self.path = path
        self.line = line
        self.column = column

    def __str__(self) -> str:
        loc = ""
        if self.line is not None:
            loc = f" at line {self.line}, column {self.column}"
        elif self.path:
            loc = f" at {self.path}"
        return f"{self.code}{loc}: {super().__str__()}"


class InvalidModuleError(RekoError):
    """A module failed validation and was refused by a consumer."""

    code = "INVALID_MODULE"

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class UnknownIdError(RekoError):
    code = "UNKNOWN_ID"


class MissingPriorError(RekoError):
    code = "MISSING_PRIOR"


class AlreadyObservedError(RekoError):
    code = "ALREADY_OBSERVED"


class ConfigError(RekoError):
    code = "CONFIG_ERROR"


class SessionBudgetError(RekoError):
    """Raised when a finding is ingested into a session that spent its step budget."""

    code = "BUDGET_EXHAUSTED"


class GenerationStuckError(RekoError):
    """Case rejection sampling exceeded its attempt limit (degenerate module)."""

    code = "GENERATION_STUCK"


class EmptyInputError(RekoError):
    code = "INPUT_EMPTY"
