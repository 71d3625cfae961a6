"""
Error types shared by every toolkit module.
"""
from typing import Optional


class ToolkitError(Exception):
    """Base error carrying a machine-parsable code for the CLI."""

    code = "error"

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        if code:
            self.code = code

    def one_line(self) -> str:
        """Render as `error_code: message` on a single line."""
        text = " ".join(str(self).split())
        return f"{self.code}: {text}"


class ShapeError(ToolkitError, ValueError):
    code = "shape_error"


class ConfigError(ToolkitError, ValueError):
    code = "config_error"


class InputTooShortError(ToolkitError, ValueError):
    code = "input_too_short"


class FormatError(ToolkitError, ValueError):
    code = "format_error"


class BudgetError(ToolkitError, ValueError):
    code = "budget_too_small"


class PlanError(ToolkitError, ValueError):
    code = "invalid_buffer"


class EquivalenceError(ToolkitError):
    code = "equivalence_failed"
