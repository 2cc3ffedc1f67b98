"""Domain error hierarchy.

Every error type carries a stable machine-readable ``code``. The service layer
maps each code to exactly one HTTP status; a test enumerates all subclasses of
``ToolseekError`` and asserts the mapping is total.
"""

from __future__ import annotations


class ToolseekError(Exception):
    """Base class for all domain errors."""

    code = "internal_error"

    def __init__(self, message: str, *, field: str | None = None):
        super().__init__(message)
        self.field = field

    @property
    def message(self) -> str:
        return str(self)
