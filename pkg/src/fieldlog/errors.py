"""Error types shared across the package.

Every public error carries a stable ``code`` so the HTTP layer (and CLI)
can map failures to wire errors without isinstance-chains elsewhere.
"""

from __future__ import annotations

API_ERROR_CODES = (
    "Validation",
    "NotFound",
    "Conflict",
    "TranscriptionFailed",
    "NoZone",
    "Internal",
)


class FieldlogError(Exception):
    code = "Internal"

    def __init__(self, message: str, field_path: str | None = None):
        super().__init__(message)
        self.message = message
        self.field_path = field_path

    def to_dict(self) -> dict:
        out = {"code": self.code, "message": self.message}
        if self.field_path is not None:
            out["field_path"] = self.field_path
        return out


class ValidationError(FieldlogError):
    code = "Validation"


class NotFoundError(FieldlogError):
    code = "NotFound"


class ConflictError(FieldlogError):
    code = "Conflict"


class TranscriptionFailed(FieldlogError):
    """Raised by transcription adapters. ``reason`` is one of
    'timeout', 'remote' or 'unmapped'."""

    code = "TranscriptionFailed"

    def __init__(self, reason: str, message: str | None = None):
        super().__init__(message or f"transcription failed ({reason})")
        self.reason = reason


class NoZoneError(FieldlogError):
    code = "NoZone"
