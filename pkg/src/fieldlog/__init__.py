"""fieldlog: a self-hostable service fusing greenhouse sensor streams with
located, classified human field observations."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConflictError,
    FieldlogError,
    NoZoneError,
    NotFoundError,
    TranscriptionFailed,
    ValidationError,
)
from .store import Store  # noqa: F401
