"""Data-directory lock: the server excludes direct-mode CLI writers."""

from __future__ import annotations

import fcntl
from pathlib import Path

from .errors import ConflictError

LOCK_FILENAME = ".fieldlog.lock"


class DataDirLock:
    def __init__(self, data_dir: str | Path):
        self.path = Path(data_dir) / LOCK_FILENAME
        self._fh = None

    def acquire(self) -> "DataDirLock":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fh = open(self.path, "a+")
        try:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            fh.close()
            raise ConflictError(
                f"data directory {self.path.parent} is locked (server running?)"
            )
        self._fh = fh
        return self

    def release(self):
        if self._fh is not None:
            fcntl.flock(self._fh.fileno(), fcntl.LOCK_UN)
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self.acquire()

    def __exit__(self, *exc):
        self.release()
