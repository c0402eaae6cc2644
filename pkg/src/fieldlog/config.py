"""Service configuration.

Resolution order: explicit arguments > config file (JSON) > environment
(FIELDLOG_DATA) > defaults. The transcriber block selects the adapter:
``{"kind": "mock", "mapping": {uri: [text, confidence]}}`` or
``{"kind": "http", "endpoint": ..., "timeout_s": ...}``; absent means no
audio-only submissions are accepted.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .transcribe import HttpTranscriber, MockTranscriber, TranscriptionAdapter

DATA_DIR_ENV = "FIELDLOG_DATA"


@dataclass
class ServiceConfig:
    data_dir: Path
    lexicon_path: Path | None = None
    clock_skew_s: int = 300
    bind_host: str = "127.0.0.1"
    bind_port: int = 8764
    page_limit: int = 500
    transcriber: dict | None = None

    @classmethod
    def resolve(cls, data_dir: str | None = None, config_path: str | None = None) -> "ServiceConfig":
        doc: dict = {}
        if config_path:
            p = Path(config_path)
            if not p.is_file():
                raise ValidationError(f"config file {config_path!r} not found", "config")
            try:
                doc = json.loads(p.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{config_path}:{exc.lineno}: invalid JSON: {exc.msg}", "config")
        resolved = data_dir or doc.get("data_dir") or os.environ.get(DATA_DIR_ENV)
        if not resolved:
            raise ValidationError(
                f"no data directory: pass --data-dir, set {DATA_DIR_ENV}, or put data_dir in the config file",
                "data_dir",
            )
        return cls(
            data_dir=Path(resolved),
            lexicon_path=Path(doc["lexicon_path"]) if doc.get("lexicon_path") else None,
            clock_skew_s=int(doc.get("clock_skew_s", 300)),
            bind_host=doc.get("bind_host", "127.0.0.1"),
            bind_port=int(doc.get("bind_port", 8764)),
            page_limit=int(doc.get("page_limit", 500)),
            transcriber=doc.get("transcriber"),
        )

    def build_transcriber(self) -> TranscriptionAdapter | None:
        if self.transcriber is None:
            return None
        kind = self.transcriber.get("kind")
        if kind == "mock":
            mapping = {
                uri: (entry[0], float(entry[1])) for uri, entry in self.transcriber.get("mapping", {}).items()
            }
            return MockTranscriber(mapping)
        if kind == "http":
            endpoint = self.transcriber.get("endpoint")
            if not endpoint:
                raise ValidationError("http transcriber needs an endpoint", "transcriber.endpoint")
            return HttpTranscriber(endpoint, timeout_s=float(self.transcriber.get("timeout_s", 10.0)))
        raise ValidationError(f"unknown transcriber kind {kind!r}", "transcriber.kind")
