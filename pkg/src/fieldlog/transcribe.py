"""Transcription adapters.

Speech recognition itself is an external service; the system only depends
on this small interface. The HTTP client targets any endpoint accepting
``POST {"audio_ref": ...}`` and answering ``{"text": ..., "confidence": ...}``;
the mock serves tests and offline use with a fixed URI -> result mapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import httpx

from .errors import TranscriptionFailed, ValidationError


@dataclass
class TranscriptionResult:
    text: str
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError("confidence must be in [0, 1]", "confidence")


class TranscriptionAdapter:
    def transcribe(self, audio_ref: str) -> TranscriptionResult:
        raise NotImplementedError


class MockTranscriber(TranscriptionAdapter):
    """Deterministic adapter: maps known audio_refs to fixed results."""

    def __init__(self, mapping: dict[str, tuple[str, float]] | None = None):
        self.mapping = dict(mapping or {})

    def transcribe(self, audio_ref: str) -> TranscriptionResult:
        if audio_ref not in self.mapping:
            raise TranscriptionFailed("unmapped", f"no transcription fixture for {audio_ref!r}")
        text, confidence = self.mapping[audio_ref]
        return TranscriptionResult(text=text, confidence=confidence)


class HttpTranscriber(TranscriptionAdapter):
    """Client for an external recognition service; timeouts are mandatory and
    remote errors are surfaced verbatim."""

    def __init__(self, endpoint: str, timeout_s: float = 10.0):
        self.endpoint = endpoint
        self.timeout_s = timeout_s

    def transcribe(self, audio_ref: str) -> TranscriptionResult:
        try:
            response = httpx.post(self.endpoint, json={"audio_ref": audio_ref}, timeout=self.timeout_s)
        except httpx.TimeoutException:
            raise TranscriptionFailed("timeout", f"no answer from {self.endpoint} within {self.timeout_s}s")
        except httpx.HTTPError as exc:
            raise TranscriptionFailed("remote", str(exc))
        if response.status_code != 200:
            raise TranscriptionFailed("remote", f"{response.status_code}: {response.text}")
        try:
            body = response.json()
            return TranscriptionResult(text=body["text"], confidence=float(body["confidence"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise TranscriptionFailed("remote", f"malformed response: {exc}")
