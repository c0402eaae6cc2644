"""One object wiring store + lexicon + transcriber + config together.

Both the HTTP server and the CLI go through this facade so their behavior
is the same thin shell over the module operations.
"""

from __future__ import annotations

from datetime import date, datetime
from pathlib import Path

from . import analytics, classify, ingest, routing
from .config import ServiceConfig
from .errors import ValidationError
from .lexicon import Lexicon, load_lexicon
from .model import (
    DeliveryRecord,
    Importance,
    Message,
    SensorStream,
    Subject,
    SubscriptionRule,
    User,
    Zone,
    parse_enum,
)
from .store import Store
from .transcribe import TranscriptionAdapter

DB_FILENAME = "fieldlog.db"


class Service:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.config.data_dir.mkdir(parents=True, exist_ok=True)
        self.store = Store(config.data_dir / DB_FILENAME)
        self.lexicon: Lexicon = load_lexicon(config.lexicon_path)
        self.transcriber: TranscriptionAdapter | None = config.build_transcriber()

    def close(self):
        self.store.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- intake -----------------------------------------------------------

    def ingest_message(self, submission: ingest.MessageSubmission) -> Message:
        return ingest.ingest_message(
            self.store,
            self.lexicon,
            submission,
            transcriber=self.transcriber,
            clock_skew_s=self.config.clock_skew_s,
        )

    def ingest_sensor_csv(self, data: bytes | str) -> ingest.CsvIngestReport:
        return ingest.ingest_sensor_csv(self.store, data)

    # -- messages & annotation ---------------------------------------------

    def query_messages(self, flt: analytics.MessageFilter) -> list[Message]:
        return analytics.query_messages(self.store, flt)

    def annotate(self, message_id: str, unit_index: int, labels=None, split=None) -> Message:
        message = classify.annotate(self.store, message_id, unit_index, labels=labels, split=split)
        routing.distribute(self.store, message)  # importance labels can widen the match set
        return message

    def sensor_window(self, message_id: str, half_width_s: int):
        return analytics.sensor_window(self.store, message_id, half_width_s)

    def classify_text(self, transcript: str) -> dict:
        return {
            "subject": classify.classify_subject(transcript, self.lexicon).value,
            "type_code": classify.classify_type_code(transcript, self.lexicon).value,
            "pest_keywords": sorted(classify.detect_pest_keywords(transcript, self.lexicon)),
        }

    # -- inbox -------------------------------------------------------------

    def fetch_inbox(self, user_id: str, since: datetime | None = None):
        return routing.fetch_inbox(self.store, user_id, since=since)

    def acknowledge(self, user_id: str, message_id: str) -> DeliveryRecord:
        return routing.acknowledge(self.store, user_id, message_id)

    # -- analytics -----------------------------------------------------------

    def summary_report(self, period: str, start: date) -> analytics.SummaryReport:
        return analytics.summary_report(self.store, self.lexicon, period, start)

    def detect_anomalies(self, stream_id, start, end, params: analytics.DetectorParams):
        if not self.store.has_stream(stream_id):
            from .errors import NotFoundError

            raise NotFoundError(f"no stream {stream_id!r}")
        return analytics.detect_anomalies(self.store, stream_id, start, end, params)

    def default_params(self, stream_id: str) -> analytics.DetectorParams:
        stream = self.store.get_stream(stream_id)
        return analytics.DEFAULT_DETECTOR_PARAMS[stream.kind]

    def correlations(
        self,
        stream_ids: list[str] | None = None,
        start: datetime | None = None,
        end: datetime | None = None,
        max_gap_s: int = analytics.DEFAULT_MAX_GAP_S,
        params_overrides: dict | None = None,
    ) -> list[analytics.CorrelationPair]:
        streams = {s.id: s for s in self.store.list_streams()}
        if stream_ids is None:
            stream_ids = sorted(streams)
        anomalies = []
        for sid in stream_ids:
            if sid not in streams:
                raise ValidationError(f"unknown stream {sid!r}", "stream")
            params = analytics.DEFAULT_DETECTOR_PARAMS[streams[sid].kind]
            if params_overrides:
                params = analytics.DetectorParams(
                    delta_threshold=params_overrides.get("delta_threshold", params.delta_threshold),
                    delta_window_s=params_overrides.get("delta_window_s", params.delta_window_s),
                    level_low=params_overrides.get("level_low", params.level_low),
                    level_high=params_overrides.get("level_high", params.level_high),
                )
            anomalies.extend(analytics.detect_anomalies(self.store, sid, start, end, params))
        messages = self.store.list_messages(start=start, end=end)
        return analytics.correlate(anomalies, messages, streams, self.lexicon, max_gap_s=max_gap_s)

    def keyword_stats(self, flt: analytics.MessageFilter, k: int):
        return analytics.keyword_stats(self.store, self.lexicon, flt, k)

    def export_messages_csv(self, flt: analytics.MessageFilter) -> str:
        return analytics.export_messages_csv(self.store, flt)

    def export_readings_csv(self, stream_id=None, start=None, end=None) -> str:
        return analytics.export_readings_csv(self.store, stream_id=stream_id, start=start, end=end)


def parse_message_filter(args: dict) -> analytics.MessageFilter:
    """Build a MessageFilter from wire/CLI arguments (user, from, to, zone,
    keyword, subject, min_importance)."""
    from .timeutil import parse_ts

    return analytics.MessageFilter(
        user_id=args.get("user") or None,
        time_from=parse_ts(args["from"], "from") if args.get("from") else None,
        time_to=parse_ts(args["to"], "to") if args.get("to") else None,
        zone_id=args.get("zone") or None,
        keyword=args.get("keyword") or None,
        subject=parse_enum(Subject, args["subject"], "subject") if args.get("subject") else None,
        importance_at_least=parse_enum(Importance, args["min_importance"], "min_importance")
        if args.get("min_importance")
        else None,
    ).validate()
