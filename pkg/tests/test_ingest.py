import json
import threading
import time
from datetime import datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings, strategies as st

from fieldlog.errors import TranscriptionFailed, ValidationError
from fieldlog.ingest import MessageSubmission, ingest_message, ingest_sensor_csv, resolve_location
from fieldlog.model import SensorKind, SensorReading, SensorStream, Subject, User, Zone
from fieldlog.store import Store
from fieldlog.timeutil import now_utc
from fieldlog.transcribe import HttpTranscriber, MockTranscriber

T0 = datetime(2017, 6, 15, 9, 0, 0, tzinfo=timezone.utc)


class TestResolveLocation:
    def test_registered_beacon_wins_over_gps(self, seeded_store):
        zones = seeded_store.list_zones()
        inside_house2 = (43.005, 141.005)
        zone_id, warnings = resolve_location(inside_house2, "bcn-4", zones)
        assert zone_id == "house4"
        assert warnings == []

    def test_gps_inside_fence(self, seeded_store):
        zone_id, _ = resolve_location((43.005, 141.005), None, seeded_store.list_zones())
        assert zone_id == "house2"

    def test_no_signal_is_unzoned(self, seeded_store):
        assert resolve_location(None, None, seeded_store.list_zones()) == (None, [])

    def test_unknown_beacon_warns_and_falls_back(self, seeded_store):
        zone_id, warnings = resolve_location(None, "bcn-ghost", seeded_store.list_zones())
        assert zone_id is None
        assert warnings and "bcn-ghost" in warnings[0]

    def test_unknown_beacon_still_uses_gps(self, seeded_store):
        zone_id, warnings = resolve_location((43.005, 141.005), "bcn-ghost", seeded_store.list_zones())
        assert zone_id == "house2"
        assert warnings

    def test_gps_outside_all_fences_is_unzoned_not_error(self, seeded_store):
        assert resolve_location((10.0, 10.0), None, seeded_store.list_zones())[0] is None

    def test_overlap_prefers_smallest_area_then_id(self, store):
        big = [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]
        small = [(0.2, 0.2), (0.2, 0.4), (0.4, 0.4), (0.4, 0.2)]
        store.put_zone(Zone(id="outer", name="", geofence=big))
        store.put_zone(Zone(id="inner", name="", geofence=small))
        assert resolve_location((0.3, 0.3), None, store.list_zones())[0] == "inner"
        store.put_zone(Zone(id="aaa", name="", geofence=[(v[0] + 0.2, v[1]) for v in small]))
        # equal areas -> lexicographically smallest id
        assert resolve_location((0.4, 0.3), None, store.list_zones())[0] == "aaa"

    def test_beacon_resolution_independent_of_gps(self, seeded_store):
        zones = seeded_store.list_zones()
        for gps in (None, (43.005, 141.005), (89.0, 179.0)):
            assert resolve_location(gps, "bcn-2", zones)[0] == "house2"

    def test_deterministic(self, seeded_store):
        zones = seeded_store.list_zones()
        results = {resolve_location((43.025, 141.005), "bcn-2", zones)[0] for _ in range(5)}
        assert results == {"house2"}


class TestIngestMessage:
    def test_mildew_submission_resolves_zone_and_subject(self, seeded_store, lexicon):
        sub = MessageSubmission(
            author_id="u1",
            recorded_at=T0,
            beacon_id="bcn-4",
            transcript="Powdery mildew can be seen in the young leaves at the bottom",
        )
        msg = ingest_message(seeded_store, lexicon, sub)
        assert msg.zone_id == "house4"
        assert msg.classification_units[0].subject is Subject.FARM_PRODUCTS
        assert seeded_store.get_message(msg.id) == msg

    def test_neither_transcript_nor_audio_rejected(self, seeded_store, lexicon):
        with pytest.raises(ValidationError):
            ingest_message(seeded_store, lexicon, MessageSubmission(author_id="u1", recorded_at=T0))

    def test_unknown_author_rejected(self, seeded_store, lexicon):
        sub = MessageSubmission(author_id="ghost", recorded_at=T0, transcript="hello")
        with pytest.raises(ValidationError) as err:
            ingest_message(seeded_store, lexicon, sub)
        assert err.value.field_path == "author_id"

    def test_audio_only_uses_adapter_fixture(self, seeded_store, lexicon):
        adapter = MockTranscriber({"uri_1": ("test", 0.9)})
        sub = MessageSubmission(author_id="u1", recorded_at=T0, audio_ref="uri_1")
        msg = ingest_message(seeded_store, lexicon, sub, transcriber=adapter)
        assert msg.transcript == "test"
        assert msg.transcription_confidence == 0.9

    def test_adapter_failure_persists_nothing(self, seeded_store, lexicon):
        adapter = MockTranscriber({})
        sub = MessageSubmission(author_id="u1", recorded_at=T0, audio_ref="uri_unknown")
        with pytest.raises(TranscriptionFailed):
            ingest_message(seeded_store, lexicon, sub, transcriber=adapter)
        assert seeded_store.list_messages() == []

    def test_future_recorded_at_beyond_skew_rejected(self, seeded_store, lexicon):
        sub = MessageSubmission(author_id="u1", recorded_at=now_utc() + timedelta(seconds=600), transcript="x")
        with pytest.raises(ValidationError) as err:
            ingest_message(seeded_store, lexicon, sub, clock_skew_s=300)
        assert err.value.field_path == "recorded_at"

    def test_within_skew_accepted(self, seeded_store, lexicon):
        sub = MessageSubmission(author_id="u1", recorded_at=now_utc() + timedelta(seconds=60), transcript="x")
        msg = ingest_message(seeded_store, lexicon, sub, clock_skew_s=300)
        assert msg.recorded_at <= msg.created_at

    def test_explicit_id_is_honored(self, seeded_store, lexicon):
        sub = MessageSubmission(author_id="u1", recorded_at=T0, transcript="x", id="my-id-1")
        assert ingest_message(seeded_store, lexicon, sub).id == "my-id-1"


class _SlowStubHandler(BaseHTTPRequestHandler):
    delay_s = 0.0
    status = 200
    body: dict = {"text": "stub transcript", "confidence": 0.7}

    def do_POST(self):
        time.sleep(self.delay_s)
        payload = json.dumps(self.body).encode()
        self.send_response(self.status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _SlowStubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/"
    server.shutdown()


class TestHttpTranscriber:
    def test_success(self, stub_server):
        _SlowStubHandler.delay_s, _SlowStubHandler.status = 0.0, 200
        result = HttpTranscriber(stub_server, timeout_s=2.0).transcribe("uri-9")
        assert (result.text, result.confidence) == ("stub transcript", 0.7)

    def test_delay_beyond_timeout_fails_with_timeout(self, stub_server):
        _SlowStubHandler.delay_s, _SlowStubHandler.status = 1.5, 200
        with pytest.raises(TranscriptionFailed) as err:
            HttpTranscriber(stub_server, timeout_s=0.3).transcribe("uri-9")
        assert err.value.reason == "timeout"

    def test_remote_error_surfaced_verbatim(self, stub_server):
        _SlowStubHandler.delay_s, _SlowStubHandler.status = 0.0, 503
        with pytest.raises(TranscriptionFailed) as err:
            HttpTranscriber(stub_server, timeout_s=2.0).transcribe("uri-9")
        assert err.value.reason == "remote"
        assert "503" in err.value.message


CSV_3_ROWS = (
    "stream_id,timestamp,value\n"
    "co2-h4,2017-06-15T09:00:00Z,612.5\n"
    "co2-h4,2017-06-15T09:05:00Z,604\n"
    "temp-h4,2017-06-15T09:00:00Z,-3.25\n"
)


class TestSensorCsv:
    def test_three_valid_rows(self, seeded_store):
        report = ingest_sensor_csv(seeded_store, CSV_3_ROWS.encode())
        assert (report.inserted, report.skipped_duplicates, report.row_errors) == (3, 0, [])

    def test_reingest_same_file_inserts_zero(self, seeded_store):
        ingest_sensor_csv(seeded_store, CSV_3_ROWS)
        report = ingest_sensor_csv(seeded_store, CSV_3_ROWS)
        assert (report.inserted, report.skipped_duplicates) == (0, 3)
        assert report.row_errors == []

    def test_bad_row_among_valid_rows(self, seeded_store):
        data = (
            "stream_id,timestamp,value\n"
            "co2-h4,2017-06-15T09:00:00Z,612.5\n"
            "co2-h4,2017-13-40T99:99:99Z,5\n"
            "co2-h4,2017-06-15T09:10:00Z,608\n"
        )
        report = ingest_sensor_csv(seeded_store, data)
        assert report.inserted == 2
        assert [line for line, _ in report.row_errors] == [3]

    def test_wrong_header_ingests_nothing(self, seeded_store):
        with pytest.raises(ValidationError):
            ingest_sensor_csv(seeded_store, "stream,ts,value\nco2-h4,2017-06-15T09:00:00Z,1\n")
        assert seeded_store.count_readings() == 0

    def test_unknown_stream_is_row_error(self, seeded_store):
        report = ingest_sensor_csv(seeded_store, "stream_id,timestamp,value\nghost,2017-06-15T09:00:00Z,1\n")
        assert report.inserted == 0
        assert "ghost" in report.row_errors[0][1]

    def test_value_grammar(self, seeded_store):
        data = (
            "stream_id,timestamp,value\n"
            "co2-h4,2017-06-15T09:00:00Z,+612.5\n"
            "co2-h4,2017-06-15T09:05:00Z,nan\n"
            "co2-h4,2017-06-15T09:10:00Z,6e2\n"
            "co2-h4,2017-06-15T09:15:00Z,-17\n"
        )
        report = ingest_sensor_csv(seeded_store, data)
        assert report.inserted == 2
        assert len(report.row_errors) == 2

    def test_crlf_and_quoting_accepted(self, seeded_store):
        data = 'stream_id,timestamp,value\r\n"co2-h4","2017-06-15T09:00:00Z","612.5"\r\n'
        report = ingest_sensor_csv(seeded_store, data)
        assert report.inserted == 1

    def test_duplicate_within_one_file(self, seeded_store):
        data = (
            "stream_id,timestamp,value\n"
            "co2-h4,2017-06-15T09:00:00Z,612.5\n"
            "co2-h4,2017-06-15T09:00:00Z,612.5\n"
        )
        report = ingest_sensor_csv(seeded_store, data)
        assert (report.inserted, report.skipped_duplicates) == (1, 1)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 50), st.integers(-1000, 1000)), max_size=30))
    def test_idempotency_property(self, tmp_path_factory, rows):
        """Ingesting any file twice leaves storage identical to ingesting once."""
        store = Store(tmp_path_factory.mktemp("csv") / "p.db")
        store.put_zone(Zone(id="z", name="", beacon_ids=set()))
        store.put_stream(SensorStream(id="s", kind=SensorKind.CO2, zone_id="z"))
        lines = ["stream_id,timestamp,value"]
        for minute, value in rows:
            lines.append(f"s,2017-06-15T09:{minute:02d}:00Z,{value}")
        data = "\n".join(lines) + "\n"
        ingest_sensor_csv(store, data)
        once = [(r.at, r.value) for r in store.list_readings("s")]
        report = ingest_sensor_csv(store, data)
        assert report.inserted == 0
        assert [(r.at, r.value) for r in store.list_readings("s")] == once
        store.close()
