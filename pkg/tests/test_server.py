import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from fieldlog.analytics import MessageFilter
from fieldlog.config import ServiceConfig
from fieldlog.server import create_app
from fieldlog.service import Service

SUBMISSION = {
    "author_id": "u1",
    "recorded_at": "2017-06-15T09:00:00Z",
    "beacon_id": "bcn-4",
    "transcript": "Powdery mildew can be seen in the young leaves at the bottom",
}


@pytest.fixture
def service(tmp_path):
    cfg = ServiceConfig(
        data_dir=tmp_path / "data",
        transcriber={"kind": "mock", "mapping": {"uri_1": ["test", 0.9]}},
    )
    svc = Service(cfg)
    seed_entities(svc)
    yield svc
    svc.close()


def seed_entities(svc):
    from fieldlog.model import Role, SensorKind, SensorStream, Subject, SubscriptionRule, User, Zone

    svc.store.put_user(User(id="u1", display_name="Owner", role=Role.OWNER))
    svc.store.put_user(User(id="u2", display_name="Worker"))
    svc.store.put_zone(Zone(id="house4", name="House #4", beacon_ids={"bcn-4"}))
    svc.store.put_zone(Zone(id="house2", name="House #2", beacon_ids={"bcn-2"}))
    svc.store.put_stream(SensorStream(id="co2-h4", kind=SensorKind.CO2, zone_id="house4"))
    svc.store.put_subscription(
        SubscriptionRule(id="r1", user_id="u2", subject_filter={Subject.FARM_PRODUCTS})
    )


@pytest.fixture
def client(service):
    app = create_app(service, ping_interval_s=0.2)
    with TestClient(app) as c:
        yield c


class TestMessages:
    def test_post_valid_submission_201(self, client):
        resp = client.post("/messages", json=SUBMISSION)
        assert resp.status_code == 201
        body = resp.json()
        assert body["zone_id"] == "house4"
        assert body["classification_units"][0]["subject"] == "FarmProducts"

    def test_post_invalid_submission_400_api_error(self, client):
        resp = client.post("/messages", json={"author_id": "u1", "recorded_at": "2017-06-15T09:00:00Z"})
        assert resp.status_code == 400
        body = resp.json()
        assert body["code"] == "Validation"
        assert body["field_path"] == "transcript"

    def test_audio_only_goes_through_mock_adapter(self, client):
        resp = client.post(
            "/messages",
            json={"author_id": "u1", "recorded_at": "2017-06-15T09:00:00Z", "audio_ref": "uri_1"},
        )
        assert resp.status_code == 201
        assert resp.json()["transcript"] == "test"
        assert resp.json()["transcription_confidence"] == 0.9

    def test_unmapped_audio_502(self, client):
        resp = client.post(
            "/messages",
            json={"author_id": "u1", "recorded_at": "2017-06-15T09:00:00Z", "audio_ref": "uri_x"},
        )
        assert resp.status_code == 502
        assert resp.json()["code"] == "TranscriptionFailed"

    def test_get_equals_library_query(self, client, service):
        client.post("/messages", json=SUBMISSION)
        client.post("/messages", json=dict(SUBMISSION, transcript="quiet day", beacon_id="bcn-2"))
        api = client.get("/messages", params={"keyword": "mildew"}).json()
        lib = [m.to_dict() for m in service.query_messages(MessageFilter(keyword="mildew"))]
        assert json.dumps(api, sort_keys=True) == json.dumps(lib, sort_keys=True)

    def test_filters_and_pagination(self, client):
        for i in range(5):
            client.post("/messages", json=dict(SUBMISSION, recorded_at=f"2017-06-15T09:00:0{i}Z"))
        page = client.get("/messages", params={"limit": 2, "offset": 2}).json()
        assert [m["recorded_at"] for m in page] == ["2017-06-15T09:00:02Z", "2017-06-15T09:00:03Z"]

    def test_get_single_and_404(self, client):
        msg_id = client.post("/messages", json=SUBMISSION).json()["id"]
        assert client.get(f"/messages/{msg_id}").json()["id"] == msg_id
        resp = client.get("/messages/ghost")
        assert resp.status_code == 404
        assert resp.json()["code"] == "NotFound"

    def test_annotate_endpoint(self, client):
        msg_id = client.post("/messages", json=SUBMISSION).json()["id"]
        resp = client.post(
            f"/messages/{msg_id}/annotate",
            json={"unit_index": 0, "labels": {"importance": "L5"}},
        )
        assert resp.status_code == 200
        unit = resp.json()["classification_units"][0]
        assert unit["importance"] == "L5"
        assert unit["source"] == "Manual"

    def test_annotate_split(self, client):
        msg_id = client.post("/messages", json=SUBMISSION).json()["id"]
        resp = client.post(
            f"/messages/{msg_id}/annotate",
            json={"unit_index": 0, "split": [{"importance": "L3"}, {"importance": "L4"}]},
        )
        assert len(resp.json()["classification_units"]) == 2


class TestWindowAndSensors:
    def test_csv_ingest_and_window(self, client):
        csv_body = (
            "stream_id,timestamp,value\n"
            "co2-h4,2017-06-15T08:30:00Z,700\n"
            "co2-h4,2017-06-15T09:05:00Z,650\n"
            "co2-h4,2017-06-15T13:00:00Z,600\n"
        )
        resp = client.post("/sensors/ingest", content=csv_body.encode())
        assert resp.json() == {"inserted": 3, "skipped_duplicates": 0, "row_errors": []}
        resp = client.post("/sensors/ingest", content=csv_body.encode())
        assert resp.json()["inserted"] == 0

        msg_id = client.post("/messages", json=SUBMISSION).json()["id"]
        window = client.get(f"/messages/{msg_id}/window", params={"half_width": "2h"}).json()
        assert [r["value"] for r in window["co2-h4"]] == [700.0, 650.0]

    def test_window_no_zone_409(self, client):
        msg_id = client.post(
            "/messages",
            json={"author_id": "u1", "recorded_at": "2017-06-15T09:00:00Z", "transcript": "x"},
        ).json()["id"]
        resp = client.get(f"/messages/{msg_id}/window")
        assert resp.status_code == 409
        assert resp.json()["code"] == "NoZone"

    def test_readings_endpoint(self, client):
        client.post("/sensors/ingest", content=b"stream_id,timestamp,value\nco2-h4,2017-06-15T09:00:00Z,712\n")
        rows = client.get("/streams/co2-h4/readings").json()
        assert rows == [{"stream_id": "co2-h4", "at": "2017-06-15T09:00:00Z", "value": 712.0}]

    def test_stream_crud(self, client):
        resp = client.post("/streams", json={"id": "t1", "kind": "Temperature", "zone_id": "house4"})
        assert resp.status_code == 201
        assert client.post("/streams", json={"id": "t1", "kind": "Temperature", "zone_id": "house4"}).status_code == 409
        assert client.put("/streams/t1", json={"kind": "Temperature", "zone_id": "house2"}).json()["zone_id"] == "house2"
        assert client.delete("/streams/t1").status_code == 204
        assert client.get("/streams/t1").status_code == 404


class TestInboxFlow:
    def test_end_to_end_inbox(self, client):
        msg_id = client.post("/messages", json=SUBMISSION).json()["id"]
        items = client.get("/inbox", params={"user": "u2"}).json()
        assert [i["message"]["id"] for i in items] == [msg_id]
        assert items[0]["delivery"]["state"] == "Delivered"
        # at-least-once until acknowledged
        assert len(client.get("/inbox", params={"user": "u2"}).json()) == 1
        ack = client.post("/inbox/ack", json={"user_id": "u2", "message_id": msg_id})
        assert ack.json()["state"] == "Acknowledged"
        assert client.get("/inbox", params={"user": "u2"}).json() == []

    def test_author_not_self_delivered(self, client, service):
        client.post("/messages", json=SUBMISSION)
        assert service.store.list_deliveries(user_id="u1") == []

    def test_unknown_user_404(self, client):
        assert client.get("/inbox", params={"user": "ghost"}).status_code == 404


class TestReportsAndAnalytics:
    def test_daily_report_zero(self, client):
        report = client.get("/reports/daily", params={"start": "2017-06-15"}).json()
        assert sum(report["message_counts"]["by_subject"].values()) == 0

    def test_report_equals_library(self, client, service):
        client.post("/messages", json=SUBMISSION)
        api = client.get("/reports/daily", params={"start": "2017-06-15"}).json()
        from datetime import date

        lib = service.summary_report("daily", date(2017, 6, 15)).to_dict()
        assert json.dumps(api, sort_keys=True) == json.dumps(lib, sort_keys=True)

    def test_bad_period_400(self, client):
        assert client.get("/reports/hourly", params={"start": "2017-06-15"}).status_code == 400

    def test_anomalies_endpoint(self, client):
        lines = ["stream_id,timestamp,value"]
        for i in range(10):
            value = 900 if i < 5 else 550
            lines.append(f"co2-h4,2017-06-15T09:{i:02d}:00Z,{value}")
        client.post("/sensors/ingest", content="\n".join(lines).encode())
        found = client.get("/anomalies", params={"stream": "co2-h4"}).json()
        assert len(found) == 1
        assert found[0]["kind"] == "SharpChange"
        assert found[0]["magnitude"] >= 300

    def test_export_round_trip(self, client):
        client.post("/sensors/ingest", content=b"stream_id,timestamp,value\nco2-h4,2017-06-15T09:00:00Z,712.5\n")
        exported = client.get("/export/readings.csv")
        assert exported.headers["content-type"].startswith("text/csv")
        resp = client.post("/sensors/ingest", content=exported.text.encode())
        assert resp.json()["inserted"] == 0

    def test_export_messages_csv(self, client):
        client.post("/messages", json=SUBMISSION)
        text = client.get("/export/messages.csv").text
        lines = text.splitlines()
        assert lines[0] == "message_id,recorded_at,author_id,zone_id,subject,importance,type_code,transcript"
        assert len(lines) == 2

    def test_keywords_endpoint(self, client):
        client.post("/messages", json=SUBMISSION)
        stats = client.get("/keywords", params={"k": 3}).json()
        assert ["mildew", 1] in stats


class TestRegistryCrud:
    def test_zone_crud_cycle(self, client):
        assert client.post("/zones", json={"id": "z9", "name": "New", "beacon_ids": ["b9"]}).status_code == 201
        assert client.post("/zones", json={"id": "z9", "name": "Dup"}).status_code == 409
        assert client.get("/zones/z9").json()["name"] == "New"
        assert client.put("/zones/z9", json={"name": "Renamed", "beacon_ids": ["b9"]}).json()["name"] == "Renamed"
        assert client.delete("/zones/z9").status_code == 204
        assert client.get("/zones/z9").status_code == 404

    def test_duplicate_beacon_rejected(self, client):
        resp = client.post("/zones", json={"id": "z9", "name": "", "beacon_ids": ["bcn-4"]})
        assert resp.status_code == 400
        assert resp.json()["field_path"] == "beacon_ids"

    def test_subscription_auto_id(self, client):
        resp = client.post("/subscriptions", json={"user_id": "u2", "keyword_filter": ["mildew"]})
        assert resp.status_code == 201
        assert resp.json()["id"].startswith("sub")

    def test_subscription_requires_filter(self, client):
        assert client.post("/subscriptions", json={"user_id": "u2"}).status_code == 400

    def test_users_listing(self, client):
        ids = [u["id"] for u in client.get("/users").json()]
        assert ids == ["u1", "u2"]


@pytest.fixture
def live_server(service):
    """The event channel needs a real persistent connection; TestClient
    buffers whole responses, so run uvicorn on an ephemeral port."""
    import uvicorn

    app = create_app(service, ping_interval_s=0.2)
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:  # pragma: no cover
            raise RuntimeError("server did not start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=10)


class TestEventChannel:
    def test_live_push_and_replay(self, live_server):
        import httpx

        # one existing inbox item for replay
        first_id = httpx.post(f"{live_server}/messages", json=SUBMISSION).json()["id"]

        received = []
        ready = threading.Event()
        done = threading.Event()

        def consume():
            with httpx.stream("GET", f"{live_server}/events", params={"user": "u2"}, timeout=10.0) as resp:
                for line in resp.iter_lines():
                    event = json.loads(line)
                    received.append(event)
                    if event["type"] == "hello":
                        ready.set()
                    if event["type"] == "inbox_item" and event["message"]["id"] != first_id:
                        done.set()
                        return

        consumer = threading.Thread(target=consume, daemon=True)
        consumer.start()
        assert ready.wait(5.0)
        time.sleep(0.3)  # let the replay finish before publishing live items
        second = httpx.post(f"{live_server}/messages", json=dict(SUBMISSION, transcript="more mildew found"))
        assert second.status_code == 201
        assert done.wait(5.0), f"no live event arrived: {received}"
        consumer.join(timeout=5.0)

        assert received[0]["type"] == "hello"
        replayed = [e for e in received if e["type"] == "inbox_item" and e["message"]["id"] == first_id]
        assert replayed, "existing inbox item was not replayed on connect"
        live = [e for e in received if e["type"] == "inbox_item" and e["message"]["id"] != first_id]
        assert live and live[0]["user_id"] == "u2"

    def test_pings_keep_the_stream_alive(self, live_server):
        import httpx

        got_ping = False
        with httpx.stream("GET", f"{live_server}/events", timeout=10.0) as resp:
            for line in resp.iter_lines():
                if json.loads(line)["type"] == "ping":
                    got_ping = True
                    break
        assert got_ping


class TestStatelessReplay:
    def test_same_data_dir_gives_identical_responses(self, tmp_path):
        cfg = ServiceConfig(data_dir=tmp_path / "replay")
        with Service(cfg) as svc:
            seed_entities(svc)
            app = create_app(svc)
            with TestClient(app) as c:
                c.post("/messages", json=SUBMISSION)
                first = {
                    "messages": c.get("/messages").json(),
                    "report": c.get("/reports/daily", params={"start": "2017-06-15"}).json(),
                    "zones": c.get("/zones").json(),
                }
        # reopen the same directory in a fresh service/app
        with Service(cfg) as svc2:
            app2 = create_app(svc2)
            with TestClient(app2) as c2:
                assert c2.get("/messages").json() == first["messages"]
                assert c2.get("/reports/daily", params={"start": "2017-06-15"}).json() == first["report"]
                assert c2.get("/zones").json() == first["zones"]
