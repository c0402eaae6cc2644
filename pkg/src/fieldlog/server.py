"""HTTP/JSON API over every module operation, plus the push event channel.

Every endpoint is a thin shell: parse arguments, call the service, emit the
operation result's own serialization. Errors map FieldlogError codes to
status codes (Validation 400, NotFound 404, Conflict/NoZone 409,
TranscriptionFailed 502, Internal 500) with an ApiError JSON body.
"""

from __future__ import annotations

import asyncio
import json
import logging
import threading
from contextlib import asynccontextmanager
from datetime import date

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from . import analytics
from .config import ServiceConfig
from .errors import FieldlogError, ValidationError
from .ingest import MessageSubmission
from .lockfile import DataDirLock
from .model import SensorStream, SubscriptionRule, User, Zone
from .service import Service, parse_message_filter
from .timeutil import parse_date, parse_duration_s, parse_ts

logger = logging.getLogger(__name__)

_STATUS_BY_CODE = {
    "Validation": 400,
    "NotFound": 404,
    "Conflict": 409,
    "NoZone": 409,
    "TranscriptionFailed": 502,
    "Internal": 500,
}


class EventHub:
    """Fan-out of new inbox items to connected /events streams.

    publish() is called from worker threads; queue puts hop onto the event
    loop thread-safely."""

    def __init__(self):
        self._queues: set[asyncio.Queue] = set()
        self._loop: asyncio.AbstractEventLoop | None = None
        self._lock = threading.Lock()

    def attach(self, loop: asyncio.AbstractEventLoop):
        self._loop = loop

    def register(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue()
        with self._lock:
            self._queues.add(q)
        return q

    def unregister(self, q: asyncio.Queue):
        with self._lock:
            self._queues.discard(q)

    def publish(self, item: dict):
        if self._loop is None:
            return
        with self._lock:
            queues = list(self._queues)
        for q in queues:
            self._loop.call_soon_threadsafe(q.put_nowait, item)


def _inbox_event(user_id: str, message, delivery) -> dict:
    return {
        "type": "inbox_item",
        "user_id": user_id,
        "message": message.to_dict(),
        "delivery": delivery.to_dict(),
    }


def create_app(service: Service, ping_interval_s: float = 15.0) -> FastAPI:
    hub = EventHub()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        hub.attach(asyncio.get_running_loop())
        yield

    app = FastAPI(title="fieldlog", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.service = service
    app.state.hub = hub

    @app.exception_handler(FieldlogError)
    async def fieldlog_error(request: Request, exc: FieldlogError):
        return JSONResponse(status_code=_STATUS_BY_CODE.get(exc.code, 500), content=exc.to_dict())

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        logger.exception("unhandled error on %s %s", request.method, request.url.path)
        return JSONResponse(status_code=500, content={"code": "Internal", "message": str(exc)})

    def paginate(items: list, limit: int | None, offset: int | None) -> list:
        off = max(0, offset or 0)
        lim = service.config.page_limit if limit is None else limit
        return items[off : off + lim]

    def _conflict(message: str):
        from .errors import ConflictError

        raise ConflictError(message)

    # -- messages ---------------------------------------------------------

    @app.post("/messages", status_code=201)
    def post_message(body: dict):
        submission = MessageSubmission.from_dict(body)
        message = service.ingest_message(submission)
        for record in service.store.list_deliveries(message_id=message.id):
            hub.publish(_inbox_event(record.user_id, message, record))
        return message.to_dict()

    @app.get("/messages")
    def get_messages(request: Request, limit: int | None = None, offset: int | None = None):
        flt = parse_message_filter(dict(request.query_params))
        messages = service.query_messages(flt)
        return [m.to_dict() for m in paginate(messages, limit, offset)]

    @app.get("/messages/{message_id}")
    def get_message(message_id: str):
        return service.store.get_message(message_id).to_dict()

    @app.post("/messages/{message_id}/annotate")
    def post_annotate(message_id: str, body: dict):
        if "unit_index" not in body:
            raise ValidationError("unit_index is required", "unit_index")
        before = {r.user_id for r in service.store.list_deliveries(message_id=message_id)}
        message = service.annotate(
            message_id,
            int(body["unit_index"]),
            labels=body.get("labels"),
            split=body.get("split"),
        )
        for record in service.store.list_deliveries(message_id=message_id):
            if record.user_id not in before:
                hub.publish(_inbox_event(record.user_id, message, record))
        return message.to_dict()

    @app.get("/messages/{message_id}/window")
    def get_window(message_id: str, half_width: str = "3600"):
        width = parse_duration_s(half_width, "half_width")
        window = service.sensor_window(message_id, width)
        return {
            stream_id: [r.to_dict() for r in readings] for stream_id, readings in sorted(window.items())
        }

    @app.get("/classify")
    def get_classify(transcript: str):
        return service.classify_text(transcript)

    # -- inbox ------------------------------------------------------------

    @app.get("/inbox")
    def get_inbox(user: str, since: str | None = None):
        since_ts = parse_ts(since, "since") if since else None
        items = service.fetch_inbox(user, since=since_ts)
        return [{"message": m.to_dict(), "delivery": d.to_dict()} for m, d in items]

    @app.post("/inbox/ack")
    def post_ack(body: dict):
        for key in ("user_id", "message_id"):
            if not body.get(key):
                raise ValidationError(f"{key} is required", key)
        return service.acknowledge(body["user_id"], body["message_id"]).to_dict()

    # -- sensors ----------------------------------------------------------

    @app.post("/sensors/ingest")
    async def post_sensor_csv(request: Request):
        data = await request.body()
        report = await asyncio.to_thread(service.ingest_sensor_csv, data)
        return report.to_dict()

    @app.get("/streams")
    def get_streams(zone: str | None = None):
        return [s.to_dict() for s in service.store.list_streams(zone_id=zone)]

    @app.post("/streams", status_code=201)
    def post_stream(body: dict):
        stream = SensorStream.from_dict(body)
        if service.store.has_stream(stream.id):
            _conflict(f"stream {stream.id!r} already exists")
        return service.store.put_stream(stream).to_dict()

    @app.get("/streams/{stream_id}")
    def get_stream(stream_id: str):
        return service.store.get_stream(stream_id).to_dict()

    @app.put("/streams/{stream_id}")
    def put_stream(stream_id: str, body: dict):
        body = dict(body, id=stream_id)
        service.store.get_stream(stream_id)
        return service.store.put_stream(SensorStream.from_dict(body)).to_dict()

    @app.delete("/streams/{stream_id}", status_code=204)
    def delete_stream(stream_id: str):
        service.store.delete_stream(stream_id)

    @app.get("/streams/{stream_id}/readings")
    def get_readings(stream_id: str, request: Request):
        service.store.get_stream(stream_id)
        q = request.query_params
        start = parse_ts(q["from"], "from") if q.get("from") else None
        end = parse_ts(q["to"], "to") if q.get("to") else None
        return [r.to_dict() for r in service.store.list_readings(stream_id, start=start, end=end)]

    # -- analytics ----------------------------------------------------------

    @app.get("/reports/{period}")
    def get_report(period: str, start: str):
        return service.summary_report(period, parse_date(start, "start")).to_dict()

    def _detector_params(stream_id: str, q) -> analytics.DetectorParams:
        defaults = service.default_params(stream_id)
        return analytics.DetectorParams(
            delta_threshold=float(q.get("delta_threshold", defaults.delta_threshold)),
            delta_window_s=parse_duration_s(q["delta_window"], "delta_window")
            if q.get("delta_window")
            else defaults.delta_window_s,
            level_low=float(q["level_low"]) if q.get("level_low") else defaults.level_low,
            level_high=float(q["level_high"]) if q.get("level_high") else defaults.level_high,
        ).validate()

    @app.get("/anomalies")
    def get_anomalies(stream: str, request: Request):
        q = request.query_params
        start = parse_ts(q["from"], "from") if q.get("from") else None
        end = parse_ts(q["to"], "to") if q.get("to") else None
        params = _detector_params(stream, q)
        return [a.to_dict() for a in service.detect_anomalies(stream, start, end, params)]

    @app.get("/correlations")
    def get_correlations(request: Request):
        q = request.query_params
        start = parse_ts(q["from"], "from") if q.get("from") else None
        end = parse_ts(q["to"], "to") if q.get("to") else None
        max_gap = parse_duration_s(q["max_gap"], "max_gap") if q.get("max_gap") else analytics.DEFAULT_MAX_GAP_S
        overrides = {}
        if q.get("delta_threshold"):
            overrides["delta_threshold"] = float(q["delta_threshold"])
        if q.get("delta_window"):
            overrides["delta_window_s"] = parse_duration_s(q["delta_window"], "delta_window")
        if q.get("level_low"):
            overrides["level_low"] = float(q["level_low"])
        if q.get("level_high"):
            overrides["level_high"] = float(q["level_high"])
        stream_ids = q.get("stream").split(",") if q.get("stream") else None
        pairs = service.correlations(
            stream_ids=stream_ids, start=start, end=end, max_gap_s=max_gap,
            params_overrides=overrides or None,
        )
        return [p.to_dict() for p in pairs]

    @app.get("/keywords")
    def get_keywords(request: Request, k: int = 10):
        flt = parse_message_filter(dict(request.query_params))
        return [[token, count] for token, count in service.keyword_stats(flt, k)]

    @app.get("/export/messages.csv")
    def export_messages(request: Request):
        flt = parse_message_filter(dict(request.query_params))
        return Response(content=service.export_messages_csv(flt), media_type="text/csv")

    @app.get("/export/readings.csv")
    def export_readings(request: Request):
        q = request.query_params
        start = parse_ts(q["from"], "from") if q.get("from") else None
        end = parse_ts(q["to"], "to") if q.get("to") else None
        csv_text = service.export_readings_csv(stream_id=q.get("stream") or None, start=start, end=end)
        return Response(content=csv_text, media_type="text/csv")

    # -- registries ---------------------------------------------------------

    def _register_crud(name: str, model_cls, put, get, list_, delete, exists):
        @app.get(f"/{name}")
        def list_entities():
            return [e.to_dict() for e in list_()]

        @app.post(f"/{name}", status_code=201)
        def create_entity(body: dict):
            if name == "subscriptions" and not body.get("id"):
                body = dict(body, id=service.store.next_subscription_id())
            entity = model_cls.from_dict(body)
            if exists(entity.id):
                _conflict(f"{name[:-1]} {entity.id!r} already exists")
            return put(entity).to_dict()

        @app.get(f"/{name}/{{entity_id}}")
        def get_entity(entity_id: str):
            return get(entity_id).to_dict()

        @app.put(f"/{name}/{{entity_id}}")
        def update_entity(entity_id: str, body: dict):
            get(entity_id)
            return put(model_cls.from_dict(dict(body, id=entity_id))).to_dict()

        @app.delete(f"/{name}/{{entity_id}}", status_code=204)
        def delete_entity(entity_id: str):
            delete(entity_id)

    store = service.store
    _register_crud("zones", Zone, store.put_zone, store.get_zone, store.list_zones, store.delete_zone, store.has_zone)
    _register_crud("users", User, store.put_user, store.get_user, store.list_users, store.delete_user, store.has_user)

    def _sub_exists(rule_id: str) -> bool:
        try:
            store.get_subscription(rule_id)
            return True
        except FieldlogError:
            return False

    _register_crud(
        "subscriptions",
        SubscriptionRule,
        store.put_subscription,
        store.get_subscription,
        store.list_subscriptions,
        store.delete_subscription,
        _sub_exists,
    )

    # -- event channel ---------------------------------------------------------

    @app.get("/events")
    async def get_events(user: str | None = None, since: str | None = None):
        queue = hub.register()

        async def stream():
            try:
                yield json.dumps({"type": "hello"}) + "\n"
                if user is not None:
                    since_ts = parse_ts(since, "since") if since else None
                    items = await asyncio.to_thread(service.fetch_inbox, user, since_ts)
                    for message, delivery in items:
                        yield json.dumps(_inbox_event(user, message, delivery)) + "\n"
                while True:
                    try:
                        item = await asyncio.wait_for(queue.get(), timeout=ping_interval_s)
                    except asyncio.TimeoutError:
                        yield json.dumps({"type": "ping"}) + "\n"
                        continue
                    if user is None or item.get("user_id") == user:
                        yield json.dumps(item) + "\n"
            finally:
                hub.unregister(queue)

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    return app


def serve(config: ServiceConfig):
    """Run the API server; holds the data-dir lock for the whole run."""
    import uvicorn

    with DataDirLock(config.data_dir):
        service = Service(config)
        app = create_app(service)
        try:
            uvicorn.run(app, host=config.bind_host, port=config.bind_port, log_level="info")
        finally:
            service.close()
