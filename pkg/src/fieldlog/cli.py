"""Operator CLI. Every command is a thin shell over a module operation;
direct-mode write commands take the data-dir lock so they cannot race a
running server. Failures exit non-zero with one ``error: code: message`` line.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import analytics, classify as classify_mod, corpus as corpus_mod, simulator
from .config import ServiceConfig
from .errors import FieldlogError
from .ingest import MessageSubmission
from .lexicon import load_lexicon
from .lockfile import DataDirLock
from .service import Service, parse_message_filter
from .timeutil import parse_date, parse_ts


def _fail(exc: FieldlogError):
    click.echo(f"error: {exc.code}: {exc.message}", err=True)
    sys.exit(1)


def _config(ctx) -> ServiceConfig:
    try:
        return ServiceConfig.resolve(data_dir=ctx.obj.get("data_dir"), config_path=ctx.obj.get("config"))
    except FieldlogError as exc:
        _fail(exc)


@click.group()
@click.option("--data-dir", "-d", envvar="FIELDLOG_DATA", default=None, help="Data directory (or FIELDLOG_DATA).")
@click.option("--config", "-c", default=None, help="JSON config file path.")
@click.pass_context
def main(ctx, data_dir, config):
    """fieldlog: sensor streams + located field observations, in one log."""
    ctx.ensure_object(dict)
    ctx.obj["data_dir"] = data_dir
    ctx.obj["config"] = config


@main.command()
@click.option("--host", default=None, help="Bind host (overrides config).")
@click.option("--port", type=int, default=None, help="Bind port (overrides config).")
@click.pass_context
def serve(ctx, host, port):
    """Run the HTTP API server."""
    from .server import serve as run_server

    cfg = _config(ctx)
    if host:
        cfg.bind_host = host
    if port:
        cfg.bind_port = port
    try:
        run_server(cfg)
    except FieldlogError as exc:
        _fail(exc)


@main.command("ingest-sensors")
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_context
def ingest_sensors(ctx, csv_file):
    """Ingest a stream_id,timestamp,value CSV file."""
    cfg = _config(ctx)
    try:
        with DataDirLock(cfg.data_dir), Service(cfg) as svc:
            report = svc.ingest_sensor_csv(csv_file.read_bytes())
    except FieldlogError as exc:
        _fail(exc)
    click.echo(json.dumps(report.to_dict()))
    sys.exit(0 if not report.row_errors else 0)


@main.command("ingest-messages")
@click.argument("jsonl_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_context
def ingest_messages(ctx, jsonl_file):
    """Ingest message submissions from a JSON Lines file."""
    cfg = _config(ctx)
    ingested, errors = 0, []
    try:
        with DataDirLock(cfg.data_dir), Service(cfg) as svc:
            for line_no, line in enumerate(jsonl_file.read_text(encoding="utf-8").splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    svc.ingest_message(MessageSubmission.from_dict(json.loads(line)))
                    ingested += 1
                except json.JSONDecodeError as exc:
                    errors.append({"line": line_no, "reason": f"invalid JSON: {exc.msg}"})
                except FieldlogError as exc:
                    errors.append({"line": line_no, "reason": f"{exc.code}: {exc.message}"})
    except FieldlogError as exc:
        _fail(exc)
    click.echo(json.dumps({"ingested": ingested, "errors": errors}))
    sys.exit(0 if not errors else 2)


@main.command()
@click.argument("message_id")
@click.option("--unit", type=int, default=0, show_default=True, help="Unit index to annotate.")
@click.option("--subject", default=None)
@click.option("--importance", default=None)
@click.option("--type-code", default=None)
@click.option("--split", default=None, help='JSON list of label sets, e.g. \'[{"importance":"L3"},{"importance":"L4"}]\'.')
@click.pass_context
def annotate(ctx, message_id, unit, subject, importance, type_code, split):
    """Manually label (or split) one classification unit."""
    cfg = _config(ctx)
    labels = {k: v for k, v in (("subject", subject), ("importance", importance), ("type_code", type_code)) if v}
    try:
        split_parts = json.loads(split) if split else None
        with DataDirLock(cfg.data_dir), Service(cfg) as svc:
            message = svc.annotate(message_id, unit, labels=labels or None, split=split_parts)
    except json.JSONDecodeError as exc:
        click.echo(f"error: Validation: --split is not valid JSON: {exc.msg}", err=True)
        sys.exit(1)
    except FieldlogError as exc:
        _fail(exc)
    click.echo(json.dumps(message.to_dict(), ensure_ascii=False))


@main.command()
@click.argument("period", type=click.Choice(analytics.PERIODS))
@click.argument("start")
@click.pass_context
def report(ctx, period, start):
    """Print the summary report for a period (start: YYYY-MM-DD)."""
    cfg = _config(ctx)
    try:
        with Service(cfg) as svc:
            rep = svc.summary_report(period, parse_date(start, "start"))
    except FieldlogError as exc:
        _fail(exc)
    click.echo(json.dumps(rep.to_dict(), ensure_ascii=False))


@main.command()
@click.argument("what", type=click.Choice(["messages", "readings"]))
@click.option("--out", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Output file (default: stdout).")
@click.option("--user", default=None)
@click.option("--from", "from_", default=None, help="Half-open range start, YYYY-MM-DDTHH:MM:SSZ.")
@click.option("--to", default=None, help="Half-open range end.")
@click.option("--zone", default=None)
@click.option("--keyword", default=None)
@click.option("--subject", default=None)
@click.option("--min-importance", default=None)
@click.option("--stream", default=None, help="Restrict readings export to one stream.")
@click.pass_context
def export(ctx, what, out, user, from_, to, zone, keyword, subject, min_importance, stream):
    """Export messages or readings as CSV."""
    cfg = _config(ctx)
    try:
        with Service(cfg) as svc:
            if what == "messages":
                flt = parse_message_filter(
                    {"user": user, "from": from_, "to": to, "zone": zone, "keyword": keyword,
                     "subject": subject, "min_importance": min_importance}
                )
                text = svc.export_messages_csv(flt)
            else:
                text = svc.export_readings_csv(
                    stream_id=stream,
                    start=parse_ts(from_, "from") if from_ else None,
                    end=parse_ts(to, "to") if to else None,
                )
    except FieldlogError as exc:
        _fail(exc)
    if out is None:
        click.echo(text, nl=False)
    else:
        out.write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}")


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "-o", type=click.Path(file_okay=False, path_type=Path), required=True, help="Output directory.")
@click.option("--ingest", "do_ingest", is_flag=True, help="Also load the generated data into the data directory.")
@click.pass_context
def simulate(ctx, scenario_file, out, do_ingest):
    """Generate a synthetic scenario (readings.csv, messages.jsonl, ground_truth.json)."""
    try:
        scenario = simulator.load_scenario(scenario_file)
        output = simulator.generate(scenario)
    except FieldlogError as exc:
        _fail(exc)
    out.mkdir(parents=True, exist_ok=True)
    (out / "readings.csv").write_text(output.readings_csv, encoding="utf-8")
    (out / "messages.jsonl").write_text(output.submissions_jsonl, encoding="utf-8")
    (out / "ground_truth.json").write_text(json.dumps(output.ground_truth, indent=2), encoding="utf-8")
    click.echo(f"wrote readings.csv, messages.jsonl, ground_truth.json to {out}")
    if do_ingest:
        cfg = _config(ctx)
        try:
            with DataDirLock(cfg.data_dir), Service(cfg) as svc:
                simulator.install_entities(svc.store, scenario)
                report = svc.ingest_sensor_csv(output.readings_csv)
                ingested = 0
                for line in output.submissions_jsonl.splitlines():
                    if line.strip():
                        svc.ingest_message(MessageSubmission.from_dict(json.loads(line)))
                        ingested += 1
        except FieldlogError as exc:
            _fail(exc)
        click.echo(json.dumps({"readings": report.to_dict(), "messages_ingested": ingested}))


@main.command("load-corpus")
@click.pass_context
def load_corpus(ctx):
    """Load the bundled annotated 200-message corpus into the data directory."""
    cfg = _config(ctx)
    try:
        with DataDirLock(cfg.data_dir), Service(cfg) as svc:
            count = corpus_mod.install_corpus(svc.store)
    except FieldlogError as exc:
        _fail(exc)
    click.echo(json.dumps({"messages_loaded": count}))


@main.command()
@click.argument("transcript")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False), default=None)
def classify(transcript, lexicon_path):
    """Classify a transcript with the rule engine (no storage access)."""
    try:
        lex = load_lexicon(lexicon_path)
        subject = classify_mod.classify_subject(transcript, lex)
        type_code = classify_mod.classify_type_code(transcript, lex)
        pests = sorted(classify_mod.detect_pest_keywords(transcript, lex))
    except FieldlogError as exc:
        _fail(exc)
    click.echo(f"subject={subject.value} type_code={type_code.value} pest_keywords={','.join(pests) or '-'}")


if __name__ == "__main__":
    main()
