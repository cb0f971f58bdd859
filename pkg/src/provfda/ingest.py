"""JSON-lines host log ingestion: parse, down-sample to five fields, drop noise."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ParseError

log = logging.getLogger(__name__)

CANONICAL_FIELDS = (
    "event_id",
    "process_name",
    "base_file_name",
    "logon_type",
    "parent_process_name",
)

# lowercased source key -> canonical field; first alias found wins
ALIASES = {
    "event_id": ("eventid", "event_id", "eventcode", "system.eventid"),
    "timestamp": (
        "timestamp",
        "timecreated",
        "time_created",
        "@timestamp",
        "utctime",
        "system.timecreated.systemtime",
    ),
    "process_name": ("processname", "process_name", "newprocessname", "image"),
    "base_file_name": ("basefilename", "base_file_name", "filename"),
    "logon_type": ("logontype", "logon_type"),
    "parent_process_name": (
        "parentprocessname",
        "parent_process_name",
        "parentimage",
        "creatorprocessname",
    ),
}


@dataclass(frozen=True)
class RawLog:
    raw_fields: dict
    source_line: int


@dataclass(frozen=True, slots=True)
class LogRecord:
    user_id: str
    timestamp: int  # ms since epoch
    event_id: int
    process_name: str
    base_file_name: str = ""
    logon_type: str = ""
    parent_process_name: str = ""


def _stringify(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


def _flatten(obj: dict, prefix: str, out: dict) -> None:
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict) and value:
            _flatten(value, name + ".", out)
        else:
            out[name] = _stringify(value)


def parse_line(line: str, line_no: int) -> RawLog:
    """Parse one JSON object; nested objects flatten to dot-joined keys."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON ({exc.msg})", line_no) from None
    if not isinstance(obj, dict):
        raise ParseError("top-level value is not an object", line_no)
    if not obj:
        raise ParseError("empty object", line_no)
    flat: dict = {}
    _flatten(obj, "", flat)
    return RawLog(flat, line_no)


def normalize_name(value: str) -> str:
    """Lowercase and strip any Windows or POSIX directory prefix."""
    value = value.strip().strip('"')
    value = value.rsplit("\\", 1)[-1].rsplit("/", 1)[-1]
    return value.lower()


def parse_timestamp(value: str) -> int | None:
    """Integer milliseconds; bare numbers below 1e11 are taken as seconds."""
    value = value.strip()
    if not value:
        return None
    try:
        num = float(value)
    except ValueError:
        try:
            dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError:
            return None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        ms = int(round(dt.timestamp() * 1000))
        return ms if ms > 0 else None
    if num != num or num in (float("inf"), float("-inf")):
        return None
    ms = int(round(num * 1000)) if abs(num) < 1e11 else int(round(num))
    return ms if ms > 0 else None


def _lookup(fields: dict, canonical: str) -> str | None:
    for alias in ALIASES[canonical]:
        if alias in fields:
            return fields[alias]
    return None


def downsample(raw: RawLog, user_id: str) -> LogRecord | None:
    """Keep the five canonical event fields; None means skip this log."""
    fields = {k.lower(): v for k, v in raw.raw_fields.items()}
    event = _lookup(fields, "event_id")
    ts = _lookup(fields, "timestamp")
    proc = _lookup(fields, "process_name")
    if event is None or ts is None or proc is None:
        return None
    try:
        event_id = int(event.strip())
    except ValueError:
        return None
    timestamp = parse_timestamp(ts)
    process_name = normalize_name(proc)
    if event_id <= 0 or timestamp is None or not process_name:
        return None
    return LogRecord(
        user_id=user_id,
        timestamp=timestamp,
        event_id=event_id,
        process_name=process_name,
        base_file_name=normalize_name(_lookup(fields, "base_file_name") or ""),
        logon_type=(_lookup(fields, "logon_type") or "").strip().lower(),
        parent_process_name=normalize_name(_lookup(fields, "parent_process_name") or ""),
    )


def filter_noise_indices(records: Iterable[LogRecord], denylist: Iterable[int] = ()) -> list[int]:
    deny = frozenset(int(e) for e in denylist)
    kept = []
    prev = None
    for i, rec in enumerate(records):
        if rec.event_id in deny:
            continue
        # dataclass equality covers all five fields, user and timestamp
        if rec == prev:
            continue
        kept.append(i)
        prev = rec
    return kept


def filter_noise(records: Iterable[LogRecord], denylist: Iterable[int] = ()) -> Iterator[LogRecord]:
    """Drop denylisted event ids and adjacent exact duplicates.

    A record is a duplicate when it equals the previously *kept* record,
    timestamp included, so the output is always a subsequence of the input.
    """
    deny = frozenset(int(e) for e in denylist)
    prev = None
    for rec in records:
        if rec.event_id in deny or rec == prev:
            continue
        prev = rec
        yield rec


@dataclass
class Corpus:
    records: list[LogRecord] = field(default_factory=list)
    labels: list[bool] | None = None
    line_bytes: list[int] = field(default_factory=list)
    n_lines: int = 0
    n_errors: int = 0
    n_skipped: int = 0

    @property
    def total_bytes(self) -> int:
        return sum(self.line_bytes)


def _is_malicious(value: str | None) -> bool:
    if value is None:
        return False
    return value.strip().lower() in ("1", "true", "malicious", "anomaly", "attack")


def read_jsonl(
    path: str | Path,
    user_field: str = "Hostname",
    user_id: str | None = None,
    denylist: Iterable[int] = (),
    label_field: str | None = "Label",
) -> Corpus:
    """Load a JSON-lines log file into a filtered :class:`Corpus`.

    Malformed lines are counted and logged, never fatal. Labels are read from
    ``label_field`` when at least one line carries it.
    """
    corpus = Corpus()
    recs, labels, sizes = [], [], []
    saw_label = False
    user_key = user_field.lower()
    with open(path, "rb") as fh:
        for line_no, raw_line in enumerate(fh, start=1):
            corpus.n_lines += 1
            line = raw_line.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            try:
                raw = parse_line(line, line_no)
            except ParseError as exc:
                corpus.n_errors += 1
                log.debug("%s", exc)
                continue
            lowered = {k.lower(): v for k, v in raw.raw_fields.items()}
            uid = user_id if user_id is not None else lowered.get(user_key, "unknown")
            rec = downsample(raw, uid)
            if rec is None:
                corpus.n_skipped += 1
                continue
            label_value = lowered.get(label_field.lower()) if label_field else None
            saw_label = saw_label or label_value is not None
            recs.append(rec)
            labels.append(_is_malicious(label_value))
            sizes.append(len(raw_line))
    if corpus.n_errors:
        log.warning("%s: %d malformed lines skipped", path, corpus.n_errors)
    keep = filter_noise_indices(recs, denylist)
    corpus.records = [recs[i] for i in keep]
    corpus.line_bytes = [sizes[i] for i in keep]
    corpus.labels = [labels[i] for i in keep] if saw_label else None
    return corpus


def record_to_json(rec: LogRecord, **extra) -> str:
    obj = {
        "Hostname": rec.user_id,
        "Timestamp": rec.timestamp,
        "EventID": str(rec.event_id),
        "ProcessName": rec.process_name,
        "BaseFileName": rec.base_file_name,
        "LogonType": rec.logon_type,
        "ParentProcessName": rec.parent_process_name,
    }
    obj.update(extra)
    return json.dumps(obj, separators=(",", ":"))
