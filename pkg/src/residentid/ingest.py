"""CASAS-style event log parsing and feature assembly.

Log lines are whitespace separated: timestamp, sensor id, status and an
optional activity annotation ("R1_Wandering begin"). Per-event resident
labels are derived from the begin/end spans; events outside any span
are labeled unknown and excluded from loss and metrics downstream, but
kept in sequence order. Feature rows concatenate the 6-dim time vector,
a one-hot sensor id, a binary status and the positional vector, and are
cut into fixed-length chunks for the tagger.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import AnnotationWarning, DataError
from .embedding import PositionalEncoder
from .timecodec import encode_timestamp, parse_timestamp

UNKNOWN_RESIDENT = "unknown"

DEFAULT_ON_STATUSES = frozenset({"ON", "OPEN", "PRESENT", "TRUE"})

_EPOCH = datetime(1970, 1, 1)


def _seconds(ts: datetime) -> float:
    return (ts - _EPOCH).total_seconds()


@dataclass(frozen=True)
class Annotation:
    activity: str
    marker: str  # "begin" | "end"


@dataclass(frozen=True)
class EventRecord:
    timestamp: datetime
    sensor_id: str
    status: str
    annotation: Annotation | None = None


@dataclass(frozen=True)
class LabeledEvent:
    event: EventRecord
    resident: str  # configured resident id or UNKNOWN_RESIDENT


@dataclass
class ParseResult:
    records: list[EventRecord]
    errors: list[tuple[int, str, str]]  # (line number, raw line, reason)


@dataclass(frozen=True)
class SamplingConfig:
    """Down-/up-sampling knobs for stationary-heavy logs.

    downsample_interval is the rate-limit window T in seconds (0
    disables); home_sensor_map names each resident's own sensor.
    """

    downsample_interval: float = 60.0
    home_sensor_map: dict[str, str] = field(default_factory=dict)
    upsample_factor: int = 8

    def __post_init__(self) -> None:
        if self.downsample_interval < 0:
            raise ValueError("downsample_interval must be >= 0")
        if self.upsample_factor < 1:
            raise ValueError("upsample_factor must be >= 1")


@dataclass
class FeatureSequence:
    """One fixed-length tagger input chunk.

    mask marks real rows; padding may only trail. labels use -1 for
    events without a resident label (excluded from loss and metrics but
    present so chunks keep the original event spacing).
    """

    features: np.ndarray  # (chunk_len, F) float64
    labels: np.ndarray  # (chunk_len,) int64
    mask: np.ndarray  # (chunk_len,) bool

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.mask = np.asarray(self.mask, dtype=bool)
        L = self.features.shape[0]
        if self.labels.shape != (L,) or self.mask.shape != (L,):
            raise ValueError("features, labels and mask lengths differ")
        n_real = int(self.mask.sum())
        if not np.all(self.mask[:n_real]) or np.any(self.mask[n_real:]):
            raise ValueError("padding must trail the real rows")

    @property
    def n_real(self) -> int:
        return int(self.mask.sum())


def _split_line(line: str, default_year: int | None) -> EventRecord:
    tokens = line.split()
    if len(tokens) < 3:
        raise DataError("expected at least timestamp, sensor and status")
    # A one-token timestamp uses the ISO 'T' separator; otherwise the
    # date and time are two whitespace tokens.
    if "T" in tokens[0] or len(tokens) == 3:
        ts_text, rest = tokens[0], tokens[1:]
    else:
        ts_text, rest = f"{tokens[0]} {tokens[1]}", tokens[2:]
    if len(rest) < 2:
        raise DataError("missing sensor or status field")
    if len(rest) > 4:
        raise DataError(f"too many fields ({len(tokens)} tokens)")
    timestamp = parse_timestamp(ts_text, default_year=default_year)
    sensor_id, status = rest[0], rest[1]
    annotation = None
    if len(rest) == 3:
        raise DataError(f"annotation {rest[2]!r} lacks a begin/end marker")
    if len(rest) == 4:
        marker = rest[3].lower()
        if marker not in ("begin", "end"):
            raise DataError(f"unknown annotation marker {rest[3]!r}")
        annotation = Annotation(activity=rest[2], marker=marker)
    return EventRecord(timestamp, sensor_id, status, annotation)


def parse_log(
    stream: TextIO | Iterable[str],
    default_year: int | None = None,
    max_error_fraction: float = 0.10,
) -> ParseResult:
    """Parse a CASAS whitespace log.

    Lines that fail to parse are collected with their line numbers
    instead of being dropped silently; if more than max_error_fraction
    of the non-blank lines are malformed the whole parse aborts.
    """
    records: list[EventRecord] = []
    errors: list[tuple[int, str, str]] = []
    n_lines = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        n_lines += 1
        try:
            records.append(_split_line(line, default_year))
        except DataError as exc:
            errors.append((lineno, line, str(exc)))
    if n_lines and len(errors) / n_lines > max_error_fraction:
        sample = "; ".join(f"line {ln}: {why}" for ln, _, why in errors[:5])
        raise DataError(
            f"{len(errors)} of {n_lines} lines malformed (> "
            f"{max_error_fraction:.0%}): {sample}"
        )
    return ParseResult(records=records, errors=errors)


def parse_log_file(path: str | Path, default_year: int | None = None) -> ParseResult:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_log(fh, default_year=default_year)


def format_record(record: EventRecord) -> str:
    """Render a record back into the whitespace log layout."""
    fmt = "%Y-%m-%d %H:%M:%S.%f" if record.timestamp.microsecond else "%Y-%m-%d %H:%M:%S"
    parts = [record.timestamp.strftime(fmt), record.sensor_id, record.status]
    if record.annotation is not None:
        parts += [record.annotation.activity, record.annotation.marker]
    return " ".join(parts)


def _resident_tag(activity: str) -> str:
    return activity.split("_", 1)[0]


def label_events(records: Sequence[EventRecord], residents: Sequence[str]) -> list[LabeledEvent]:
    """Attach a resident label to every event from the begin/end spans.

    A begin opens a span keyed by its activity string; an end closes
    it. Each event takes the resident of the most recently opened
    still-active span (including the events carrying the begin and end
    markers themselves); events with no active span become unknown. An
    end without a matching begin is ignored with a warning, as is a
    span whose resident tag is not configured.
    """
    known = set(residents)
    open_spans: dict[str, tuple[str, int]] = {}  # activity -> (resident, open order)
    order = 0
    labeled: list[LabeledEvent] = []
    for rec in records:
        ann = rec.annotation
        if ann is not None and ann.marker == "begin":
            tag = _resident_tag(ann.activity)
            if tag in known:
                open_spans[ann.activity] = (tag, order)
                order += 1
            else:
                warnings.warn(
                    f"activity {ann.activity!r} has no configured resident tag",
                    AnnotationWarning,
                    stacklevel=2,
                )
        if open_spans:
            resident = max(open_spans.values(), key=lambda v: v[1])[0]
        else:
            resident = UNKNOWN_RESIDENT
        labeled.append(LabeledEvent(event=rec, resident=resident))
        if ann is not None and ann.marker == "end":
            if ann.activity in open_spans:
                del open_spans[ann.activity]
            elif _resident_tag(ann.activity) in known:
                warnings.warn(
                    f"end marker for {ann.activity!r} without a begin; ignored",
                    AnnotationWarning,
                    stacklevel=2,
                )
    return labeled


def downsample(
    events: Sequence[LabeledEvent],
    cfg: SamplingConfig,
    known_sensors: Iterable[str] | None = None,
) -> list[LabeledEvent]:
    """Rate-limit each resident's stationary home-sensor runs.

    Within a run of consecutive events (in that resident's own event
    stream) from their home sensor, an event is dropped when it falls
    within downsample_interval seconds of the previously kept one. The
    run restarts once the resident triggers a different sensor. Other
    events pass through unchanged; order is preserved.
    """
    if known_sensors is not None:
        known = set(known_sensors)
        for resident, sensor in cfg.home_sensor_map.items():
            if sensor not in known:
                raise DataError(
                    f"home sensor {sensor!r} for {resident!r} is not a known sensor"
                )
    if cfg.downsample_interval <= 0:
        return list(events)
    interval = cfg.downsample_interval
    last_kept: dict[str, float] = {}
    prev_sensor: dict[str, str] = {}
    kept: list[LabeledEvent] = []
    for ev in events:
        resident = ev.resident
        sensor = ev.event.sensor_id
        home = cfg.home_sensor_map.get(resident)
        keep = True
        if home is not None and sensor == home:
            t = _seconds(ev.event.timestamp)
            in_run = prev_sensor.get(resident) == home and resident in last_kept
            if in_run and t - last_kept[resident] <= interval:
                keep = False
            else:
                last_kept[resident] = t
        if resident != UNKNOWN_RESIDENT:
            prev_sensor[resident] = sensor
        if keep:
            kept.append(ev)
    return kept


def status_value(status: str, on_statuses: frozenset[str] = DEFAULT_ON_STATUSES) -> float:
    """Binary sensor state: ON-like strings and nonzero readings map to 1."""
    if status.upper() in on_statuses:
        return 1.0
    try:
        return 1.0 if float(status) != 0.0 else 0.0
    except ValueError:
        return 0.0


def feature_width(n_sensors: int, encoder: PositionalEncoder) -> int:
    return 6 + n_sensors + 1 + encoder.dim


def build_features(
    events: Sequence[LabeledEvent],
    encoder: PositionalEncoder,
    sensor_vocab: Sequence[str],
    residents: Sequence[str],
    on_statuses: frozenset[str] = DEFAULT_ON_STATUSES,
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the numeric feature matrix and label vector.

    Row layout: time vector (6) + one-hot sensor id (|vocab|) + binary
    status (1) + positional vector. Labels are indices into residents,
    -1 for unknown.
    """
    vocab_index = {sid: i for i, sid in enumerate(sensor_vocab)}
    resident_index = {rid: i for i, rid in enumerate(residents)}
    n_sensors = len(sensor_vocab)
    width = feature_width(n_sensors, encoder)
    features = np.zeros((len(events), width), dtype=np.float64)
    labels = np.full(len(events), -1, dtype=np.int64)
    for row, ev in enumerate(events):
        rec = ev.event
        try:
            s = vocab_index[rec.sensor_id]
        except KeyError:
            raise DataError(f"sensor {rec.sensor_id!r} not in vocabulary") from None
        vec = encoder.encode(rec.sensor_id)
        features[row, :6] = encode_timestamp(rec.timestamp)
        features[row, 6 + s] = 1.0
        features[row, 6 + n_sensors] = status_value(rec.status, on_statuses)
        if encoder.dim:
            features[row, 6 + n_sensors + 1 :] = vec
        if ev.resident in resident_index:
            labels[row] = resident_index[ev.resident]
    return features, labels


def chunk(features: np.ndarray, labels: np.ndarray, chunk_len: int) -> list[FeatureSequence]:
    """Cut rows into consecutive non-overlapping fixed-length chunks.

    The final partial chunk is zero-padded with mask=False rows.
    """
    if chunk_len < 1:
        raise ValueError("chunk_len must be >= 1")
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = features.shape[0]
    out: list[FeatureSequence] = []
    for start in range(0, n, chunk_len):
        stop = min(start + chunk_len, n)
        real = stop - start
        f = np.zeros((chunk_len, features.shape[1]), dtype=np.float64)
        l = np.full(chunk_len, -1, dtype=np.int64)
        m = np.zeros(chunk_len, dtype=bool)
        f[:real] = features[start:stop]
        l[:real] = labels[start:stop]
        m[:real] = True
        out.append(FeatureSequence(features=f, labels=l, mask=m))
    return out


def upsample_training(
    chunks: Sequence[FeatureSequence], factor: int, rng_seed: int
) -> list[FeatureSequence]:
    """Duplicate training chunks and shuffle; applied after the split."""
    if factor < 1:
        raise ValueError("upsample factor must be >= 1")
    repeated = [c for c in chunks for _ in range(factor)]
    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(len(repeated))
    return [repeated[i] for i in order]


def save_chunks_jsonl(chunks: Sequence[FeatureSequence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in chunks:
            json.dump(
                {
                    "features": c.features.tolist(),
                    "labels": c.labels.tolist(),
                    "mask": c.mask.astype(int).tolist(),
                },
                fh,
            )
            fh.write("\n")


def load_chunks_jsonl(path: str | Path) -> list[FeatureSequence]:
    chunks = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            chunks.append(
                FeatureSequence(
                    features=np.asarray(d["features"]),
                    labels=np.asarray(d["labels"]),
                    mask=np.asarray(d["mask"], dtype=bool),
                )
            )
    return chunks


def save_chunk_index(chunks: Sequence[FeatureSequence], path: str | Path) -> None:
    """CSV overview of the chunk list (one row per chunk)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["chunk", "rows", "real_rows", "labeled_rows"])
        for i, c in enumerate(chunks):
            writer.writerow(
                [i, len(c.mask), c.n_real, int(((c.labels >= 0) & c.mask).sum())]
            )
