"""Event-log ingestion and order-sign series construction."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import LabelMismatch, MalformedRow, TooShort, ZeroSize

NS_PER_DAY = 86_400 * 1_000_000_000
SESSION_START = dt.time(8, 0, 0)
SESSION_END = dt.time(17, 0, 0)

CSV_COLUMNS = ("timestamp_ns", "kind", "size", "pair", "day")
_PAIR_RE = re.compile(r"^[A-Za-z0-9]+/[A-Za-z0-9]+$")


class FlowKind(str, Enum):
    ARRIVAL = "A"
    DEPARTURE = "D"


@dataclass(frozen=True, slots=True)
class OrderEvent:
    timestamp: int  # ns since epoch, UTC
    kind: FlowKind
    size: float
    pair: str
    day: str  # ISO date


@dataclass(frozen=True)
class SeriesLabel:
    """(pair, flow kind, span). ``days`` has one entry intra-day, two cross-day."""

    pair: str
    flow: FlowKind
    days: tuple[str, ...]

    @property
    def span(self) -> str:
        return "crossday" if len(self.days) == 2 else "intraday"

    def as_dict(self) -> dict:
        return {"pair": self.pair, "flow": self.flow.value, "days": list(self.days), "span": self.span}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SeriesLabel":
        return cls(d["pair"], FlowKind(d["flow"]), tuple(d["days"]))

    def slug(self) -> str:
        return "_".join([self.pair.replace("/", ""), self.flow.value, *self.days])


@dataclass(frozen=True, eq=False)
class SignSeries:
    """Immutable +-1 series. ``boundary_index`` is r* (cross-day only)."""

    signs: np.ndarray
    label: SeriesLabel | None = None
    boundary_index: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.signs)
        if arr.ndim != 1:
            raise ValueError("signs must be one-dimensional")
        if arr.size < 2:
            raise TooShort(f"sign series needs N >= 2, got {arr.size}")
        if not np.all((arr == 1) | (arr == -1)):
            raise ValueError("sign series entries must be -1 or +1")
        arr = arr.astype(np.int8, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "signs", arr)
        r = self.boundary_index
        if r is not None and not (1 <= r < arr.size):
            raise ValueError(f"boundary index {r} outside [1, {arr.size})")

    def __len__(self) -> int:
        return self.signs.size

    def values(self) -> np.ndarray:
        return self.signs.astype(np.float64)


@dataclass(frozen=True)
class SummaryStats:
    n_arrivals: int
    n_departures: int
    pct_sell_arrivals: float
    pct_sell_departures: float


def _parse_row(fields: list[str], cols: dict[str, int], row: int) -> OrderEvent:
    try:
        ts = int(fields[cols["timestamp_ns"]])
        kind = FlowKind(fields[cols["kind"]].strip())
        size = float(fields[cols["size"]])
        pair = fields[cols["pair"]].strip()
        day = fields[cols["day"]].strip()
        dt.date.fromisoformat(day)
    except (ValueError, IndexError) as exc:
        raise MalformedRow(row, str(exc)) from None
    if not math.isfinite(size):
        raise MalformedRow(row, f"non-finite size {fields[cols['size']]!r}")
    if not _PAIR_RE.match(pair):
        raise MalformedRow(row, f"pair {pair!r} is not of the form XXX/YYY")
    if size == 0:
        raise ZeroSize(row)
    return OrderEvent(ts, kind, size, pair, day)


def parse_events(stream: IO, schema: Mapping[str, str] | None = None) -> list[OrderEvent]:
    """Parse an event CSV into ``OrderEvent`` objects, in file order.

    ``stream`` may be binary or text. ``schema`` maps each canonical field
    name (``timestamp_ns, kind, size, pair, day``) to the header used in the
    file; omitted fields keep their canonical name. Row numbers in errors
    count the header as row 1.
    """
    if isinstance(stream, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(stream, "mode", ""):
        stream = io.TextIOWrapper(stream, encoding="utf-8", newline="")
    schema = dict(schema or {})
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        return []
    cols = {}
    for name in CSV_COLUMNS:
        col = schema.get(name, name)
        if col not in header:
            raise MalformedRow(1, f"missing column {col!r}")
        cols[name] = header.index(col)

    events = []
    width = len(header)
    for row, fields in enumerate(reader, start=2):
        if not fields:
            continue
        if len(fields) != width:
            raise MalformedRow(row, f"expected {width} fields, got {len(fields)}")
        events.append(_parse_row(fields, cols, row))
    return events


def read_events(path, schema: Mapping[str, str] | None = None) -> list[OrderEvent]:
    with open(path, "rb") as fh:
        return parse_events(fh, schema)


def _time_ns(t: dt.time) -> int:
    return ((t.hour * 60 + t.minute) * 60 + t.second) * 1_000_000_000 + t.microsecond * 1000


def filter_session(
    events: Iterable[OrderEvent],
    start: dt.time = SESSION_START,
    end: dt.time = SESSION_END,
) -> list[OrderEvent]:
    """Keep events whose UTC time of day lies in ``[start, end)``."""
    lo, hi = _time_ns(start), _time_ns(end)
    if lo >= hi:
        raise ValueError("session start must precede session end")
    return [e for e in events if lo <= e.timestamp % NS_PER_DAY < hi]


def build_sign_series(events: Iterable[OrderEvent], kind: FlowKind | str, pair: str, day: str) -> SignSeries:
    kind = FlowKind(kind)
    signs = [1 if e.size > 0 else -1 for e in events if e.kind is kind and e.pair == pair and e.day == day]
    if len(signs) < 2:
        raise TooShort(f"{len(signs)} {kind.name.lower()} events for {pair} on {day}; need at least 2")
    return SignSeries(np.array(signs, dtype=np.int8), SeriesLabel(pair, kind, (day,)))


def group_keys(events: Iterable[OrderEvent]) -> list[tuple[str, str]]:
    """Distinct (pair, day) keys in first-appearance order."""
    seen = {}
    for e in events:
        seen.setdefault((e.pair, e.day), None)
    return list(seen)


def _consecutive_trading_days(d1: str, d2: str) -> bool:
    a, b = np.datetime64(d1, "D"), np.datetime64(d2, "D")
    # no business day strictly between the two (Friday -> Monday is consecutive)
    return bool(b > a and np.busday_count(a + 1, b) == 0)


def build_cross_day(s_i: SignSeries, s_next: SignSeries) -> SignSeries:
    """Second half of day i followed by first half of day i+1.

    For odd lengths the middle element is dropped: halves have floor(N/2)
    entries. The returned series has ``boundary_index`` r* = floor(N_i/2).
    """
    a, b = s_i.label, s_next.label
    if a is None or b is None:
        raise LabelMismatch("cross-day construction needs labelled intra-day series")
    if a.span != "intraday" or b.span != "intraday":
        raise LabelMismatch("both inputs must be intra-day series")
    if a.pair != b.pair or a.flow != b.flow:
        raise LabelMismatch(f"cannot join {a.pair}/{a.flow.value} with {b.pair}/{b.flow.value}")
    if not _consecutive_trading_days(a.days[0], b.days[0]):
        raise LabelMismatch(f"{a.days[0]} and {b.days[0]} are not consecutive trading days")
    h1 = len(s_i) // 2
    h2 = len(s_next) // 2
    if h1 < 1 or h2 < 1:
        raise TooShort("each day must contribute at least one element")
    signs = np.concatenate([s_i.signs[len(s_i) - h1:], s_next.signs[:h2]])
    return SignSeries(signs, SeriesLabel(a.pair, a.flow, (a.days[0], b.days[0])), boundary_index=h1)


def pct_sell(series: SignSeries) -> float:
    n_sell = int(np.count_nonzero(series.signs == 1))
    return 100.0 * n_sell / len(series)


def summary_stats(arrivals: SignSeries, departures: SignSeries) -> SummaryStats:
    return SummaryStats(
        n_arrivals=len(arrivals),
        n_departures=len(departures),
        pct_sell_arrivals=pct_sell(arrivals),
        pct_sell_departures=pct_sell(departures),
    )


def write_series(path, series: SignSeries | Sequence[float] | np.ndarray) -> None:
    """Write ``index,sign`` (for sign series) or ``index,value`` CSV."""
    if isinstance(series, SignSeries):
        col, data = "sign", series.signs
    else:
        col, data = "value", np.asarray(series, dtype=np.float64)
    idx = np.arange(1, data.size + 1)
    with open(path, "w", newline="") as fh:
        fh.write(f"index,{col}\n")
        if col == "sign":
            np.savetxt(fh, np.column_stack([idx, data.astype(np.int64)]), fmt="%d", delimiter=",")
        else:
            for i, v in enumerate(data.tolist(), 1):
                fh.write(f"{i},{v!r}\n")


def read_series(path, label: SeriesLabel | None = None, boundary_index: int | None = None):
    """Read a series CSV written by :func:`write_series`.

    Returns a ``SignSeries`` for ``index,sign`` files and a float array for
    ``index,value`` files.
    """
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if len(header) != 2 or header[1] not in ("sign", "value"):
        raise MalformedRow(1, f"expected header index,sign or index,value in {path}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, usecols=1, ndmin=1)
    if header[1] == "sign":
        return SignSeries(data.astype(np.int8), label, boundary_index)
    return data
