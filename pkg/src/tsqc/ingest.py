"""Tick file parsing and cleaning.

Raw files are UTF-8 CSV with header ``timestamp_ns,price`` (integer
nanoseconds since the Unix epoch, UTC). Files written by the simulator use
``timestamp,price`` with times already expressed as fractions of the trading
session; those skip the wall-clock session filter.

Cleaning rules: keep ticks inside the session window, drop nonpositive
prices, collapse ticks sharing a timestamp to their median price and map
times onto ``[0, 1]`` (the session).
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .simulate import TickSeries

logger = logging.getLogger(__name__)

__all__ = [
    "TickFormatError",
    "EmptyInputError",
    "RawTickFile",
    "SessionWindow",
    "parse_ticks",
    "parse_offset",
    "split_days",
    "clean",
    "clean_days",
    "write_cleaned",
    "read_cleaned",
]

NS_PER_SECOND = 1_000_000_000
HEADER_NS = ("timestamp_ns", "price")
HEADER_FRACTION = ("timestamp", "price")


class TickFormatError(ValueError):
    pass


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class RawTickFile:
    """Parsed rows, sorted stably by timestamp.

    ``kind`` is ``"ns"`` for epoch nanoseconds or ``"fraction"`` for
    session-relative times.
    """

    timestamps: np.ndarray
    prices: np.ndarray
    kind: str = "ns"
    skipped: int = 0

    def __len__(self):
        return self.prices.size


@dataclass(frozen=True)
class SessionWindow:
    open: dt.time = dt.time(9, 45)
    close: dt.time = dt.time(15, 45)

    def __post_init__(self):
        if not self.open < self.close:
            raise ValueError(f"session open {self.open} must precede close {self.close}")

    @classmethod
    def parse(cls, text: str) -> "SessionWindow":
        """Parse ``"HH:MM-HH:MM"``."""
        m = re.fullmatch(r"\s*(\d{1,2}):(\d{2})\s*-\s*(\d{1,2}):(\d{2})\s*", text)
        if not m:
            raise ValueError(f"session must look like 09:45-15:45, got {text!r}")
        h1, m1, h2, m2 = map(int, m.groups())
        return cls(dt.time(h1, m1), dt.time(h2, m2))

    @property
    def open_ns(self) -> int:
        return _time_ns(self.open)

    @property
    def close_ns(self) -> int:
        return _time_ns(self.close)


def _time_ns(t: dt.time) -> int:
    return ((t.hour * 60 + t.minute) * 60 + t.second) * NS_PER_SECOND + t.microsecond * 1000


def parse_offset(text) -> int:
    """UTC offset in nanoseconds from ``"-05:00"``, ``"+0530"`` or hours like ``"-5"``."""
    if isinstance(text, (int, float)):
        return int(round(float(text) * 3600)) * NS_PER_SECOND
    m = re.fullmatch(r"\s*([+-]?)(\d{1,2})(?::?(\d{2}))?\s*", str(text))
    if not m:
        raise ValueError(f"cannot parse UTC offset {text!r}")
    sign = -1 if m.group(1) == "-" else 1
    minutes = int(m.group(2)) * 60 + int(m.group(3) or 0)
    return sign * minutes * 60 * NS_PER_SECOND


def parse_ticks(path) -> RawTickFile:
    """Read a tick CSV; malformed rows are skipped and counted."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TickFormatError(f"{path}: empty file")
        header = tuple(h.strip().lower() for h in header)
        if header == HEADER_NS:
            kind = "ns"
        elif header == HEADER_FRACTION:
            kind = "fraction"
        else:
            raise TickFormatError(f"{path}: expected header 'timestamp_ns,price', got {','.join(header)}")
        rows = list(reader)

    parse_time = int if kind == "ns" else float
    stamps, prices, skipped = [], [], 0
    for row in rows:
        try:
            if len(row) != 2:
                raise ValueError
            t, p = parse_time(row[0]), float(row[1])
            if not np.isfinite(p) or (kind == "fraction" and not np.isfinite(t)):
                raise ValueError
        except ValueError:
            skipped += 1
            continue
        stamps.append(t)
        prices.append(p)
    if skipped:
        logger.info("%s: skipped %d malformed rows", path, skipped)
    if not prices:
        raise EmptyInputError(f"{path}: no valid rows")

    stamps = np.array(stamps, dtype=np.int64 if kind == "ns" else float)
    prices = np.array(prices, dtype=float)
    order = np.argsort(stamps, kind="stable")
    return RawTickFile(stamps[order], prices[order], kind, skipped)


def split_days(raw: RawTickFile, tz_offset_ns: int = 0) -> dict:
    """Split an epoch-ns file by local calendar date (``YYYY-MM-DD`` keys)."""
    if raw.kind != "ns":
        raise ValueError("only epoch-nanosecond files carry calendar dates")
    local = raw.timestamps + tz_offset_ns
    day = local // (86_400 * NS_PER_SECOND)
    out = {}
    for d in np.unique(day):
        sel = day == d
        label = (dt.date(1970, 1, 1) + dt.timedelta(days=int(d))).isoformat()
        out[label] = RawTickFile(raw.timestamps[sel], raw.prices[sel], "ns", 0)
    return out


def _median_collapse(stamps, prices):
    # stamps sorted; equal-timestamp groups become one tick at the median price
    if stamps.size == 0:
        return stamps, prices
    new = np.concatenate(([True], stamps[1:] != stamps[:-1]))
    if new.all():
        return stamps, prices
    group = np.cumsum(new) - 1
    med = pd.Series(prices).groupby(group).median().to_numpy()
    return stamps[new], med


def clean(raw: RawTickFile, window: SessionWindow = SessionWindow(), tz_offset_ns: int = 0,
          T: float = 1.0) -> TickSeries:
    """Clean one trading day into a :class:`TickSeries` on ``[0, T]``.

    Session times map linearly onto ``[0, T]``: open -> 0, close -> T.
    """
    if raw.kind == "ns":
        local = raw.timestamps + tz_offset_ns
        days = np.unique(local // (86_400 * NS_PER_SECOND))
        if days.size > 1:
            raise ValueError("ticks span several days; use clean_days")
        tod = local % (86_400 * NS_PER_SECOND)
        keep = (tod >= window.open_ns) & (tod <= window.close_ns)
        keep &= raw.prices > 0
        stamps, prices = _median_collapse(tod[keep], raw.prices[keep])
        span = window.close_ns - window.open_ns
        times = (stamps - window.open_ns).astype(float) / span * T
    else:
        keep = (raw.timestamps >= 0) & (raw.timestamps <= T) & (raw.prices > 0)
        times, prices = _median_collapse(raw.timestamps[keep], raw.prices[keep])
    if times.size == 0:
        raise EmptyInputError("no ticks left inside the session window")
    return TickSeries(times, prices)


def clean_days(raw: RawTickFile, window: SessionWindow = SessionWindow(),
               tz_offset_ns: int = 0, label: str = "day") -> dict:
    """Clean every day of ``raw``; days with nothing in the session are dropped."""
    if raw.kind == "fraction":
        return {label: clean(raw, window)}
    out = {}
    for date, day in split_days(raw, tz_offset_ns).items():
        try:
            out[date] = clean(day, window, tz_offset_ns)
        except EmptyInputError:
            logger.info("%s: no ticks inside the session", date)
    if not out:
        raise EmptyInputError("no ticks inside the session window on any day")
    return out


def write_cleaned(days: dict, path) -> None:
    """Write ``{date: TickSeries}`` as CSV ``date,timestamp,price``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "timestamp", "price"])
        for date in sorted(days):
            ticks = days[date]
            for t, p in zip(ticks.times, ticks.prices):
                w.writerow([date, repr(float(t)), repr(float(p))])


def read_cleaned(path) -> dict:
    """Inverse of :func:`write_cleaned`."""
    df = pd.read_csv(path, dtype={"date": str}, float_precision="round_trip")
    missing = {"date", "timestamp", "price"} - set(df.columns)
    if missing:
        raise TickFormatError(f"{path}: missing columns {sorted(missing)}")
    return {
        date: TickSeries(g["timestamp"].to_numpy(float), g["price"].to_numpy(float))
        for date, g in df.groupby("date", sort=True)
    }
