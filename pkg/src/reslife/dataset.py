"""Data model, CSV ingestion/serialization and min-max scaling.

Two dataset shapes are supported:

* renewal runs: one fatigue test piece per run, a measurement window every
  180 s and a trailer row carrying the failure time;
* pump histories: sparse, chronologically ordered measurement, failure and
  suspension events per pump, in days since installation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

RENEWAL_COLUMNS = ["run_id", "elapsed_s", "load_mean_kN", "load_range_kN", "temperature_C"]
RENEWAL_OPTIONAL = ["accel_rms", "strain_range"]
PUMP_COLUMNS = ["pump_id", "day", "kind", "band_avg_brg1", "band_avg_brg2"]
EVENT_KINDS = ("measurement", "failure", "suspension")
WINDOW_INTERVAL_S = 180.0


class DataError(ValueError):
    """Raised for malformed or inconsistent dataset content."""


@dataclass(frozen=True)
class MeasurementWindow:
    elapsed_s: float
    load_mean_kN: float
    load_range_kN: float
    temperature_C: float
    accel_rms: Optional[float] = None
    strain_range: Optional[float] = None

    def __post_init__(self):
        if not self.elapsed_s >= 0:
            raise DataError(f"elapsed_s must be >= 0, got {self.elapsed_s}")
        if not self.load_range_kN >= 0:
            raise DataError(f"load_range_kN must be >= 0, got {self.load_range_kN}")


@dataclass(frozen=True)
class RenewalRun:
    run_id: str
    windows: tuple[MeasurementWindow, ...]
    failure_time_s: float

    def __post_init__(self):
        if not self.windows:
            raise DataError(f"run {self.run_id!r} has no measurement windows")
        times = [w.elapsed_s for w in self.windows]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DataError(f"run {self.run_id!r}: windows not strictly increasing in elapsed_s")
        if self.failure_time_s < times[-1]:
            raise DataError(
                f"run {self.run_id!r}: failure_time_s {self.failure_time_s} precedes last window {times[-1]}"
            )


@dataclass(frozen=True)
class PumpEvent:
    pump_id: str
    day: float
    kind: str
    band_avg_brg1: Optional[float] = None
    band_avg_brg2: Optional[float] = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise DataError(f"unknown event kind {self.kind!r}")
        if not self.day >= 0:
            raise DataError(f"day must be >= 0, got {self.day}")
        bands = (self.band_avg_brg1, self.band_avg_brg2)
        if self.kind == "measurement":
            if any(b is None for b in bands):
                raise DataError(f"pump {self.pump_id!r} day {self.day}: measurement missing band averages")
            if any(b < 0 for b in bands):
                raise DataError(f"pump {self.pump_id!r} day {self.day}: negative band average")
        elif any(b is not None for b in bands):
            raise DataError(f"pump {self.pump_id!r} day {self.day}: {self.kind} event carries band averages")


@dataclass(frozen=True)
class PumpHistory:
    pump_id: str
    events: tuple[PumpEvent, ...]

    def __post_init__(self):
        days = [e.day for e in self.events]
        if any(b <= a for a, b in zip(days, days[1:])):
            raise DataError(f"pump {self.pump_id!r}: events not strictly increasing in day")
        if any(e.pump_id != self.pump_id for e in self.events):
            raise DataError(f"pump {self.pump_id!r}: event with foreign pump_id")

    @property
    def measurements(self) -> list[PumpEvent]:
        return [e for e in self.events if e.kind == "measurement"]


# ---------------------------------------------------------------------------
# number formatting

def format_number(x: Optional[float]) -> str:
    """Shortest round-tripping text for ``x``; integral values drop the ``.0``."""
    if x is None:
        return ""
    x = float(x)
    if math.isfinite(x) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _parse_float(text: str, lineno: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"line {lineno}: column {column!r} is not a number: {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"line {lineno}: column {column!r} is not finite: {text!r}")
    return value


def _optional_float(text: str, lineno: int, column: str) -> Optional[float]:
    return None if text.strip() == "" else _parse_float(text, lineno, column)


# ---------------------------------------------------------------------------
# renewal CSV

def parse_renewal_csv(text: str) -> list[RenewalRun]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("line 1: empty file, header required") from None
    if header[:5] != RENEWAL_COLUMNS or any(c not in RENEWAL_OPTIONAL for c in header[5:]):
        raise DataError(f"line 1: bad renewal header {header!r}")
    extra = header[5:]

    order: list[str] = []
    windows: dict[str, list[MeasurementWindow]] = {}
    failures: dict[str, float] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) < 5 or len(row) > len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        run_id = row[0]
        if not run_id:
            raise DataError(f"line {lineno}: empty run_id")
        if run_id in failures:
            raise DataError(f"line {lineno}: row for run {run_id!r} after its FAILURE trailer")
        if run_id not in windows:
            order.append(run_id)
            windows[run_id] = []
        if row[1] == "FAILURE":
            failures[run_id] = _parse_float(row[2], lineno, "failure_time_s")
            continue
        row = row + [""] * (len(header) - len(row))
        values = [_parse_float(v, lineno, c) for v, c in zip(row[1:5], header[1:5])]
        optional = {c: _optional_float(v, lineno, c) for c, v in zip(extra, row[5:])}
        prev = windows[run_id][-1].elapsed_s if windows[run_id] else None
        if prev is not None and values[0] <= prev:
            raise DataError(
                f"line {lineno}: run {run_id!r} elapsed_s {format_number(values[0])} "
                f"not after previous {format_number(prev)}"
            )
        try:
            windows[run_id].append(MeasurementWindow(*values, **optional))
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None

    runs = []
    for run_id in order:
        if run_id not in failures:
            raise DataError(f"run {run_id!r} has no FAILURE trailer row")
        runs.append(RenewalRun(run_id, tuple(windows[run_id]), failures[run_id]))
    return runs


def load_renewal_runs(path) -> list[RenewalRun]:
    """Read a renewal CSV file into runs, in order of first appearance."""
    return parse_renewal_csv(Path(path).read_text(encoding="utf-8"))


def format_renewal_csv(runs: Sequence[RenewalRun]) -> str:
    extra = [c for c in RENEWAL_OPTIONAL if any(getattr(w, c) is not None for r in runs for w in r.windows)]
    header = RENEWAL_COLUMNS + extra
    lines = [",".join(header)]
    for run in runs:
        for w in run.windows:
            fields = [run.run_id] + [format_number(getattr(w, c)) for c in header[1:]]
            lines.append(",".join(fields))
        trailer = [run.run_id, "FAILURE", format_number(run.failure_time_s)] + [""] * (len(header) - 3)
        lines.append(",".join(trailer))
    return "\n".join(lines) + "\n"


def save_renewal_runs(runs: Sequence[RenewalRun], path) -> None:
    Path(path).write_text(format_renewal_csv(runs), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# pump CSV

def parse_pump_csv(text: str) -> list[PumpHistory]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("line 1: empty file, header required") from None
    if header != PUMP_COLUMNS:
        raise DataError(f"line 1: bad pump header {header!r}")

    order: list[str] = []
    events: dict[str, list[PumpEvent]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(PUMP_COLUMNS):
            raise DataError(f"line {lineno}: expected {len(PUMP_COLUMNS)} fields, got {len(row)}")
        pump_id, day_text, kind, b1, b2 = row
        if not pump_id:
            raise DataError(f"line {lineno}: empty pump_id")
        day = _parse_float(day_text, lineno, "day")
        if pump_id not in events:
            order.append(pump_id)
            events[pump_id] = []
        if events[pump_id] and day <= events[pump_id][-1].day:
            raise DataError(f"line {lineno}: pump {pump_id!r} day {day_text} not after previous event")
        try:
            events[pump_id].append(
                PumpEvent(
                    pump_id,
                    day,
                    kind,
                    _optional_float(b1, lineno, "band_avg_brg1"),
                    _optional_float(b2, lineno, "band_avg_brg2"),
                )
            )
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    return [PumpHistory(p, tuple(events[p])) for p in order]


def load_pump_histories(path) -> list[PumpHistory]:
    """Read a pump CSV file into per-pump histories, in order of first appearance."""
    return parse_pump_csv(Path(path).read_text(encoding="utf-8"))


def format_pump_csv(histories: Sequence[PumpHistory]) -> str:
    lines = [",".join(PUMP_COLUMNS)]
    for h in histories:
        for e in h.events:
            lines.append(
                ",".join(
                    [e.pump_id, format_number(e.day), e.kind, format_number(e.band_avg_brg1), format_number(e.band_avg_brg2)]
                )
            )
    return "\n".join(lines) + "\n"


def save_pump_histories(histories: Sequence[PumpHistory], path) -> None:
    Path(path).write_text(format_pump_csv(histories), encoding="utf-8", newline="\n")


def detect_dataset_kind(path) -> str:
    """Return ``"renewal"``, ``"pump"`` or ``"features"`` from a CSV header."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if header[:5] == RENEWAL_COLUMNS:
        return "renewal"
    if header == PUMP_COLUMNS:
        return "pump"
    if header[:2] == ["group_id", "time"] and header[-1] == "target":
        return "features"
    raise DataError(f"{path}: unrecognised CSV header {header!r}")


# ---------------------------------------------------------------------------
# min-max scaling

@dataclass(frozen=True)
class Normalizer:
    """Per-column (min, max) pairs fitted on training data.

    Values outside the fitted range are extrapolated linearly, never clamped.
    """

    mins: tuple[float, ...]
    maxs: tuple[float, ...]
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if len(self.mins) != len(self.maxs):
            raise DataError("mins and maxs differ in length")
        for i, (lo, hi) in enumerate(zip(self.mins, self.maxs)):
            if not hi > lo:
                raise DataError(f"column {self._name(i)}: max must exceed min ({lo}, {hi})")

    def _name(self, i: int) -> str:
        return repr(self.names[i]) if i < len(self.names) else str(i)

    @property
    def arity(self) -> int:
        return len(self.mins)

    def _check(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.arity:
            raise DataError(f"arity mismatch: normalizer has {self.arity} columns, got {values.shape[-1]}")
        return values

    def normalize(self, values) -> np.ndarray:
        values = self._check(values)
        lo, hi = np.asarray(self.mins), np.asarray(self.maxs)
        return (values - lo) / (hi - lo)

    def denormalize(self, values) -> np.ndarray:
        values = self._check(values)
        lo, hi = np.asarray(self.mins), np.asarray(self.maxs)
        return values * (hi - lo) + lo


def fit_normalizer(columns, names: Iterable[str] = ()) -> Normalizer:
    """Fit per-column min/max on a ``(rows, columns)`` training matrix."""
    data = np.asarray(columns, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[0] < 2:
        raise DataError(f"need at least 2 rows to fit a normalizer, got {data.shape[0]}")
    names = tuple(names)
    lo, hi = data.min(axis=0), data.max(axis=0)
    for i in range(data.shape[1]):
        if not hi[i] > lo[i]:
            label = repr(names[i]) if i < len(names) else str(i)
            raise DataError(f"column {label} is constant ({format_number(lo[i])}); cannot normalize")
    return Normalizer(tuple(float(v) for v in lo), tuple(float(v) for v in hi), names)
