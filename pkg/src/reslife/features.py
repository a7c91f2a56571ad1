"""Covariate construction for network inputs.

Renewal runs give five inputs per window: elapsed time, initial mean load,
initial load range, the drop in load range since the first window and the
rise in temperature since the first window.  Pump histories give three to
five inputs per measurement: age, time since the last failure, the
history-based risk variable and up to two bearing band averages.
"""

from __future__ import annotations

import csv
import io
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataset import DataError, PumpHistory, RenewalRun, format_number

log = logging.getLogger(__name__)

RENEWAL_INPUTS = (
    "elapsed_s",
    "load_mean0_kN",
    "load_range0_kN",
    "delta_load_range_kN",
    "delta_temperature_C",
)
PUMP_INPUTS = ("day", "days_since_failure", "risk", "band_avg_brg1", "band_avg_brg2")
TRUNCATION_DAYS = 7.0


class TruncationWarning(UserWarning):
    """A failure interval lost every measurement to last-week truncation."""


@dataclass(frozen=True)
class FeatureRow:
    group_id: str
    time: float
    inputs: tuple[float, ...]
    target: float

    def __post_init__(self):
        if not self.target >= 0:
            raise DataError(f"{self.group_id} @ {self.time}: negative residual-life target {self.target}")


def as_arrays(rows: Sequence[FeatureRow]) -> tuple[np.ndarray, np.ndarray]:
    if not rows:
        raise DataError("no feature rows")
    X = np.array([r.inputs for r in rows], dtype=float)
    y = np.array([r.target for r in rows], dtype=float)
    return X, y


# ---------------------------------------------------------------------------
# renewal

def renewal_features(run: RenewalRun) -> list[FeatureRow]:
    first = run.windows[0]
    rows = []
    for w in run.windows:
        inputs = (
            w.elapsed_s,
            first.load_mean_kN,
            first.load_range_kN,
            first.load_range_kN - w.load_range_kN,  # positive when the load drops
            w.temperature_C - first.temperature_C,
        )
        rows.append(FeatureRow(run.run_id, w.elapsed_s, inputs, run.failure_time_s - w.elapsed_s))
    return rows


def renewal_feature_rows(runs: Sequence[RenewalRun]) -> list[FeatureRow]:
    return [row for run in runs for row in renewal_features(run)]


# ---------------------------------------------------------------------------
# pumps

def risk_variable(T: float, T1: Optional[float]) -> float:
    """1 before the first failure, then 0.5 * (T1 / T)**2.

    ``T`` is days since installation and ``T1`` days to the first failure.
    Large values mean low risk; pumps that failed early decay faster.
    """
    if not T > 0:
        raise ValueError(f"T must be > 0, got {T}")
    if T1 is None:
        return 1.0
    if T1 > T:
        raise ValueError(f"first failure T1={T1} lies after T={T}")
    return 0.5 * (T1 / T) ** 2


def truncate_last_week(history: PumpHistory, days: float = TRUNCATION_DAYS) -> PumpHistory:
    """Drop measurements taken within ``days`` before a failure.

    Suspensions do not trigger truncation.  Failures and suspensions are
    kept.  An interval that loses all its measurements triggers a
    :class:`TruncationWarning`.
    """
    kept = []
    pending = []
    for e in history.events:
        if e.kind == "measurement":
            pending.append(e)
            continue
        if e.kind == "failure":
            survivors = [m for m in pending if not (e.day - days < m.day < e.day)]
            if pending and not survivors:
                warnings.warn(
                    f"pump {history.pump_id}: interval ending day {format_number(e.day)} "
                    "has no measurements left after truncation",
                    TruncationWarning,
                    stacklevel=2,
                )
            kept.extend(survivors)
        else:
            kept.extend(pending)
        pending = []
        kept.append(e)
    kept.extend(pending)
    return PumpHistory(history.pump_id, tuple(kept))


def pump_features(history: PumpHistory, n_inputs: int) -> list[FeatureRow]:
    """One row per measurement in an interval that ends in failure.

    Measurements in intervals closed by a suspension, or still open at the
    end of the record, carry no failure time and yield no rows.
    """
    if n_inputs not in (3, 4, 5):
        raise ValueError(f"n_inputs must be 3, 4 or 5, got {n_inputs}")
    rows = []
    pending = []
    first_failure = None
    last_failure = None
    censored = 0
    for e in history.events:
        if e.kind == "measurement":
            since = e.day - last_failure if last_failure is not None else e.day
            inputs = [e.day, since, risk_variable(e.day, first_failure), e.band_avg_brg1, e.band_avg_brg2]
            pending.append((e.day, tuple(inputs[:n_inputs])))
        elif e.kind == "failure":
            rows.extend(FeatureRow(history.pump_id, day, x, e.day - day) for day, x in pending)
            pending = []
            last_failure = e.day
            if first_failure is None:
                first_failure = e.day
        else:
            censored += len(pending)
            pending = []
    censored += len(pending)
    if censored:
        log.info("pump %s: %d measurements without a terminating failure skipped", history.pump_id, censored)
    return rows


def censored_measurement_count(history: PumpHistory) -> int:
    """Measurements that :func:`pump_features` skips for lack of a failure time."""
    count = 0
    pending = 0
    for e in history.events:
        if e.kind == "measurement":
            pending += 1
        elif e.kind == "failure":
            pending = 0
        else:
            count += pending
            pending = 0
    return count + pending


def pump_feature_rows(histories: Sequence[PumpHistory], n_inputs: int, truncate: bool = True) -> list[FeatureRow]:
    rows = []
    for h in histories:
        rows.extend(pump_features(truncate_last_week(h) if truncate else h, n_inputs))
    return rows


def pump_input_names(n_inputs: int) -> tuple[str, ...]:
    return PUMP_INPUTS[:n_inputs]


# ---------------------------------------------------------------------------
# feature CSV

def format_feature_csv(rows: Sequence[FeatureRow], names: Sequence[str]) -> str:
    lines = [",".join(["group_id", "time", *names, "target"])]
    for r in rows:
        if len(r.inputs) != len(names):
            raise DataError(f"row {r.group_id}@{r.time} has {len(r.inputs)} inputs, expected {len(names)}")
        lines.append(",".join([r.group_id, format_number(r.time), *map(format_number, r.inputs), format_number(r.target)]))
    return "\n".join(lines) + "\n"


def save_feature_csv(rows: Sequence[FeatureRow], names: Sequence[str], path) -> None:
    Path(path).write_text(format_feature_csv(rows, names), encoding="utf-8", newline="\n")


def parse_feature_csv(text: str) -> tuple[list[FeatureRow], tuple[str, ...]]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("line 1: empty file, header required") from None
    if len(header) < 4 or header[:2] != ["group_id", "time"] or header[-1] != "target":
        raise DataError(f"line 1: bad feature header {header!r}")
    names = tuple(header[2:-1])
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            values = [float(v) for v in row[1:]]
        except ValueError:
            raise DataError(f"line {lineno}: non-numeric field") from None
        rows.append(FeatureRow(row[0], values[0], tuple(values[1:-1]), values[-1]))
    return rows, names


def load_feature_csv(path) -> tuple[list[FeatureRow], tuple[str, ...]]:
    return parse_feature_csv(Path(path).read_text(encoding="utf-8"))
