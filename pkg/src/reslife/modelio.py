"""Versioned plain-text persistence for trained estimators.

Every number is written with 17 significant digits, which round-trips 64-bit
floats exactly, so a reloaded estimator predicts bit-identically.  A file
looks like::

    reslife-model 1
    kind lmbr
    age_column 0
    input_normalizer 2
    0 10 elapsed_s
    ...
    target_normalizer 1
    0 9000 target
    model mlp
    layout 2 2 log_sigmoid log_sigmoid
    hidden_weights 2 3
    <row-major rows>
    output_weights 3
    <values>
    end
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .dataset import DataError, Normalizer
from .evaluation import KINDS, TrainedEstimator
from .grnn import GrnnModel
from .mlp import MlpLayout, MlpModel
from .weibull import WeibullModel

MAGIC = "reslife-model"
VERSION = 1


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _row(values) -> str:
    return " ".join(_num(v) for v in values)


def _dump_norm(label: str, n: Optional[Normalizer]) -> list[str]:
    if n is None:
        return [f"{label} none"]
    lines = [f"{label} {n.arity}"]
    for i in range(n.arity):
        name = n.names[i] if i < len(n.names) and n.names[i] else "-"
        lines.append(f"{_num(n.mins[i])} {_num(n.maxs[i])} {name}")
    return lines


def dumps_estimator(est: TrainedEstimator) -> str:
    lines = [f"{MAGIC} {VERSION}", f"kind {est.kind}", f"age_column {est.age_column}"]
    lines += _dump_norm("input_normalizer", est.input_norm)
    lines += _dump_norm("target_normalizer", est.target_norm)
    m = est.model
    if isinstance(m, MlpModel):
        L = m.layout
        lines += ["model mlp", f"layout {L.n_inputs} {L.n_hidden} {L.hidden_transfer} {L.output_transfer}",
                  f"hidden_weights {L.n_hidden} {L.n_inputs + 1}"]
        lines += [_row(r) for r in m.hidden_weights]
        lines += [f"output_weights {L.n_hidden + 1}", _row(m.output_weights)]
    elif isinstance(m, GrnnModel):
        n, d = m.centers.shape
        lines += ["model grnn", f"spread {_num(m.spread)}", f"centers {n} {d}"]
        lines += [_row(r) for r in m.centers]
        lines += [f"targets {n}", _row(m.targets)]
    elif isinstance(m, WeibullModel):
        lines += ["model weibull", f"beta {_num(m.beta)}", f"eta {_num(m.eta)}"]
    else:
        raise TypeError(f"cannot serialize model of type {type(m).__name__}")
    lines.append("end")
    return "\n".join(lines) + "\n"


class _Reader:
    def __init__(self, text: str):
        self.lines: Iterator[tuple[int, str]] = iter(enumerate(text.splitlines(), start=1))
        self.lineno = 0

    def fail(self, msg: str):
        raise DataError(f"model file line {self.lineno}: {msg}")

    def next(self) -> list[str]:
        for self.lineno, line in self.lines:
            if line.strip():
                return line.split()
        self.lineno += 1
        self.fail("unexpected end of file")

    def keyed(self, key: str, n_values: int) -> list[str]:
        parts = self.next()
        if parts[0] != key or len(parts) != n_values + 1:
            self.fail(f"expected '{key}' with {n_values} value(s)")
        return parts[1:]

    def floats(self, n: int) -> list[float]:
        parts = self.next()
        if len(parts) != n:
            self.fail(f"expected {n} numbers, got {len(parts)}")
        try:
            return [float(p) for p in parts]
        except ValueError:
            self.fail("non-numeric value")

    def integer(self, s: str) -> int:
        try:
            return int(s)
        except ValueError:
            self.fail(f"expected an integer, got {s!r}")

    def norm(self, key: str) -> Optional[Normalizer]:
        (count,) = self.keyed(key, 1)
        if count == "none":
            return None
        mins, maxs, names = [], [], []
        for _ in range(self.integer(count)):
            parts = self.next()
            if len(parts) != 3:
                self.fail("expected 'min max name'")
            try:
                mins.append(float(parts[0]))
                maxs.append(float(parts[1]))
            except ValueError:
                self.fail("non-numeric normalizer bound")
            names.append("" if parts[2] == "-" else parts[2])
        return Normalizer(tuple(mins), tuple(maxs), tuple(names) if any(names) else ())


def loads_estimator(text: str) -> TrainedEstimator:
    r = _Reader(text)
    head = r.next()
    if head[0] != MAGIC:
        r.fail("not a model file")
    if len(head) != 2 or head[1] != str(VERSION):
        r.fail(f"unsupported model file version {' '.join(head[1:])!r}")
    (kind,) = r.keyed("kind", 1)
    if kind not in KINDS:
        r.fail(f"unknown estimator kind {kind!r}")
    age = r.integer(r.keyed("age_column", 1)[0])
    input_norm = r.norm("input_normalizer")
    target_norm = r.norm("target_normalizer")
    (mtype,) = r.keyed("model", 1)
    try:
        if mtype == "mlp":
            ni, nh, ht, ot = r.keyed("layout", 4)
            layout = MlpLayout(r.integer(ni), r.integer(nh), ht, ot)
            r.keyed("hidden_weights", 2)
            hw = np.array([r.floats(layout.n_inputs + 1) for _ in range(layout.n_hidden)])
            r.keyed("output_weights", 1)
            model = MlpModel(layout, hw, r.floats(layout.n_hidden + 1))
        elif mtype == "grnn":
            spread = float(r.keyed("spread", 1)[0])
            n, d = (r.integer(v) for v in r.keyed("centers", 2))
            centers = np.array([r.floats(d) for _ in range(n)])
            r.keyed("targets", 1)
            model = GrnnModel(centers, r.floats(n), spread)
        elif mtype == "weibull":
            beta = float(r.keyed("beta", 1)[0])
            eta = float(r.keyed("eta", 1)[0])
            model = WeibullModel(beta, eta)
        else:
            r.fail(f"unknown model type {mtype!r}")
    except ValueError as exc:
        if isinstance(exc, DataError):
            raise
        r.fail(str(exc))
    if r.next() != ["end"]:
        r.fail("expected 'end'")
    if target_norm is None:
        r.fail("target normalizer is required")
    return TrainedEstimator(kind, model, input_norm, target_norm, age)


def save_estimator(est: TrainedEstimator, path) -> None:
    Path(path).write_text(dumps_estimator(est), encoding="utf-8", newline="\n")


def load_estimator(path) -> TrainedEstimator:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc.strerror or exc}") from None
    return loads_estimator(text)
