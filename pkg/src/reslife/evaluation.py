"""Static-split and grouped cross-validation protocols plus error metrics.

Normalizers are always fitted on the training rows of the split or fold at
hand, and every fold trains a fresh model from a seed derived from the base
seed and the held-out group's id, so results do not depend on the order in
which groups are supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .dataset import Normalizer, fit_normalizer, format_number
from .features import FeatureRow, as_arrays
from .grnn import GrnnModel, grnn_build
from .mlp import (
    ConditioningError,
    GdConfig,
    LmConfig,
    MlpLayout,
    MlpModel,
    TrainHistory,
    check_conditioning,
    mlp_init,
    train_gd_momentum,
    train_lm,
    train_lmbr,
)
from .rng import derive_seed
from .weibull import WeibullModel, fit_weibull_mle

KINDS = ("gd", "lm", "lmbr", "grnn", "weibull-baseline")
MLP_KINDS = ("gd", "lm", "lmbr")


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """Estimator kind plus the settings it needs.

    ``n_hidden=None`` sizes the hidden layer like the input layer, shrunk
    if needed so the parameter count never exceeds the training rows.
    ``age_column`` names the input holding the age used by the Weibull
    baseline (elapsed time for renewal rows, time since failure for pumps).
    """

    kind: str
    n_inputs: int
    seed: int = 0
    n_hidden: Optional[int] = None
    output_transfer: str = "log_sigmoid"
    learning_rate: float = 0.75
    momentum: float = 0.9
    max_epochs: int = 100
    mse_target: float = 1e-5
    lambda_init: float = 1e-3
    lambda_factor: float = 10.0
    spread: float = 0.1
    age_column: int = 0
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.n_inputs < 1:
            raise ValueError("n_inputs must be >= 1")
        if self.kind == "grnn" and not self.spread > 0:
            raise ValueError("spread must be > 0")
        if self.kind in MLP_KINDS:
            self.gd_config() if self.kind == "gd" else self.lm_config()
            MlpLayout(self.n_inputs, self.n_hidden or 1, output_transfer=self.output_transfer)
        if not 0 <= self.age_column < self.n_inputs:
            raise ValueError("age_column out of range")

    @property
    def name(self) -> str:
        return self.label or self.kind

    def gd_config(self) -> GdConfig:
        return GdConfig(self.learning_rate, self.momentum, self.max_epochs, self.mse_target)

    def lm_config(self) -> LmConfig:
        return LmConfig(self.lambda_init, self.lambda_factor, 1e10, self.max_epochs, self.mse_target,
                        self.kind == "lmbr")

    def layout_for(self, n_train: int) -> MlpLayout:
        if self.n_hidden is not None:
            layout = MlpLayout(self.n_inputs, self.n_hidden, output_transfer=self.output_transfer)
            if not check_conditioning(layout, n_train):
                raise ConditioningError(
                    f"{self.n_inputs}-{self.n_hidden}-1 network has {layout.n_params} parameters "
                    f"but only {n_train} training rows"
                )
            return layout
        for h in range(self.n_inputs, 0, -1):
            layout = MlpLayout(self.n_inputs, h, output_transfer=self.output_transfer)
            if check_conditioning(layout, n_train):
                return layout
        raise ConditioningError(f"no {self.n_inputs}-input network fits {n_train} training rows")


SPEC_FIELDS = {f.name: f.type for f in fields(ModelSpec)}


def spec_from_mapping(values: Mapping[str, str], **overrides) -> ModelSpec:
    """Build a spec from key=value strings (unknown keys rejected)."""
    kwargs = {}
    for key, raw in {**values, **overrides}.items():
        if key not in SPEC_FIELDS:
            raise ValueError(f"unknown model setting {key!r}")
        kwargs[key] = _coerce(key, raw)
    return ModelSpec(**kwargs)


def _coerce(key, raw):
    if not isinstance(raw, str):
        return raw
    if key in ("kind", "output_transfer", "label"):
        return raw
    if key in ("n_inputs", "seed", "max_epochs", "age_column"):
        return int(raw)
    if key == "n_hidden":
        return None if raw.lower() in ("", "auto", "none") else int(raw)
    return float(raw)


# ---------------------------------------------------------------------------
# trained estimators

@dataclass(frozen=True, eq=False)
class TrainedEstimator:
    kind: str
    model: object
    input_norm: Optional[Normalizer]
    target_norm: Normalizer
    age_column: int = 0
    history: Optional[TrainHistory] = None

    @property
    def n_inputs(self) -> int:
        if isinstance(self.model, MlpModel):
            return self.model.layout.n_inputs
        if isinstance(self.model, GrnnModel):
            return self.model.n_inputs
        return self.input_norm.arity if self.input_norm is not None else self.age_column + 1

    def predict_raw(self, X) -> np.ndarray:
        """Physical-unit residual life for raw (unnormalized) input rows."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if isinstance(self.model, WeibullModel):
            return np.maximum(self.model.eta - X[:, self.age_column], 0.0)
        y = self.model.predict(self.input_norm.normalize(X))
        return self.target_norm.denormalize(y[:, None])[:, 0]

    def predict(self, rows: Sequence[FeatureRow]) -> np.ndarray:
        return self.predict_raw(as_arrays(rows)[0])


def _canonical(rows: Sequence[FeatureRow]) -> list[FeatureRow]:
    return sorted(rows, key=lambda r: (r.group_id, r.time))


def training_lives(rows: Sequence[FeatureRow], age_column: int) -> list[float]:
    """One life per distinct (group, life) pair: age at the row plus its residual target."""
    seen = {}
    for r in rows:
        life = r.inputs[age_column] + r.target
        seen.setdefault((r.group_id, round(life, 6)), life)
    return list(seen.values())


def fit_estimator(rows: Sequence[FeatureRow], spec: ModelSpec, seed: Optional[int] = None) -> TrainedEstimator:
    rows = _canonical(rows)
    X, y = as_arrays(rows)
    if X.shape[1] != spec.n_inputs:
        raise ProtocolError(f"rows carry {X.shape[1]} inputs but the spec expects {spec.n_inputs}")
    seed = spec.seed if seed is None else seed
    target_norm = fit_normalizer(y[:, None], names=("target",))
    if spec.kind == "weibull-baseline":
        model = fit_weibull_mle(training_lives(rows, spec.age_column))
        return TrainedEstimator(spec.kind, model, None, target_norm, spec.age_column)

    input_norm = fit_normalizer(X)
    Xn = input_norm.normalize(X)
    yn = target_norm.normalize(y[:, None])[:, 0]
    if spec.kind == "grnn":
        return TrainedEstimator(spec.kind, grnn_build(Xn, yn, spec.spread), input_norm, target_norm, spec.age_column)

    layout = spec.layout_for(len(rows))
    init = mlp_init(layout, seed)
    if spec.kind == "gd":
        model, hist = train_gd_momentum(init, Xn, yn, spec.gd_config())
    elif spec.kind == "lm":
        model, hist = train_lm(init, Xn, yn, spec.lm_config())
    else:
        model, hist = train_lmbr(init, Xn, yn, spec.lm_config())
    return TrainedEstimator(spec.kind, model, input_norm, target_norm, spec.age_column, hist)


# ---------------------------------------------------------------------------
# metrics and reports

@dataclass(frozen=True)
class Metrics:
    mse: float
    avg_abs_error: float
    max_abs_error: float
    sse: float


def metrics(predicted, actual, target_norm: Normalizer) -> Metrics:
    """MSE on the normalized scale; absolute errors and SSE in physical units."""
    p = np.asarray(predicted, dtype=float).ravel()
    a = np.asarray(actual, dtype=float).ravel()
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.size} predictions, {a.size} actuals")
    if p.size == 0:
        raise ValueError("metrics need at least one observation")
    err = p - a
    span = target_norm.maxs[0] - target_norm.mins[0]
    return Metrics(
        mse=float(np.mean((err / span) ** 2)),
        avg_abs_error=float(np.mean(np.abs(err))),
        max_abs_error=float(np.max(np.abs(err))),
        sse=float(np.sum(err * err)),
    )


@dataclass(frozen=True)
class Observation:
    group_id: str
    time: float
    predicted: float
    actual: float

    @property
    def error(self) -> float:
        return self.predicted - self.actual


@dataclass(frozen=True)
class EvalReport:
    observations: tuple[Observation, ...]
    target_min: float
    target_max: float
    metrics: Metrics

    @property
    def mse(self) -> float:
        return self.metrics.mse

    @property
    def sse(self) -> float:
        return self.metrics.sse

    @property
    def avg_abs_error(self) -> float:
        return self.metrics.avg_abs_error

    @property
    def max_abs_error(self) -> float:
        return self.metrics.max_abs_error

    def recompute(self) -> Metrics:
        norm = Normalizer((self.target_min,), (self.target_max,))
        return metrics([o.predicted for o in self.observations], [o.actual for o in self.observations], norm)


def make_report(est: TrainedEstimator, rows: Sequence[FeatureRow]) -> EvalReport:
    rows = _canonical(rows)
    pred = est.predict(rows)
    obs = tuple(Observation(r.group_id, r.time, float(p), r.target) for r, p in zip(rows, pred))
    m = metrics(pred, [r.target for r in rows], est.target_norm)
    return EvalReport(obs, est.target_norm.mins[0], est.target_norm.maxs[0], m)


def first_measurement_errors(report: EvalReport) -> dict[str, float]:
    """Relative error |pred - actual| / actual at each group's earliest observation."""
    out = {}
    for o in report.observations:
        if o.group_id not in out or o.time < out[o.group_id].time:
            out[o.group_id] = o
    return {g: abs(o.error) / o.actual for g, o in sorted(out.items())}


# ---------------------------------------------------------------------------
# protocols

def group_rows(rows: Sequence[FeatureRow]) -> dict[str, list[FeatureRow]]:
    groups: dict[str, list[FeatureRow]] = {}
    for r in rows:
        groups.setdefault(r.group_id, []).append(r)
    return groups


def split_rows(rows: Sequence[FeatureRow], test_ids) -> tuple[list[FeatureRow], list[FeatureRow]]:
    test_ids = set(test_ids)
    known = {r.group_id for r in rows}
    missing = test_ids - known
    if missing:
        raise ProtocolError(f"test groups not present in data: {sorted(missing)}")
    train = [r for r in rows if r.group_id not in test_ids]
    test = [r for r in rows if r.group_id in test_ids]
    return train, test


def static_split_eval(train_rows: Sequence[FeatureRow], test_rows: Sequence[FeatureRow], spec: ModelSpec):
    """Train on one fixed set of runs, report on both it and a disjoint test set."""
    overlap = {r.group_id for r in train_rows} & {r.group_id for r in test_rows}
    if overlap:
        raise ProtocolError(f"train and test share runs: {sorted(overlap)}")
    if not test_rows:
        raise ProtocolError("empty test set")
    est = fit_estimator(train_rows, spec)
    return est, make_report(est, train_rows), make_report(est, test_rows)


@dataclass(frozen=True)
class Fold:
    group_id: str
    seed: int
    n_train: int
    estimator: TrainedEstimator
    report: EvalReport


@dataclass(frozen=True)
class CvReport:
    folds: tuple[Fold, ...]
    total_sse: float

    @property
    def observations(self) -> tuple[Observation, ...]:
        return tuple(o for f in self.folds for o in f.report.observations)


def cross_validate(groups, spec: ModelSpec) -> CvReport:
    """Hold out each group once; total SSE is the sum over folds.

    ``groups`` maps group id to its rows (a sequence of ``(id, rows)``
    pairs is accepted too).
    """
    items = list(groups.items()) if isinstance(groups, Mapping) else list(groups)
    ids = [g for g, _ in items]
    if len(ids) < 2:
        raise ProtocolError(f"cross-validation needs at least 2 groups, got {len(ids)}")
    if len(set(ids)) != len(ids):
        raise ProtocolError("duplicate group ids")
    for gid, rows in items:
        if any(r.group_id != gid for r in rows):
            raise ProtocolError(f"group {gid!r} contains rows of another group")
        if not rows:
            raise ProtocolError(f"group {gid!r} is empty")
    by_id = dict(items)
    order = sorted(ids)

    if spec.kind in MLP_KINDS and spec.n_hidden is None:
        smallest = min(sum(len(by_id[g]) for g in order if g != held) for held in order)
        spec = replace(spec, n_hidden=spec.layout_for(smallest).n_hidden)

    folds = []
    for held in order:
        train = [r for g in order if g != held for r in by_id[g]]
        seed = derive_seed(spec.seed, held)
        est = fit_estimator(train, spec, seed=seed)
        folds.append(Fold(held, seed, len(train), est, make_report(est, by_id[held])))
    total = math.fsum(f.report.sse for f in folds)
    return CvReport(tuple(folds), total)


# ---------------------------------------------------------------------------
# comparison

@dataclass(frozen=True)
class ComparisonRow:
    name: str
    kind: str
    n_inputs: int
    score: float
    sse: float
    mse: float
    avg_abs_error: float
    max_abs_error: float


@dataclass(frozen=True)
class Comparison:
    protocol: str
    rows: tuple[ComparisonRow, ...]

    @property
    def metric(self) -> str:
        return "test MSE" if self.protocol == "static" else "total SSE"

    def to_text(self) -> str:
        head = f"{'rank':>4}  {'model':<24} {'kind':<16} {'inputs':>6}  {self.metric:>14}  {'SSE':>14}  {'avg |err|':>12}  {'max |err|':>12}"
        lines = [f"protocol: {self.protocol}", head, "-" * len(head)]
        for i, r in enumerate(self.rows, 1):
            lines.append(
                f"{i:>4}  {r.name:<24} {r.kind:<16} {r.n_inputs:>6}  {r.score:>14.6g}  {r.sse:>14.6g}  "
                f"{r.avg_abs_error:>12.6g}  {r.max_abs_error:>12.6g}"
            )
        return "\n".join(lines) + "\n"


def run_protocol(spec: ModelSpec, protocol: str, rows: Sequence[FeatureRow], test_ids=()):
    if protocol == "static":
        train, test = split_rows(rows, test_ids)
        return static_split_eval(train, test, spec)
    if protocol == "cv":
        return cross_validate(group_rows(rows), spec)
    raise ProtocolError(f"unknown protocol {protocol!r}; expected 'static' or 'cv'")


def compare_models(specs: Sequence[ModelSpec], protocol: str, rows: Sequence[FeatureRow], test_ids=()) -> Comparison:
    """Run every spec under one protocol and rank ascending by score.

    Static splits rank by test MSE, cross-validation by total SSE; ties keep
    the input order.
    """
    if len(specs) < 2:
        raise ProtocolError("compare_models needs at least 2 specs")
    out = []
    for spec in specs:
        result = run_protocol(spec, protocol, rows, test_ids)
        if protocol == "static":
            rep = result[2]
            m = rep.metrics
            out.append(ComparisonRow(spec.name, spec.kind, spec.n_inputs, m.mse, m.sse, m.mse, m.avg_abs_error, m.max_abs_error))
        else:
            obs = result.observations
            err = np.array([o.error for o in obs])
            # each fold's MSE uses its own target normalizer; pool by observation count
            mse = math.fsum(f.report.mse * len(f.report.observations) for f in result.folds) / len(obs)
            out.append(ComparisonRow(spec.name, spec.kind, spec.n_inputs, result.total_sse, result.total_sse, mse,
                                     float(np.mean(np.abs(err))), float(np.max(np.abs(err)))))
    ranked = sorted(range(len(out)), key=lambda i: (out[i].score, i))
    return Comparison(protocol, tuple(out[i] for i in ranked))
