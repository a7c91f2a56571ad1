"""Command-line front end.

Every subcommand computes its outputs in memory, then writes them together
with ``manifest.json`` into ``--out``.  The manifest records the command
line, the effective configuration, the seed, and SHA-256 digests of every
input and output file, which is enough to rerun the command and check that
the outputs are byte-identical.

Exit codes: 0 success, 1 domain error (bad data, failed precondition),
2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import ConfigError, build_dataclass, dataclass_values, load_config
from .dataset import (
    DataError,
    detect_dataset_kind,
    format_number,
    format_pump_csv,
    format_renewal_csv,
    load_pump_histories,
    load_renewal_runs,
)
from .evaluation import (
    KINDS,
    SPEC_FIELDS,
    CvReport,
    EvalReport,
    ModelSpec,
    ProtocolError,
    compare_models,
    cross_validate,
    first_measurement_errors,
    fit_estimator,
    group_rows,
    make_report,
    spec_from_mapping,
    split_rows,
    static_split_eval,
)
from .features import (
    RENEWAL_INPUTS,
    format_feature_csv,
    load_feature_csv,
    pump_feature_rows,
    pump_input_names,
    renewal_feature_rows,
)
from .mlp import TrainingDivergedError
from .modelio import dumps_estimator, load_estimator
from .sim import PumpSimConfig, RenewalSimConfig, simulate_pumps, simulate_renewal
from .weibull import WeibullFitError, decile_table, fit_weibull_mle

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
DOMAIN_ERRORS = (DataError, ConfigError, ProtocolError, WeibullFitError, TrainingDivergedError, ValueError)


class UsageError(Exception):
    pass


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# report rendering

def _g(x: float) -> str:
    return format(float(x), ".17g")


def render_reports(report, prefix: str) -> dict[str, str]:
    """Per-observation CSV, summary table and plot CSV for one report.

    ``report`` is an :class:`EvalReport` or a :class:`CvReport`.
    """
    if isinstance(report, CvReport):
        obs = report.observations
        folds = report.folds
    else:
        obs = report.observations
        folds = ()
    if not obs:
        raise ValueError("reports require at least one observation")

    lines = ["group_id,time,predicted,actual,error"]
    lines += [f"{o.group_id},{format_number(o.time)},{_g(o.predicted)},{_g(o.actual)},{_g(o.error)}" for o in obs]
    observations = "\n".join(lines) + "\n"

    plot = ["group_id,elapsed,predicted_residual,actual_residual"]
    for o in sorted(obs, key=lambda o: (o.group_id, o.time)):
        plot.append(f"{o.group_id},{format_number(o.time)},{_g(o.predicted)},{_g(o.actual)}")
    plot_csv = "\n".join(plot) + "\n"

    summary = [f"{'metric':<22} value"]
    if isinstance(report, EvalReport):
        m = report.metrics
        summary += [
            f"{'observations':<22} {len(obs)}",
            f"{'target_min':<22} {_g(report.target_min)}",
            f"{'target_max':<22} {_g(report.target_max)}",
            f"{'mse_normalized':<22} {_g(m.mse)}",
            f"{'avg_abs_error':<22} {_g(m.avg_abs_error)}",
            f"{'max_abs_error':<22} {_g(m.max_abs_error)}",
            f"{'sse':<22} {_g(m.sse)}",
            "",
            "first-measurement relative error",
            f"{'group':<22} relative_error",
        ]
        summary += [f"{g:<22} {_g(e)}" for g, e in first_measurement_errors(report).items()]
    else:
        summary += [
            f"{'observations':<22} {len(obs)}",
            f"{'folds':<22} {len(folds)}",
            f"{'total_sse':<22} {_g(report.total_sse)}",
            "",
            f"{'fold':<22} {'n_train':>8} {'n_test':>7} {'sse':>24} {'mse_normalized':>24}",
        ]
        summary += [
            f"{f.group_id:<22} {f.n_train:>8} {len(f.report.observations):>7} {_g(f.report.sse):>24} {_g(f.report.mse):>24}"
            for f in folds
        ]
    return {
        f"{prefix}_observations.csv": observations,
        f"{prefix}_summary.txt": "\n".join(summary) + "\n",
        f"{prefix}_plot.csv": plot_csv,
    }


def emit_reports(report, out_dir, prefix: str = "report") -> list[Path]:
    files = render_reports(report, prefix)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text, encoding="utf-8", newline="\n")
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# helpers

def _config_values(args) -> dict[str, str]:
    return load_config(args.config) if args.config else {}


def _feature_data(path):
    kind = detect_dataset_kind(path)
    if kind != "features":
        raise DataError(f"{path}: expected a feature CSV (run 'featurize' on this {kind} dataset first)")
    rows, names = load_feature_csv(path)
    if not rows:
        raise DataError(f"{path}: no feature rows")
    return rows, names


def _age_column(names) -> int:
    for key in ("days_since_failure", "elapsed_s"):
        if key in names:
            return names.index(key)
    return 0


def _model_spec(args, names, kind: Optional[str] = None) -> ModelSpec:
    values = {k: v for k, v in _config_values(args).items() if k not in ("kind", "n_inputs")}
    for key in values:
        if key not in SPEC_FIELDS:
            raise ConfigError(f"unknown model setting {key!r}")
    overrides = {
        "kind": kind or args.model,
        "n_inputs": len(names),
        "age_column": values.pop("age_column", _age_column(names)),
    }
    flag_map = {"seed": "seed", "spread": "spread", "hidden": "n_hidden", "epochs": "max_epochs",
                "output_transfer": "output_transfer"}
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return spec_from_mapping(values, **overrides)


def _spec_dict(spec: ModelSpec) -> dict:
    return dataclass_values(spec)


def _test_groups(args, rows) -> list[str]:
    if args.test_groups:
        return [g.strip() for g in args.test_groups.split(",") if g.strip()]
    ids = sorted(group_rows(rows))
    n_test = max(1, len(ids) // 4)
    return ids[-n_test:]


# ---------------------------------------------------------------------------
# subcommands; each returns (outputs, config snapshot, input paths, stdout text)

def cmd_simulate(args):
    values = _config_values(args)
    if args.dataset == "renewal":
        cfg = build_dataclass(RenewalSimConfig, values, {"seed": args.seed})
        text = format_renewal_csv(simulate_renewal(cfg))
        name = "renewal.csv"
    else:
        cfg = build_dataclass(PumpSimConfig, values, {"seed": args.seed})
        text = format_pump_csv(simulate_pumps(cfg))
        name = "pumps.csv"
    return {name: text}, dataclass_values(cfg), [], f"wrote {name}\n"


def cmd_featurize(args):
    kind = detect_dataset_kind(args.data)
    config = {"truncate": not args.no_truncate}
    if kind == "renewal":
        rows = renewal_feature_rows(load_renewal_runs(args.data))
        names = RENEWAL_INPUTS
    elif kind == "pump":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rows = pump_feature_rows(load_pump_histories(args.data), args.inputs, truncate=not args.no_truncate)
        for w in caught:
            log.warning("%s", w.message)
        names = pump_input_names(args.inputs)
        config["inputs"] = args.inputs
    else:
        raise DataError(f"{args.data}: already a feature CSV")
    if not rows:
        raise DataError(f"{args.data}: no feature rows could be built")
    return {"features.csv": format_feature_csv(rows, names)}, config, [args.data], f"{len(rows)} feature rows\n"


def _read_durations(path) -> list[float]:
    values = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        field = line.split(",")[0].strip()
        if not field:
            continue
        try:
            values.append(float(field))
        except ValueError:
            if lineno == 1:
                continue  # header
            raise DataError(f"{path} line {lineno}: not a number: {field!r}") from None
    return values


def cmd_fit_weibull(args):
    model = fit_weibull_mle(_read_durations(args.failures))
    lines = [f"beta={_g(model.beta)} eta={_g(model.eta)}", "", f"{'F':>4}  {'t':>24}"]
    lines += [f"{p:>4.1f}  {_g(t):>24}" for p, t in decile_table(model)]
    text = "\n".join(lines) + "\n"
    return {"weibull.txt": text}, {}, [args.failures], text


def cmd_train(args):
    rows, names = _feature_data(args.data)
    spec = _model_spec(args, names)
    est = fit_estimator(rows, spec)
    files = {"model.txt": dumps_estimator(est)}
    files.update(render_reports(make_report(est, rows), "train"))
    msg = f"trained {spec.kind} on {len(rows)} rows\n"
    if est.history is not None:
        msg += f"epochs={est.history.epochs} stop={est.history.stop_reason} mse={_g(est.history.mse[-1])}\n"
    return files, _spec_dict(spec), [args.data], msg


def cmd_predict(args):
    est = load_estimator(args.model_file)
    rows, names = _feature_data(args.data)
    if len(names) != est.n_inputs:
        raise DataError(f"{args.data}: {len(names)} inputs but the model expects {est.n_inputs}")
    pred = est.predict(rows)
    lines = ["group_id,time,predicted"]
    lines += [f"{r.group_id},{format_number(r.time)},{_g(p)}" for r, p in zip(rows, pred)]
    files = {"predictions.csv": "\n".join(lines) + "\n"}
    files.update(render_reports(make_report(est, rows), "predict"))
    return files, {}, [args.model_file, args.data], f"{len(rows)} predictions\n"


def cmd_evaluate(args):
    rows, names = _feature_data(args.data)
    spec = _model_spec(args, names)
    config = _spec_dict(spec) | {"protocol": args.protocol}
    if args.protocol == "static":
        test_ids = _test_groups(args, rows)
        config["test_groups"] = ",".join(test_ids)
        train, test = split_rows(rows, test_ids)
        est, rep_train, rep_test = static_split_eval(train, test, spec)
        files = {"model.txt": dumps_estimator(est)}
        files.update(render_reports(rep_train, "train"))
        files.update(render_reports(rep_test, "test"))
        msg = files["test_summary.txt"]
    else:
        cv = cross_validate(group_rows(rows), spec)
        files = render_reports(cv, "cv")
        msg = files["cv_summary.txt"]
    return files, config, [args.data], msg


def cmd_compare(args):
    rows, names = _feature_data(args.data)
    kinds = [k.strip() for k in args.models.split(",") if k.strip()]
    specs = [_model_spec(args, names, kind=k) for k in kinds]
    config = {"protocol": args.protocol, "models": [_spec_dict(s) for s in specs]}
    test_ids = ()
    if args.protocol == "static":
        test_ids = _test_groups(args, rows)
        config["test_groups"] = ",".join(test_ids)
    table = compare_models(specs, args.protocol, rows, test_ids).to_text()
    return {"comparison.txt": table}, config, [args.data], table


# ---------------------------------------------------------------------------
# parser and dispatch

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base seed (overrides the config file)")
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out", required=True, help="output directory")

    model_flags = argparse.ArgumentParser(add_help=False)
    model_flags.add_argument("--data", required=True, help="feature CSV")
    model_flags.add_argument("--spread", type=float, help="GRNN spread")
    model_flags.add_argument("--hidden", type=int, help="hidden nodes (default: sized to the data)")
    model_flags.add_argument("--epochs", type=int, help="maximum training epochs")
    model_flags.add_argument("--output-transfer", choices=("log_sigmoid", "linear"))

    p = argparse.ArgumentParser(prog="reslife", description="Residual-life estimation toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="generate a synthetic dataset")
    s.add_argument("dataset", choices=("renewal", "pumps"))
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("featurize", parents=[common], help="build network inputs from a dataset")
    s.add_argument("--data", required=True, help="renewal or pump CSV")
    s.add_argument("--inputs", type=int, choices=(3, 4, 5), default=5, help="pump input count")
    s.add_argument("--no-truncate", action="store_true", help="keep last-week readings before failures")
    s.set_defaults(func=cmd_featurize)

    s = sub.add_parser("fit-weibull", parents=[common], help="maximum-likelihood Weibull fit")
    s.add_argument("--failures", required=True, help="one failure time per line")
    s.set_defaults(func=cmd_fit_weibull)

    s = sub.add_parser("train", parents=[common, model_flags], help="train one estimator on all rows")
    s.add_argument("--model", required=True, choices=KINDS)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", parents=[common], help="apply a saved model")
    s.add_argument("--model-file", required=True)
    s.add_argument("--data", required=True, help="feature CSV")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("evaluate", parents=[common, model_flags], help="static split or grouped CV")
    s.add_argument("--model", required=True, choices=KINDS)
    s.add_argument("--protocol", choices=("static", "cv"), default="static")
    s.add_argument("--test-groups", help="comma-separated test group ids (static protocol)")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("compare", parents=[common, model_flags], help="rank several estimators")
    s.add_argument("--models", default="lm,lmbr,grnn", help="comma-separated kinds")
    s.add_argument("--protocol", choices=("static", "cv"), default="cv")
    s.add_argument("--test-groups", help="comma-separated test group ids (static protocol)")
    s.set_defaults(func=cmd_compare)
    return p


def _write_outputs(args, argv, files, config, inputs):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8", newline="\n")
    manifest = {
        "tool": "reslife",
        "version": __version__,
        "command": list(argv),
        "seed": args.seed,
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {name: sha256_text(text) for name, text in sorted(files.items())},
    }
    text = json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n"
    (out / MANIFEST).write_text(text, encoding="utf-8", newline="\n")


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        files, config, inputs, message = args.func(args)
        _write_outputs(args, argv, files, config, inputs)
    except OSError as exc:
        name = exc.filename if exc.filename is not None else ""
        print(f"error: {name}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(message)
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
