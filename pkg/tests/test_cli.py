import csv
import hashlib
import json

import numpy as np
import pytest

from reslife.cli import dispatch, emit_reports, render_reports
from reslife.dataset import Normalizer
from reslife.evaluation import EvalReport, ModelSpec, Observation, metrics, split_rows, static_split_eval


def run(*argv):
    return dispatch([str(a) for a in argv])


def digests(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


@pytest.fixture()
def pipeline(tmp_path, monkeypatch):
    """Simulate and featurize both datasets inside an isolated directory."""
    monkeypatch.chdir(tmp_path)
    assert run("simulate", "renewal", "--seed", 7, "--out", "sim_r") == 0
    assert run("simulate", "pumps", "--seed", 7, "--out", "sim_p") == 0
    assert run("featurize", "--data", "sim_r/renewal.csv", "--out", "feat_r") == 0
    assert run("featurize", "--data", "sim_p/pumps.csv", "--inputs", 5, "--out", "feat_p") == 0
    return tmp_path


class TestDispatch:
    def test_simulate_twice_identical(self, tmp_path):
        assert run("simulate", "renewal", "--seed", 7, "--out", tmp_path / "a") == 0
        assert run("simulate", "renewal", "--seed", 7, "--out", tmp_path / "b") == 0
        a, b = digests(tmp_path / "a"), digests(tmp_path / "b")
        assert a.pop("renewal.csv") == b.pop("renewal.csv")
        ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
        mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
        ma.pop("command"), mb.pop("command")
        assert ma == mb

    def test_missing_data_exit_1(self, tmp_path, capsys):
        assert run("train", "--model", "lm", "--data", tmp_path / "missing.csv", "--out", tmp_path / "o") == 1
        assert "missing.csv" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()

    @pytest.mark.parametrize("argv", [[], ["bogus"], ["train", "--model", "svm", "--data", "x", "--out", "y"],
                                      ["simulate", "renewal"]])
    def test_usage_errors_exit_2(self, argv):
        assert dispatch(argv) == 2

    def test_bad_config_exit_1(self, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("n_runs = -3\n")
        assert run("simulate", "renewal", "--config", cfg, "--out", tmp_path / "o") == 1
        assert "n_runs" in capsys.readouterr().err

    def test_config_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("n_runs = 3\nseed = 1\n")
        assert run("simulate", "renewal", "--config", cfg, "--seed", 5, "--out", tmp_path / "o") == 0
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["config"]["n_runs"] == 3 and manifest["config"]["seed"] == 5

    def test_conditioning_violation_exit_1(self, pipeline, capsys):
        assert run("evaluate", "--protocol", "cv", "--model", "lm", "--hidden", 9,
                   "--data", "feat_p/features.csv", "--out", "bad") == 1
        assert "parameters" in capsys.readouterr().err


class TestPipeline:
    def test_end_to_end(self, pipeline, capsys):
        assert run("evaluate", "--protocol", "cv", "--model", "lmbr", "--data", "feat_p/features.csv",
                   "--out", "ev") == 0
        capsys.readouterr()
        assert run("compare", "--models", "lm,lmbr,grnn", "--protocol", "cv", "--data", "feat_p/features.csv",
                   "--out", "cmp") == 0
        table = (pipeline / "cmp" / "comparison.txt").read_text()
        assert capsys.readouterr().out == table
        body = table.splitlines()[3:]
        assert sorted(line.split()[2] for line in body) == ["grnn", "lm", "lmbr"]
        assert "total SSE" in table

    def test_train_predict_fit_weibull(self, pipeline):
        assert run("train", "--model", "lm", "--epochs", 5, "--data", "feat_r/features.csv", "--out", "tr") == 0
        assert run("predict", "--model-file", "tr/model.txt", "--data", "feat_r/features.csv", "--out", "pr") == 0
        with open(pipeline / "pr" / "predictions.csv") as fh:
            preds = [float(r["predicted"]) for r in csv.DictReader(fh)]
        with open(pipeline / "tr" / "train_observations.csv") as fh:
            fitted = [float(r["predicted"]) for r in csv.DictReader(fh)]
        assert sorted(preds) == sorted(fitted)
        fails = pipeline / "fails.txt"
        fails.write_text("\n".join(str(x) for x in (900, 1500, 2100, 4000, 5200)) + "\n")
        assert run("fit-weibull", "--failures", fails, "--out", "wb") == 0
        assert (pipeline / "wb" / "weibull.txt").read_text().startswith("beta=")

    def test_every_stage_reproducible_from_manifest(self, pipeline):
        stages = [
            ["simulate", "pumps", "--seed", 7, "--out", "{}"],
            ["featurize", "--data", "sim_p/pumps.csv", "--inputs", 4, "--out", "{}"],
            ["evaluate", "--protocol", "static", "--model", "lmbr", "--epochs", 10,
             "--data", "feat_r/features.csv", "--out", "{}"],
            ["compare", "--models", "grnn,weibull-baseline", "--protocol", "static",
             "--data", "feat_r/features.csv", "--out", "{}"],
        ]
        for i, stage in enumerate(stages):
            first = [a if a != "{}" else f"s{i}a" for a in stage]
            assert run(*first) == 0
            manifest = json.loads((pipeline / f"s{i}a" / "manifest.json").read_text())
            for path, digest in manifest["inputs"].items():
                assert hashlib.sha256((pipeline / path).read_bytes()).hexdigest() == digest
            replay = [a if a != f"s{i}a" else f"s{i}b" for a in manifest["command"]]
            assert run(*replay) == 0
            a, b = digests(pipeline / f"s{i}a"), digests(pipeline / f"s{i}b")
            a.pop("manifest.json"), b.pop("manifest.json")
            assert a == b
            assert {k: v for k, v in a.items()} == manifest["outputs"]


class TestReports:
    def report(self, renewal_rows, renewal_runs):
        train, test = split_rows(renewal_rows, [r.run_id for r in renewal_runs[-3:]])
        return static_split_eval(train, test, ModelSpec("grnn", 5, spread=0.05))[2]

    def test_empty_report_rejected(self, tmp_path):
        m = metrics([1.0], [1.0], Normalizer((0.0,), (1.0,)))
        with pytest.raises(ValueError):
            emit_reports(EvalReport((), 0.0, 1.0, m), tmp_path)

    def test_thirty_rows(self, tmp_path):
        obs = tuple(Observation("A", 180.0 * i, float(i), float(i + 1)) for i in range(30))
        rep = EvalReport(obs, 0.0, 31.0, metrics([o.predicted for o in obs], [o.actual for o in obs],
                                                 Normalizer((0.0,), (31.0,))))
        emit_reports(rep, tmp_path, "x")
        lines = (tmp_path / "x_observations.csv").read_text().splitlines()
        assert len(lines) == 31

    def test_summary_matches_recomputation_from_csv(self, tmp_path, renewal_rows, renewal_runs):
        rep = self.report(renewal_rows, renewal_runs)
        emit_reports(rep, tmp_path, "test")
        with open(tmp_path / "test_observations.csv") as fh:
            rows = list(csv.DictReader(fh))
        pred = np.array([float(r["predicted"]) for r in rows])
        act = np.array([float(r["actual"]) for r in rows])
        summary = dict(line.split(None, 1) for line in (tmp_path / "test_summary.txt").read_text().splitlines()[:8]
                       if line.strip())
        norm = Normalizer((float(summary["target_min"]),), (float(summary["target_max"]),))
        again = metrics(pred, act, norm)
        assert float(summary["sse"]) == pytest.approx(again.sse, rel=1e-12)
        assert float(summary["mse_normalized"]) == pytest.approx(again.mse, rel=1e-12)
        assert float(summary["max_abs_error"]) == pytest.approx(again.max_abs_error, rel=1e-12)
        assert float(summary["avg_abs_error"]) == pytest.approx(again.avg_abs_error, rel=1e-12)

    def test_plot_csv_columns(self, renewal_rows, renewal_runs):
        files = render_reports(self.report(renewal_rows, renewal_runs), "p")
        assert files["p_plot.csv"].splitlines()[0] == "group_id,elapsed,predicted_residual,actual_residual"
