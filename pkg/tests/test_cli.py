"""End-to-end CLI smoke tests and exit-code contract."""
import json

import pytest

from ventclass.cli import run


def _synth(tmp_path, mode, patients=2, breaths=100, seed=0, out="data"):
    out_dir = tmp_path / out
    code = run(["synth", "--mode", mode, "--patients", str(patients),
                "--breaths", str(breaths), "--seed", str(seed),
                "--artifact-rate", "0.05", "--prefix", f"s{seed}",
                "--out", str(out_dir)])
    assert code == 0
    return out_dir


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Synthetic 5-mode train/test directories plus a trained model."""
    tmp_path = tmp_path_factory.mktemp("cli")
    for i, mode in enumerate(["vc", "pc", "ps", "cpap", "pav"]):
        _synth(tmp_path, mode, seed=10 + i, out="data")
        _synth(tmp_path, mode, seed=40 + i, out="test")
    model = tmp_path / "model.json"
    code = run(["train", "--data", str(tmp_path / "data"),
                "--annotations", str(tmp_path / "data"),
                "--model", str(model), "--seed", "3", "--threads", "2"])
    assert code == 0
    return tmp_path


class TestPipeline:
    def test_synth_writes_waveforms_annotations_manifest(self, workspace):
        data = workspace / "data"
        assert list(data.glob("*.vwd"))
        assert list(data.glob("*annotations.csv"))
        assert list(data.glob("*.manifest.json"))

    def test_train_writes_model_and_manifest(self, workspace):
        doc = json.loads((workspace / "model.json").read_text())
        assert doc["format_version"] == 1
        assert len(doc["trees"]) == 30
        assert (workspace / "model.manifest.json").exists()

    def test_evaluate_reports_macro_f1(self, workspace, capsys):
        report = workspace / "report.json"
        code = run(["evaluate", "--data", str(workspace / "test"),
                    "--annotations", str(workspace / "test"),
                    "--model", str(workspace / "model.json"),
                    "--out", str(report)])
        assert code == 0
        doc = json.loads(report.read_text())
        assert "macro_f1" in doc["raw"]
        assert "macro_f1" in doc["smoothed"]
        assert doc["smoothed"]["macro_f1"] >= 0.9
        assert (workspace / "report.predictions.csv").exists()
        assert "macro-F1" in capsys.readouterr().out

    def test_predict_writes_csv(self, workspace):
        out = workspace / "pred.csv"
        code = run(["predict", "--data", str(workspace / "test"),
                    "--model", str(workspace / "model.json"),
                    "--out", str(out)])
        assert code == 0
        header = out.read_text().splitlines()[0]
        assert header.startswith("file_id,breath_ordinal,raw_mode")

    def test_cv_runs(self, workspace):
        out = workspace / "cv.json"
        code = run(["cv", "--data", str(workspace / "data"),
                    "--annotations", str(workspace / "data"),
                    "--k", "3", "--threads", "2", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert len(doc["folds"]) == 3
        assert "macro_f1" in doc["mean"]

    def test_ablate_random_curve_csv(self, workspace):
        out = workspace / "curve.csv"
        code = run(["ablate-random", "--data", str(workspace / "data"),
                    "--annotations", str(workspace / "data"),
                    "--test-data", str(workspace / "test"),
                    "--test-annotations", str(workspace / "test"),
                    "--fractions", "0.0,0.5", "--threads", "2",
                    "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "fraction,f1_vc,f1_pc,f1_ps,f1_cpap,f1_pav"
        assert len(lines) == 3

    def test_ablate_first_m(self, workspace):
        out = workspace / "firstm.json"
        code = run(["ablate-first-m", "--data", str(workspace / "data"),
                    "--annotations", str(workspace / "data"),
                    "--test-data", str(workspace / "test"),
                    "--test-annotations", str(workspace / "test"),
                    "--m", "vc=50,pc=50,ps=50,cpap=50,pav=50",
                    "--threads", "2", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["reduction"]["kept_total"] <= 5 * 2 * 50 + 1

    def test_sweep_first_m(self, workspace):
        out = workspace / "sweep.csv"
        code = run(["sweep-first-m", "--data", str(workspace / "data"),
                    "--annotations", str(workspace / "data"),
                    "--test-data", str(workspace / "test"),
                    "--test-annotations", str(workspace / "test"),
                    "--sweep-mode", "ps", "--grid", "20,80",
                    "--threads", "2", "--out", str(out)])
        assert code == 0
        assert out.read_text().splitlines()[0] == "m,f1_ps"

    def test_summarize_kept(self, workspace):
        out = workspace / "summary.json"
        code = run(["summarize", "--kept", "6079,2154,27892,3040,1120",
                    "--original", "140928", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["reduction"]["kept_total"] == 40285


class TestExitCodes:
    def test_unknown_subcommand_usage_error(self, capsys):
        assert run(["frobnicate"]) == 1
        capsys.readouterr()

    def test_missing_model_file_is_model_error(self, tmp_path, capsys):
        data = _synth(tmp_path, "vc", patients=1, breaths=20, seed=1)
        code = run(["predict", "--data", str(data),
                    "--model", str(tmp_path / "absent.json"),
                    "--out", str(tmp_path / "p.csv")])
        assert code == 3
        capsys.readouterr()

    def test_empty_data_dir_is_data_error(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        code = run(["train", "--data", str(empty),
                    "--annotations", str(empty),
                    "--model", str(tmp_path / "m.json")])
        assert code == 2
        capsys.readouterr()

    def test_malformed_waveform_is_data_error(self, tmp_path, capsys):
        data = tmp_path / "bad"
        data.mkdir()
        (data / "p1__f1.vwd").write_text("BS, S:0\nnot a sample\nBE\n")
        (data / "ann.csv").write_text(
            "file_id,breath_ordinal,mode,flags\nf1,0,vc,\n")
        code = run(["train", "--data", str(data),
                    "--annotations", str(data),
                    "--model", str(tmp_path / "m.json")])
        assert code == 2
        capsys.readouterr()

    def test_version_flag(self, capsys):
        assert run(["--version"]) == 0
        capsys.readouterr()
