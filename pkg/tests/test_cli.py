import json

import pytest

from conformal_teleop.cli import main
from conformal_teleop.conformal import check_coverage_bound
from conformal_teleop.envs import catalog


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """gen -> train -> calibrate round trip on the small grasp scenario."""
    root = tmp_path_factory.mktemp("cli")
    train_path = root / "train.jsonl"
    calib_path = root / "calib.jsonl"
    model_path = root / "model.json"
    assert main(["gen", "--scenario", "arm-grasp", "--seed", "7",
                 "-o", str(train_path)]) == 0
    assert main(["gen", "--scenario", "arm-grasp", "--split", "calib",
                 "--profile", "alice-lip", "--seed", "7", "-o", str(calib_path)]) == 0
    assert main(["train", "--data", str(train_path), "--epochs", "30",
                 "-o", str(model_path)]) == 0
    return root


class TestGen:
    def test_gen_output_is_replayable(self, workspace):
        dataset = catalog.load_dataset(workspace / "train.jsonl")
        assert dataset.replay_ok()
        assert len(dataset.trajectories) == 14

    def test_gen_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        main(["gen", "--scenario", "grid-precision", "--seed", "3", "-o", str(a)])
        main(["gen", "--scenario", "grid-precision", "--seed", "3", "-o", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_calib_split_requires_profile(self, tmp_path, capsys):
        code = main(["gen", "--scenario", "arm-grasp", "--split", "calib",
                     "--seed", "1", "-o", str(tmp_path / "x.jsonl")])
        assert code == 1
        assert "profile" in capsys.readouterr().err


class TestTrain:
    def test_empty_dataset_exits_2(self, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        code = main(["train", "--data", str(empty), "-o", str(tmp_path / "m.json")])
        assert code == 2
        assert "empty dataset" in capsys.readouterr().err

    def test_unknown_flag_exits_1(self, workspace):
        assert main(["train", "--data", str(workspace / "train.jsonl"),
                     "--bogus", "-o", "m.json"]) == 1

    def test_ensemble_kind(self, workspace, tmp_path):
        out = tmp_path / "ens"
        assert main(["train", "--data", str(workspace / "train.jsonl"),
                     "--kind", "ensemble", "--epochs", "3", "-o", str(out)]) == 0
        assert (out / "manifest.json").exists()


class TestCalibrate:
    def test_report_and_trace_written(self, workspace, capsys):
        outdir = workspace / "calib_out"
        code = main(["calibrate", "--model", str(workspace / "model.json"),
                     "--data", str(workspace / "calib.jsonl"),
                     "--alpha", "0.1", "--gamma", "0.005", "--beta", "0.15",
                     "-o", str(outdir)])
        assert code == 0
        summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert summary["bound_ok"] is True
        report = json.loads((outdir / "report.json").read_text())
        assert report["coverage"] == summary["coverage"]
        trace = (outdir / "trace.csv").read_text().strip().splitlines()
        assert len(trace) == report["n_steps"] + 1
        errs = [int(line.split(",")[3]) for line in trace[1:]]
        assert check_coverage_bound(errs, 0.1, 0.1, 0.005)

    def test_missing_model_exits_2(self, workspace):
        assert main(["calibrate", "--model", "missing.json",
                     "--data", str(workspace / "calib.jsonl"),
                     "-o", str(workspace / "x")]) == 2


class TestEval:
    def test_table_output(self, tmp_path, capsys):
        code = main(["eval", "--scenario", "arm-grasp", "--profile", "alice-lip",
                     "--methods", "ACQR,QR", "--seed", "2", "--epochs", "15",
                     "--outdir", str(tmp_path / "ev"), "--table"])
        assert code == 0
        out = capsys.readouterr().out
        assert "coverage" in out and "ACQR" in out and "QR" in out
        assert (tmp_path / "ev" / "ACQR" / "report.json").exists()

    def test_unknown_method_exits_1(self, capsys):
        assert main(["eval", "--scenario", "arm-grasp", "--profile", "alice-lip",
                     "--methods", "MAGIC"]) == 1

    def test_unknown_profile_exits_2(self, capsys):
        assert main(["eval", "--scenario", "arm-grasp", "--profile", "nobody",
                     "--methods", "QR", "--epochs", "2"]) == 2


class TestUsage:
    def test_no_command_exits_1(self):
        assert main([]) == 1

    def test_unknown_command_exits_1(self):
        assert main(["frobnicate"]) == 1
