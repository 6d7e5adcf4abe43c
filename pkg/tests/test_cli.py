import json

import numpy as np
import pytest

from nnmpc.cli import main


@pytest.fixture(scope="module")
def fast_config(tmp_path_factory):
    """A config file that keeps every command fast."""
    path = tmp_path_factory.mktemp("cfg") / "config.json"
    path.write_text(
        json.dumps(
            {
                "gen": {"t_end": 120.0},
                "train": {"folds": 4, "epochs": 25},
                "path": {"levels": [0.5, 1.0], "dwell": 6.0},
            }
        )
    )
    return path


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, fast_config):
    out = tmp_path_factory.mktemp("pipeline")
    assert main(["gen", "--config", str(fast_config), "--out", str(out)]) == 0
    assert (
        main(
            [
                "train",
                "--config",
                str(fast_config),
                "--data",
                str(out / "dataset.csv"),
                "--out",
                str(out),
            ]
        )
        == 0
    )
    return out


class TestGen:
    def test_writes_dataset(self, trained_dir):
        text = (trained_dir / "dataset.csv").read_text().splitlines()
        assert text[0] == "t,u0,y0"
        assert len(text) == 120_002


class TestTrain:
    def test_writes_model_and_report(self, trained_dir):
        model_doc = json.loads((trained_dir / "model.json").read_text())
        assert model_doc["input_dim"] == 4
        assert model_doc["output_mode"] == "delta"
        report = json.loads((trained_dir / "train_report.json").read_text())
        assert report["last_fold_test_mse"] < 1e-6

    def test_missing_data_exit_code(self, tmp_path, fast_config):
        code = main(
            [
                "train",
                "--config",
                str(fast_config),
                "--data",
                str(tmp_path / "nope.csv"),
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 2


class TestSimulate:
    def test_mpc_run_outputs(self, trained_dir, fast_config, tmp_path):
        out = tmp_path / "mpc"
        code = main(
            [
                "simulate",
                "--config",
                str(fast_config),
                "--plant",
                "msd",
                "--controller",
                "mpc",
                "--path",
                "step",
                "--model",
                str(trained_dir / "model.json"),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["controller"] == "mpc"
        assert (out / "run.csv").exists()

    def test_missing_model_exit_code_and_message(self, tmp_path, fast_config, capsys):
        missing = tmp_path / "missing_model.json"
        code = main(
            [
                "simulate",
                "--config",
                str(fast_config),
                "--controller",
                "mpc",
                "--model",
                str(missing),
                "--out",
                str(tmp_path / "out"),
            ]
        )
        assert code == 2
        assert str(missing) in capsys.readouterr().err

    def test_incompatible_path_rejected(self, trained_dir, fast_config, tmp_path):
        code = main(
            [
                "simulate",
                "--config",
                str(fast_config),
                "--controller",
                "mpc",
                "--path",
                "infinity",
                "--model",
                str(trained_dir / "model.json"),
                "--out",
                str(tmp_path / "out"),
            ]
        )
        assert code == 2

    def test_pid_needs_no_model(self, fast_config, tmp_path):
        out = tmp_path / "pid"
        code = main(
            [
                "simulate",
                "--config",
                str(fast_config),
                "--controller",
                "pid",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["controller"] == "pid"


class TestCompare:
    def test_emits_both_reports_with_shared_reference(
        self, trained_dir, fast_config, tmp_path
    ):
        out = tmp_path / "cmp"
        code = main(
            [
                "compare",
                "--config",
                str(fast_config),
                "--controllers",
                "pid,mpc",
                "--model",
                str(trained_dir / "model.json"),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        summary = json.loads((out / "compare.json").read_text())
        assert set(summary) == {"pid", "mpc"}

        # Both controllers run against the same schedule, so every logged
        # reference sample must be the schedule value at its own timestamp.
        levels, dwell = [0.5, 1.0], 6.0

        def check_reference(sub):
            rows = (out / sub / "run.csv").read_text().splitlines()[1:]
            assert len(rows) > 10
            for r in rows:
                t, yref = float(r.split(",")[0]), float(r.split(",")[1])
                expected = levels[min(int(t // dwell), len(levels) - 1)]
                assert yref == expected

        check_reference("pid")
        check_reference("mpc")

    def test_unknown_controller_rejected(self, fast_config, tmp_path):
        code = main(
            [
                "compare",
                "--config",
                str(fast_config),
                "--controllers",
                "pid,lqr",
                "--out",
                str(tmp_path / "x"),
            ]
        )
        assert code == 2


class TestDeterminism:
    def test_same_seed_byte_identical_outputs(self, fast_config, tmp_path):
        outs = []
        for name in ("one", "two"):
            out = tmp_path / name
            assert main(["gen", "--config", str(fast_config), "--out", str(out)]) == 0
            assert (
                main(
                    [
                        "train",
                        "--config",
                        str(fast_config),
                        "--data",
                        str(out / "dataset.csv"),
                        "--seed",
                        "7",
                        "--out",
                        str(out),
                    ]
                )
                == 0
            )
            assert (
                main(
                    [
                        "simulate",
                        "--config",
                        str(fast_config),
                        "--controller",
                        "mpc",
                        "--model",
                        str(out / "model.json"),
                        "--seed",
                        "7",
                        "--out",
                        str(out),
                    ]
                )
                == 0
            )
            outs.append(out)
        for name in ("dataset.csv", "model.json", "run.csv", "report.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
