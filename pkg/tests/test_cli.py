import os

import numpy as np
import pytest

from app.cli.commands import main, parse_seeds
from app.cli.schemas import RunConfig, load_run_config
from app.core.errors import ConfigurationError
from app.services import report_service
from app.services.sweep_service import SWEEP_COLUMNS, run_sweep

FAST = ["--nodes", "64", "--order", "4"]


@pytest.fixture
def benchmark_config(config_dir):
    return os.path.join(config_dir, "benchmark.toml")


class TestConfig:
    def test_parse_seeds(self):
        assert parse_seeds("0,3,7") == [0, 3, 7]
        assert parse_seeds("2:5") == [2, 3, 4]

    def test_overrides_and_hash(self, benchmark_config, tmp_path):
        config = load_run_config(benchmark_config, {"order": 6, "output_dir": str(tmp_path)})
        assert config.order == 6
        assert config.center == -0.5
        assert config.cavity_map().negative[1] == -0.06j

        elsewhere = load_run_config(benchmark_config, {"order": 6, "output_dir": "other"})
        assert config.config_hash() == elsewhere.config_hash()
        assert config.config_hash() != load_run_config(benchmark_config).config_hash()

    def test_empty_cavity(self, config_dir):
        config = load_run_config(os.path.join(config_dir, "empty_cavity.toml"))
        assert config.cavity is None
        assert config.cavity_curve() is None

    def test_center_literal_forms(self):
        base = {"outer": {"kind": "ellipse", "semi_major": 1.0, "semi_minor": 0.5}}
        assert RunConfig.model_validate({**base, "center": "-0.5,0.25"}).center == -0.5 + 0.25j
        assert RunConfig.model_validate({**base, "center": [1, 2]}).center == 1 + 2j

    def test_missing_file(self):
        with pytest.raises(ConfigurationError):
            load_run_config("does/not/exist.toml")


class TestCommands:
    def test_forward(self, benchmark_config, tmp_path):
        assert main(["forward", "--config", benchmark_config, *FAST, "--out", str(tmp_path)]) == 0
        frame = report_service.read_csv(tmp_path / "measurement.csv")
        assert len(frame) == 8 * 8
        assert list(frame.columns) == ["i", "j", "r_re", "r_im", "q_re", "q_im"]
        first = (tmp_path / "measurement.csv").read_text().splitlines()[0]
        assert first.startswith("# config_hash=")
        assert "scale=" in first

    def test_reconstruct(self, benchmark_config, tmp_path):
        assert main(["reconstruct", "--config", benchmark_config, *FAST, "--out", str(tmp_path)]) == 0
        for name in ("coefficients.csv", "curve.csv", "reconstruction.svg", "measurement.csv"):
            assert (tmp_path / name).exists()
        coefficients = report_service.read_csv(tmp_path / "coefficients.csv")
        assert list(coefficients["k"]) == [1, 0, -1, -2, -3, -4]
        assert coefficients["re"].iloc[0] == pytest.approx(0.5, rel=0.05)

    def test_reconstruct_from_measurement(self, benchmark_config, tmp_path):
        measured = tmp_path / "measured"
        assert main(["forward", "--config", benchmark_config, *FAST, "--out", str(measured)]) == 0
        out = tmp_path / "out"
        args = ["reconstruct", "--config", benchmark_config, *FAST, "--out", str(out), "--measurement", str(measured)]
        assert main(args) == 0
        assert not (out / "measurement.csv").exists()
        assert (out / "coefficients.csv").exists()

    def test_noisy_reconstruct(self, benchmark_config, tmp_path):
        args = ["reconstruct", "--config", benchmark_config, *FAST, "--noise", "0.05", "--seeds", "0:4"]
        assert main([*args, "--out", str(tmp_path)]) == 0
        by_seed = report_service.read_csv(tmp_path / "coefficients_by_seed.csv")
        assert sorted(set(by_seed["seed"])) == [0, 1, 2, 3]

    def test_oracle_check(self, benchmark_config, tmp_path):
        assert main(["oracle-check", "--config", benchmark_config, "--out", str(tmp_path)]) == 0
        table = report_service.read_csv(tmp_path / "oracle_check.csv")
        assert table["corrected_abs_error"].max() <= 1e-8
        assert table["literal_abs_error"].max() > 1e-4

    def test_odd_node_count(self, benchmark_config, tmp_path):
        assert main(["forward", "--config", benchmark_config, "--nodes", "63", "--out", str(tmp_path)]) == 2

    def test_missing_config(self, tmp_path):
        assert main(["forward", "--config", str(tmp_path / "missing.toml")]) == 2

    def test_bad_center(self, benchmark_config, tmp_path):
        assert main(["forward", "--config", benchmark_config, "--center", "a,b", "--out", str(tmp_path)]) == 2

    def test_empty_cavity(self, config_dir, tmp_path):
        config = os.path.join(config_dir, "empty_cavity.toml")
        assert main(["forward", "--config", config, *FAST, "--out", str(tmp_path)]) == 0
        frame = report_service.read_csv(tmp_path / "measurement.csv")
        np.testing.assert_array_equal(frame[["r_re", "r_im"]].to_numpy(), 0.0)

        assert main(["reconstruct", "--config", config, *FAST, "--out", str(tmp_path)]) == 3

    def test_sweep_without_grid(self, benchmark_config, tmp_path):
        assert main(["sweep", "--config", benchmark_config, *FAST, "--out", str(tmp_path)]) == 0
        frame = report_service.read_csv(tmp_path / "sweep.csv")
        assert frame.empty
        assert list(frame.columns) == SWEEP_COLUMNS

    def test_reproducible_outputs(self, benchmark_config, tmp_path):
        for name in ("a", "b"):
            assert main(["reconstruct", "--config", benchmark_config, *FAST, "--out", str(tmp_path / name)]) == 0
        for name in ("measurement.csv", "coefficients.csv", "curve.csv", "reconstruction.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestSweep:
    def test_center_grid(self, config_dir, tmp_path):
        overrides = {
            "nodes": 64,
            "order": 4,
            "output_dir": str(tmp_path),
            "sweep": {"center_range": {"start": -1.0, "stop": -0.5, "count": 3}},
        }
        config = load_run_config(os.path.join(config_dir, "sweep_center.toml"), overrides)
        rows, path = run_sweep(config)

        frame = report_service.read_csv(path)
        assert len(rows) == len(frame) == 3 * 6
        assert set(frame["status"]) == {"ok"}
        assert sorted(set(frame["center_re"])) == pytest.approx([-1.0, -0.75, -0.5])
        for _, point in frame.groupby("center_re"):
            assert list(point["k"]) == [1, 0, -1, -2, -3, -4]
            assert point["relative_error"].iloc[0] < 0.05

    def test_noise_grid(self, config_dir, tmp_path):
        config = os.path.join(config_dir, "sweep_noise.toml")
        assert main(["sweep", "--config", config, *FAST, "--out", str(tmp_path)]) == 0

        frame = report_service.read_csv(tmp_path / "sweep.csv")
        assert set(frame["status"]) == {"ok"}
        assert len(frame) == 4 * 6
        a1 = frame[frame["k"] == 1].sort_values("noise")
        assert list(a1["noise"]) == pytest.approx([0.05, 0.15, 0.25, 0.35])
        assert np.all(np.diff(a1["relative_error"].to_numpy()) >= 0)
        assert a1["retained_order"].iloc[-1] <= a1["retained_order"].iloc[0]

    def test_failed_points_are_rows(self, config_dir, tmp_path):
        overrides = {"nodes": 64, "order": 4, "output_dir": str(tmp_path), "sweep": {"noises": [0.0, 0.1]}}
        config = load_run_config(os.path.join(config_dir, "empty_cavity.toml"), overrides)
        rows, path = run_sweep(config)

        frame = report_service.read_csv(path)
        assert len(rows) == len(frame) == 2
        assert set(frame["status"]) == {"failed"}
        assert frame["k"].isna().all()
        assert frame["message"].iloc[0].startswith("InvalidMeasurementError")


class TestLedger:
    @pytest.fixture
    def ledger(self, monkeypatch, tmp_path):
        from app.db import configure_engine

        monkeypatch.setenv("LEDGER_ENABLED", "true")
        configure_engine(f"sqlite:///{tmp_path / 'ledger.db'}")
        yield

    def test_runs_are_recorded(self, ledger, benchmark_config, tmp_path):
        from app.services import list_runs

        assert main(["reconstruct", "--config", benchmark_config, *FAST, "--out", str(tmp_path / "ok")]) == 0
        assert main(["forward", "--config", benchmark_config, "--nodes", "63"]) == 2

        runs = list_runs()
        assert len(runs) == 1
        assert runs[0].command == "reconstruct"
        assert runs[0].status == "success"
        assert runs[0].order == 4
        assert main(["runs", "--limit", "5"]) == 0

    def test_failures_are_recorded(self, ledger, config_dir, tmp_path):
        from app.services import list_runs

        config = os.path.join(config_dir, "empty_cavity.toml")
        assert main(["reconstruct", "--config", config, *FAST, "--out", str(tmp_path)]) == 3

        run = list_runs()[0]
        assert run.status == "failed"
        assert "InvalidMeasurementError" in run.message

    def test_broken_ledger_does_not_fail_the_command(self, ledger, monkeypatch, benchmark_config, tmp_path):
        from sqlalchemy.exc import SQLAlchemyError

        from app.cli import commands
        from app.services import ledger_service

        def unavailable(*args, **kwargs):
            raise SQLAlchemyError("database is locked")

        monkeypatch.setattr(ledger_service, "save_run", unavailable)
        assert main(["forward", "--config", benchmark_config, *FAST, "--out", str(tmp_path)]) == 0
        assert (tmp_path / "measurement.csv").exists()

        monkeypatch.setattr(commands, "list_runs", unavailable)
        assert main(["runs"]) == 3
