"""CLI surface: flags, CSV contracts, determinism, error paths, figures."""
import json
import os

import numpy as np
import pytest

from spikekit.cli import main, read_config_file

from conftest import requires_mnist


def run(tmp_path, *argv):
    cwd = os.getcwd()
    os.chdir(tmp_path)
    try:
        return main(list(argv))
    finally:
        os.chdir(cwd)


def body(path):
    with open(path, "rb") as f:
        return f.read()


class TestTrace:
    def test_lif_columns_and_row_count(self, tmp_path):
        assert run(tmp_path, "trace", "--model", "lif", "--steps", "200",
                   "--input", "0.15", "--out", "t.csv") == 0
        lines = body(tmp_path / "t.csv").decode().splitlines()
        assert lines[0] == "t,input,mem,spike"
        assert len(lines) == 201

    def test_izhikevich_columns(self, tmp_path):
        run(tmp_path, "trace", "--model", "izhikevich:rs", "--out", "z.csv")
        header = body(tmp_path / "z.csv").decode().splitlines()[0]
        assert header == "t,input,v,u,spike"

    def test_if_zero_input_stays_flat(self, tmp_path):
        run(tmp_path, "trace", "--model", "if", "--input", "0", "--steps", "50",
            "--out", "f.csv")
        rows = body(tmp_path / "f.csv").decode().splitlines()[1:]
        assert all(row.split(",")[2] == "0.0" for row in rows)

    def test_alpha_model_has_current_columns(self, tmp_path):
        run(tmp_path, "trace", "--model", "alpha", "--out", "a.csv")
        header = body(tmp_path / "a.csv").decode().splitlines()[0]
        assert header == "t,input,mem,exc,inh,spike"

    def test_unknown_model_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(tmp_path, "trace", "--model", "perceptron")
        assert exc.value.code == 2

    def test_renders_figure_next_to_csv(self, tmp_path):
        run(tmp_path, "trace", "--model", "lif", "--out", "t.csv")
        assert (tmp_path / "t.png").exists()

    def test_no_plot_suppresses_figure(self, tmp_path):
        run(tmp_path, "trace", "--model", "lif", "--out", "t.csv", "--no-plot")
        assert not (tmp_path / "t.png").exists()


class TestSurrogateCurves:
    def test_default_grid_and_values_at_zero(self, tmp_path):
        assert run(tmp_path, "surrogate-curves", "--out", "s.csv") == 0
        lines = body(tmp_path / "s.csv").decode().splitlines()
        assert lines[0] == ("x,forward,backward_fast_sigmoid,"
                            "backward_arctan,backward_straight_through")
        assert len(lines) == 402
        mid = lines[201].split(",")  # x = 0 on the default 401-point grid
        assert float(mid[0]) == 0.0
        assert float(mid[1]) == 0.0  # strict-> heaviside convention
        assert float(mid[2]) == 12.5

    def test_backward_columns_are_even_functions(self, tmp_path):
        run(tmp_path, "surrogate-curves", "--out", "s.csv")
        rows = [line.split(",") for line in
                body(tmp_path / "s.csv").decode().splitlines()[1:]]
        grid = np.array([[float(v) for v in row] for row in rows])
        for col in (2, 3, 4):
            assert np.allclose(grid[:, col], grid[::-1, col], atol=1e-15)

    def test_forward_is_binary(self, tmp_path):
        run(tmp_path, "surrogate-curves", "--out", "s.csv")
        rows = body(tmp_path / "s.csv").decode().splitlines()[1:]
        assert set(row.split(",")[1] for row in rows) <= {"0.0", "1.0"}

    def test_points_validated(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(tmp_path, "surrogate-curves", "--points", "1")
        assert exc.value.code == 2


class TestEncodeDemo:
    def test_latency_pixel_one_fires_at_t0(self, tmp_path):
        run(tmp_path, "encode-demo", "--method", "latency", "--out", "e.csv")
        rows = [line.split(",") for line in
                body(tmp_path / "e.csv").decode().splitlines()[1:]]
        at_t0 = [row for row in rows if row[0] == "0"]
        assert ["0", "63", "1"] in at_t0  # the ramp's 1.0 pixel

    def test_rate_zero_steps_empty_body(self, tmp_path):
        run(tmp_path, "encode-demo", "--method", "rate", "--steps", "0",
            "--out", "e.csv")
        assert body(tmp_path / "e.csv").decode() == "t,index,spike\n"

    def test_delta_constant_region_silent(self, tmp_path):
        # single full-period sine: spikes only where the signal moves fast
        run(tmp_path, "encode-demo", "--method", "delta", "--steps", "40",
            "--out", "e.csv")
        rows = body(tmp_path / "e.csv").decode().splitlines()[1:]
        assert rows  # the sine does move
        assert all(row.endswith(",1") for row in rows)

    def test_single_sample_signal_has_no_spike_rows(self, tmp_path):
        run(tmp_path, "encode-demo", "--method", "delta", "--steps", "1",
            "--out", "e.csv")
        assert body(tmp_path / "e.csv").decode() == "t,index,spike\n"

    def test_unknown_method_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(tmp_path, "encode-demo", "--method", "fourier")
        assert exc.value.code == 2

    def test_lf_line_endings_and_dot_decimals(self, tmp_path):
        run(tmp_path, "surrogate-curves", "--out", "s.csv")
        raw = body(tmp_path / "s.csv")
        assert b"\r" not in raw
        assert b"," in raw and b";" not in raw


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ("trace", "--model", "alif", "--steps", "120"),
        ("trace", "--model", "izhikevich:ch", "--steps", "120"),
        ("surrogate-curves",),
        ("encode-demo", "--method", "rate", "--seed", "7"),
        ("encode-demo", "--method", "eeg", "--steps", "100"),
    ])
    def test_identical_invocations_identical_csv(self, tmp_path, argv):
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.mkdir()
        b.mkdir()
        run(a, *argv, "--out", "out.csv", "--no-plot")
        run(b, *argv, "--out", "out.csv", "--no-plot")
        assert body(a / "out.csv") == body(b / "out.csv")

    def test_different_seed_changes_rate_demo(self, tmp_path):
        run(tmp_path, "encode-demo", "--method", "rate", "--seed", "1",
            "--out", "s1.csv", "--no-plot")
        run(tmp_path, "encode-demo", "--method", "rate", "--seed", "2",
            "--out", "s2.csv", "--no-plot")
        assert body(tmp_path / "s1.csv") != body(tmp_path / "s2.csv")


class TestConfigFile:
    def test_parse_and_normalize(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nbeta = 0.8\ndata-dir = /somewhere\n\n")
        assert read_config_file(str(cfg)) == {"beta": "0.8",
                                              "data_dir": "/somewhere"}

    def test_malformed_line_fails_cleanly(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("beta 0.8\n")
        assert run(tmp_path, "train", "--config", str(cfg)) == 1

    def test_unknown_key_fails_cleanly(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("momentum = 0.9\n")
        assert run(tmp_path, "train", "--config", str(cfg)) == 1


class TestTrainErrors:
    def test_missing_data_dir_exits_nonzero(self, tmp_path, capsys):
        code = run(tmp_path, "train", "--data-dir", str(tmp_path / "nope"),
                   "--epochs", "1")
        assert code == 1
        err = capsys.readouterr().err
        assert "error:" in err and "train-images" in err

    def test_bad_flag_value_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(tmp_path, "train", "--epochs", "three")
        assert exc.value.code == 2


@requires_mnist
class TestTrainOnData:
    def test_zero_epochs_header_only_and_untrained_summary(self, tmp_path, data_dir):
        code = run(tmp_path, "train", "--epochs", "0", "--data-dir", data_dir,
                   "--out", "run0", "--no-plot")
        assert code == 0
        assert body(tmp_path / "run0" / "metrics.csv") == b"epoch,train_loss,test_acc\n"
        summary = json.loads(body(tmp_path / "run0" / "summary.json"))
        assert summary["best_acc"] == pytest.approx(0.1, abs=0.08)
        assert summary["config"]["hidden"] == 128

    def test_zero_epoch_determinism(self, tmp_path, data_dir):
        for sub in ("a", "b"):
            run(tmp_path, "train", "--epochs", "0", "--seed", "5",
                "--data-dir", data_dir, "--out", sub, "--no-plot")
        assert (body(tmp_path / "a" / "metrics.csv")
                == body(tmp_path / "b" / "metrics.csv"))
        best = [json.loads(body(tmp_path / s / "summary.json"))["best_acc"]
                for s in ("a", "b")]
        assert best[0] == best[1]

    def test_preset_expansion_lands_in_summary(self, tmp_path, data_dir):
        run(tmp_path, "train", "--preset", "C4", "--epochs", "0",
            "--data-dir", data_dir, "--out", "c4", "--no-plot")
        cfg = json.loads(body(tmp_path / "c4" / "summary.json"))["config"]
        assert (cfg["beta"], cfg["hidden"], cfg["lr"], cfg["batch"],
                cfg["num_steps"]) == (0.9, 128, 0.001, 128, 25)
        run(tmp_path, "train", "--preset", "C5", "--epochs", "0",
            "--data-dir", data_dir, "--out", "c5", "--no-plot")
        cfg5 = json.loads(body(tmp_path / "c5" / "summary.json"))["config"]
        assert (cfg5["beta"], cfg5["hidden"], cfg5["lr"]) == (0.95, 128, 0.002)

    def test_compare_surrogates_emits_three_rows(self, tmp_path, data_dir):
        code = run(tmp_path, "compare-surrogates", "--epochs", "0",
                   "--data-dir", data_dir, "--out", "cmp", "--no-plot")
        assert code == 0
        lines = body(tmp_path / "cmp" / "results.csv").decode().splitlines()
        assert lines[0] == "surrogate,best_acc"
        assert len(lines) == 4
        assert [line.split(",")[0] for line in lines[1:]] == [
            "fast_sigmoid", "arctan", "straight_through"]
        summary = json.loads(body(tmp_path / "cmp" / "summary.json"))
        assert len(summary["results"]) == 3

    def test_flags_override_config_file_overrides_preset(self, tmp_path, data_dir):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("hidden = 64\nlr = 0.005\n")
        run(tmp_path, "train", "--preset", "C4", "--config", str(cfg_file),
            "--lr", "0.007", "--epochs", "0", "--data-dir", data_dir,
            "--out", "m", "--no-plot")
        cfg = json.loads(body(tmp_path / "m" / "summary.json"))["config"]
        assert cfg["hidden"] == 64      # config file beat the preset
        assert cfg["lr"] == 0.007       # flag beat the config file
        assert cfg["beta"] == 0.9       # untouched preset value survived
