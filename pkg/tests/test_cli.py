import json

from ditherlab.cli import main


def run(argv):
    return main([str(a) for a in argv])


class TestDemod:
    DEMOD_FAST = ["demod", "--duration-s", "1", "--replicas", "3", "--segment", "4096"]

    def test_artifacts_and_exit_code(self, tmp_path, capsys):
        assert run(self.DEMOD_FAST + ["--out-dir", tmp_path]) == 0
        for name in ("spectrum_plain.csv", "spectrum_dithered.csv",
                     "distortion_report.csv", "distortion_report.txt",
                     "demod.svg", "manifest.json"):
            assert (tmp_path / name).exists(), name
        out = capsys.readouterr().out
        assert "plain ReLU" in out and "parallel-dithered ReLU" in out

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(self.DEMOD_FAST + ["--out-dir", a]) == 0
        assert run(self.DEMOD_FAST + ["--out-dir", b]) == 0
        for name in ("spectrum_plain.csv", "spectrum_dithered.csv",
                     "distortion_report.csv", "demod.svg"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_manifest_records_options(self, tmp_path):
        assert run(self.DEMOD_FAST + ["--out-dir", tmp_path, "--seed", "7"]) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["config"]["replicas"] == 3
        assert manifest["seeds"] == [7]
        assert manifest["tool_version"]
        assert "total" in manifest["timings_s"]

    def test_bad_frequency_is_usage_error(self, tmp_path, capsys):
        assert run(["demod", "--out-dir", tmp_path, "--carrier-hz", "50000"]) == 1
        assert "ditherlab" in capsys.readouterr().err


class TestTrain:
    def train_args(self, mnist_dir, out_dir, extra=()):
        return ["train", "--mnist-dir", mnist_dir, "--out-dir", out_dir,
                "--subset", "16", "--epochs", "2", *extra]

    def test_baseline_artifacts(self, synthetic_mnist_dir, tmp_path, capsys):
        assert run(self.train_args(synthetic_mnist_dir, tmp_path)) == 0
        curve = (tmp_path / "error_curve.csv").read_text()
        assert curve.splitlines()[0] == "epoch,test_error"
        assert len(curve.splitlines()) == 4  # header + initial + 2 epochs
        assert "baseline" in capsys.readouterr().out
        assert (tmp_path / "manifest.json").exists()

    def test_dithered_regime(self, synthetic_mnist_dir, tmp_path):
        extra = ["--regime", "parallel_dither", "--replicas", "3"]
        assert run(self.train_args(synthetic_mnist_dir, tmp_path, extra)) == 0

    def test_env_var_supplies_data_dir(self, synthetic_mnist_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("DITHERLAB_MNIST_DIR", str(synthetic_mnist_dir))
        assert run(["train", "--out-dir", tmp_path, "--subset", "16",
                    "--epochs", "1"]) == 0

    def test_missing_data_dir_is_usage_error(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("DITHERLAB_MNIST_DIR", raising=False)
        assert run(["train", "--out-dir", tmp_path]) == 1
        assert "DITHERLAB_MNIST_DIR" in capsys.readouterr().err

    def test_nonexistent_data_dir_is_data_error(self, tmp_path, capsys):
        assert run(self.train_args(tmp_path / "nowhere", tmp_path / "out")) == 2

    def test_corrupt_idx_is_data_error_naming_file(self, synthetic_mnist_dir,
                                                   tmp_path, capsys):
        import shutil
        broken = tmp_path / "mnist"
        shutil.copytree(synthetic_mnist_dir, broken)
        victim = broken / "train-images-idx3-ubyte"
        victim.write_bytes(b"\x00\x00\x08\x01" + victim.read_bytes()[4:])
        assert run(self.train_args(broken, tmp_path / "out")) == 2
        assert "train-images-idx3-ubyte" in capsys.readouterr().err

    def test_oversized_subset_is_usage_error(self, synthetic_mnist_dir, tmp_path,
                                             capsys):
        extra = ["--subset", "100000"]
        assert run(["train", "--mnist-dir", synthetic_mnist_dir,
                    "--out-dir", tmp_path, *extra]) == 1
        assert "100000" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self, tmp_path):
        assert run(["train", "--out-dir", tmp_path, "--momentum", "0.9"]) == 1


class TestConfigFile:
    def test_precedence_defaults_config_flags(self, synthetic_mnist_dir, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epochs = 5  # overridden by the flag below\nsubset = 16\n")
        out = tmp_path / "out"
        assert run(["train", "--mnist-dir", synthetic_mnist_dir, "--out-dir", out,
                    "--config", cfg, "--epochs", "1"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["epochs"] == 1  # flag beats file
        assert manifest["config"]["subset"] == 16  # file beats default
        assert manifest["config"]["lr"] == 0.01  # default survives

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("momentum = 0.9\n")
        assert run(["demod", "--out-dir", tmp_path, "--config", cfg]) == 1
        assert "momentum" in capsys.readouterr().err

    def test_malformed_line_rejected(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("epochs\n")
        assert run(["demod", "--out-dir", tmp_path, "--config", cfg]) == 1

    def test_missing_config_file_is_data_error(self, tmp_path):
        assert run(["demod", "--out-dir", tmp_path,
                    "--config", tmp_path / "absent.cfg"]) == 2


class TestCompare:
    COMPARE_EXTRA = ["--subset", "12", "--epochs", "2", "--replicas", "3"]

    def test_artifacts(self, synthetic_mnist_dir, tmp_path, capsys):
        assert run(["compare", "--mnist-dir", synthetic_mnist_dir,
                    "--out-dir", tmp_path, *self.COMPARE_EXTRA]) == 0
        header = (tmp_path / "comparison.csv").read_text().splitlines()[0]
        assert header == ("epoch,baseline,dropout,parallel_dither,"
                          "parallel_dither_dropout")
        summary = (tmp_path / "summary.csv").read_text().splitlines()
        assert len(summary) == 5  # header + four regimes
        assert (tmp_path / "comparison.svg").exists()
        out = capsys.readouterr().out
        assert out.count("final error") == 4

    def test_rerun_byte_identical(self, synthetic_mnist_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["compare", "--mnist-dir", synthetic_mnist_dir,
                        "--out-dir", out, *self.COMPARE_EXTRA]) == 0
        assert (a / "comparison.csv").read_bytes() == (b / "comparison.csv").read_bytes()
        assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()

    def test_workers_do_not_change_results(self, synthetic_mnist_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["compare", "--mnist-dir", synthetic_mnist_dir,
                    "--out-dir", a, *self.COMPARE_EXTRA]) == 0
        assert run(["compare", "--mnist-dir", synthetic_mnist_dir,
                    "--out-dir", b, "--workers", "2", *self.COMPARE_EXTRA]) == 0
        assert (a / "comparison.csv").read_bytes() == (b / "comparison.csv").read_bytes()


class TestTopLevel:
    def test_no_command_is_usage_error(self, capsys):
        assert run([]) == 1

    def test_unknown_command_is_usage_error(self):
        assert run(["frobnicate"]) == 1
