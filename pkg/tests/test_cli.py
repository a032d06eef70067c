import numpy as np
import pytest
from click.testing import CliRunner

from barkaec import postfilter, wavio
from barkaec.cli import main
from barkaec.scenario import ScenarioSpec, generate, write_bundle


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli") / "bundle"
    write_bundle(d, generate(ScenarioSpec(duration=1.5, seed=9)))
    return d


class TestProcess:
    def test_lec_only(self, runner, bundle, tmp_path):
        out = tmp_path / "enh.wav"
        res = runner.invoke(main, ["process", "--farend", str(bundle / "x.wav"),
                                   "--mic", str(bundle / "y.wav"),
                                   "--out", str(out)])
        assert res.exit_code == 0, res.output
        assert "mask_mode = unity" in res.output
        sig, fs = wavio.read_wav(out)
        assert fs == 16000
        assert sig.shape[0] == 24000

    def test_oracle_mask(self, runner, bundle, tmp_path):
        out = tmp_path / "enh.wav"
        res = runner.invoke(main, ["process", "--farend", str(bundle / "x.wav"),
                                   "--mic", str(bundle / "y.wav"),
                                   "--out", str(out),
                                   "--oracle-mask", str(bundle / "s.wav")])
        assert res.exit_code == 0, res.output
        assert "mask_mode = oracle" in res.output

    def test_model_weights(self, runner, bundle, tmp_path):
        wpath = tmp_path / "w.bin"
        postfilter.save_weights(
            postfilter.zero_weights(postfilter.default_arch()), wpath)
        out = tmp_path / "enh.wav"
        res = runner.invoke(main, ["process", "--farend", str(bundle / "x.wav"),
                                   "--mic", str(bundle / "y.wav"),
                                   "--out", str(out), "--weights", str(wpath)])
        assert res.exit_code == 0, res.output
        assert "mask_mode = model" in res.output

    def test_bad_weights_exit_2(self, runner, bundle, tmp_path):
        wpath = tmp_path / "bad.bin"
        wpath.write_bytes(b"garbage")
        res = runner.invoke(main, ["process", "--farend", str(bundle / "x.wav"),
                                   "--mic", str(bundle / "y.wav"),
                                   "--out", str(tmp_path / "o.wav"),
                                   "--weights", str(wpath)])
        assert res.exit_code == 2

    def test_bad_config_exit_3(self, runner, bundle, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("lec.step_size = 7.0\n")
        res = runner.invoke(main, ["process", "--farend", str(bundle / "x.wav"),
                                   "--mic", str(bundle / "y.wav"),
                                   "--out", str(tmp_path / "o.wav"),
                                   "--config", str(cfg)])
        assert res.exit_code == 3

    def test_unknown_config_key_exit_3(self, runner, bundle, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("bogus_key = 1\n")
        res = runner.invoke(main, ["process", "--farend", str(bundle / "x.wav"),
                                   "--mic", str(bundle / "y.wav"),
                                   "--out", str(tmp_path / "o.wav"),
                                   "--config", str(cfg)])
        assert res.exit_code == 3


class TestSimulateEvaluate:
    def test_round_trip(self, runner, tmp_path):
        d = tmp_path / "b"
        res = runner.invoke(main, ["simulate", "--out", str(d), "--seed", "3",
                                   "--condition", "dt", "--duration", "1.5"])
        assert res.exit_code == 0, res.output
        assert (d / "y.wav").exists() and (d / "meta.txt").exists()

        rep = tmp_path / "report.txt"
        res = runner.invoke(main, ["evaluate", "--bundle", str(d),
                                   "--oracle-mask", "--report", str(rep)])
        assert res.exit_code == 0, res.output
        text = rep.read_text()
        assert "erle_db" in text and "erle_lec_only_db" in text
        assert "condition = dt" in text


class TestAudit:
    def test_default_arch(self, runner):
        res = runner.invoke(main, ["audit"])
        assert res.exit_code == 0
        assert "params = 1700894" in res.output
        assert "macs_per_s = 223254000" in res.output


class TestDesignFb:
    def test_report_and_taps(self, runner, tmp_path):
        out = tmp_path / "taps.bin"
        res = runner.invoke(main, ["design-fb", "--out", str(out)])
        assert res.exit_code == 0, res.output
        db = float(res.output.split("round_trip_db = ")[1].splitlines()[0])
        assert db <= -40.0
        assert "lookahead_samples = 896" in res.output
        assert out.exists()

    def test_bad_geometry_exit_3(self, runner):
        res = runner.invoke(main, ["design-fb", "--filter-len", "1000"])
        assert res.exit_code == 3


class TestExportFeatures:
    def test_npz_contents(self, runner, bundle, tmp_path):
        out = tmp_path / "feats.npz"
        res = runner.invoke(main, ["export-features",
                                   "--farend", str(bundle / "x.wav"),
                                   "--mic", str(bundle / "y.wav"),
                                   "--out", str(out)])
        assert res.exit_code == 0, res.output
        data = np.load(out)
        assert set(data.files) == {"feat_e", "feat_y", "feat_x"}
        assert data["feat_e"].shape[1] == 86
        assert np.all(np.isfinite(data["feat_e"]))
