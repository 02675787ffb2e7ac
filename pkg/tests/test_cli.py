import json

import numpy as np
import pytest

from scenelayout.cli import main
from scenelayout.imgio import load_grid_json, read_pgm16, write_ppm


@pytest.fixture
def white_ppm(tmp_path):
    path = tmp_path / "white.ppm"
    write_ppm(path, np.full((24, 24, 3), 255, dtype=np.uint8))
    return path


@pytest.fixture
def split_ppm(tmp_path):
    frame = np.zeros((24, 24, 3), dtype=np.uint8)
    frame[:, 12:] = 255
    path = tmp_path / "split.ppm"
    write_ppm(path, frame)
    return path


class TestLuminanceCommand:
    def test_white_image_is_all_zero_grid(self, tmp_path, white_ppm):
        out = tmp_path / "lum"
        assert main(["luminance", str(white_ppm), "--out", str(out), "--grid", "4"]) == 0
        grid = load_grid_json(str(out) + ".grid.json")
        np.testing.assert_allclose(grid, 0.0)

    def test_half_split_grid(self, tmp_path, split_ppm):
        out = tmp_path / "lum"
        assert main(["luminance", str(split_ppm), "--out", str(out), "--grid", "4"]) == 0
        grid = load_grid_json(str(out) + ".grid.json")
        np.testing.assert_allclose(grid[:, :2], 0.0)
        np.testing.assert_allclose(grid[:, 2:], 1.0)
        heat = read_pgm16(str(out) + ".heat.pgm")
        assert heat.shape == (24, 24)

    def test_missing_file_exit_2(self, tmp_path, capsys):
        rc = main(["luminance", str(tmp_path / "nope.ppm"), "--out", str(tmp_path / "x")])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_undecodable_file_exit_2(self, tmp_path):
        bad = tmp_path / "bad.ppm"
        bad.write_bytes(b"not a ppm at all")
        rc = main(["luminance", str(bad), "--out", str(tmp_path / "x")])
        assert rc == 2


class TestTrainBanditCommand:
    def test_synthetic_recovery_logged(self, tmp_path, capsys):
        out = tmp_path / "state.json"
        rc = main(["train-bandit", "--synthetic", "10000", "--out", str(out), "--seed", "5"])
        assert rc == 0
        text = capsys.readouterr().out
        assert "recovery error" in text
        err = float(text.split("recovery error |theta - theta*| =")[1].split()[0])
        assert err < 0.05

    def test_rerun_is_byte_identical(self, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        main(["train-bandit", "--synthetic", "500", "--out", str(a), "--seed", "9"])
        main(["train-bandit", "--synthetic", "500", "--out", str(b), "--seed", "9"])
        assert a.read_bytes() == b.read_bytes()

    def test_zero_samples_exit_2(self, tmp_path):
        rc = main(["train-bandit", "--synthetic", "0", "--out", str(tmp_path / "s.json")])
        assert rc == 2

    def test_no_source_exit_2(self, tmp_path):
        rc = main(["train-bandit", "--out", str(tmp_path / "s.json")])
        assert rc == 2

    def test_scene_training(self, tmp_path):
        scenes = tmp_path / "scenes"
        main(["gen-scenes", "--count", "2", "--out", str(scenes), "--seed", "3",
              "--size", "96x54", "--frames", "3"])
        out = tmp_path / "state.json"
        rc = main(["train-bandit", "--scenes", str(scenes), "--samples", "400",
                   "--out", str(out), "--seed", "4"])
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["observation_count"] == 400
        assert len(payload["theta"]) == 18


class TestRecommendCommand:
    def test_no_method_overlays_objects(self, tmp_path, split_ppm):
        out = tmp_path / "rec"
        objects = [[1, 2], [3, 4], [5, 6], [7, 8], [9, 10], [11, 0]]
        obj_path = tmp_path / "objects.json"
        obj_path.write_text(json.dumps(objects))
        rc = main(["recommend", "--scene", str(split_ppm), "--method", "no",
                   "--objects", str(obj_path), "--out", str(out), "--seed", "1"])
        assert rc == 0
        payload = json.loads((tmp_path / "rec.layout.json").read_text())
        assert payload["positions"] == objects

    def test_dark_side_placement(self, tmp_path, split_ppm):
        scenes = tmp_path / "scenes"
        main(["gen-scenes", "--count", "3", "--kinds", "half_split", "--out",
              str(scenes), "--seed", "11", "--size", "96x54", "--frames", "3"])
        state = tmp_path / "state.json"
        main(["train-bandit", "--scenes", str(scenes), "--samples", "2000",
              "--out", str(state), "--seed", "12"])
        out = tmp_path / "rec"
        rc = main(["recommend", "--state", str(state), "--scene", str(split_ppm),
                   "--out", str(out), "--seed", "13", "--batch", "400"])
        assert rc == 0
        payload = json.loads(open(str(out) + ".layout.json").read())
        grid = np.zeros((12, 12))
        grid[:, 6:] = 1.0
        lums = [grid[y, x] for x, y in payload["positions"]]
        assert np.mean(lums) < 0.5

    def test_corrupt_state_exit_3(self, tmp_path, white_ppm):
        state = tmp_path / "state.json"
        state.write_text("{corrupt")
        rc = main(["recommend", "--state", str(state), "--scene", str(white_ppm),
                   "--out", str(tmp_path / "rec")])
        assert rc == 3

    def test_invalid_method_usage_error(self, tmp_path, white_ppm):
        with pytest.raises(SystemExit) as exc:
            main(["recommend", "--scene", str(white_ppm), "--method", "best",
                  "--out", str(tmp_path / "rec")])
        assert exc.value.code == 2


class TestDecoderCommands:
    def test_synth_train_spectrum_pipeline(self, tmp_path, capsys):
        epochs = tmp_path / "epochs"
        rc = main(["synth-epochs", "--per-class", "2", "--duration", "4.0",
                   "--out", str(epochs), "--seed", "21"])
        assert rc == 0
        files = sorted(epochs.glob("*.eeg"))
        assert len(files) == 12

        model = tmp_path / "model.json"
        rc = main(["train-decoder", "--dataset", str(epochs), "--passes", "2",
                   "--out", str(model), "--seed", "22"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "pass   1" in out and "model written" in out

        spec = tmp_path / "spec.csv"
        # trial files are written class-major: file index 2-3 hold class 1 (7.5 Hz)
        rc = main(["spectrum", "--epoch", str(files[2]), "--out", str(spec)])
        assert rc == 0
        rows = [ln.split(",") for ln in spec.read_text().splitlines()[1:]]
        freqs = np.array([float(r[0]) for r in rows])
        amps = np.array([float(r[1]) for r in rows])
        band = (freqs >= 6.0) & (freqs <= 30.0)
        top2 = set(np.round(freqs[band][np.argsort(amps[band])[::-1][:2]], 1))
        assert top2 == {7.5, 15.0}

        firing = tmp_path / "firing.csv"
        rc = main(["spectrum", "--epoch", str(files[2]), "--firing-strengths",
                   "--model", str(model), "--out", str(firing)])
        assert rc == 0
        assert firing.read_text().startswith("frequency,amplitude")

    def test_empty_dataset_exit_2(self, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        rc = main(["train-decoder", "--dataset", str(empty),
                   "--out", str(tmp_path / "m.json")])
        assert rc == 2

    def test_corrupt_model_exit_3(self, tmp_path):
        epochs = tmp_path / "epochs"
        main(["synth-epochs", "--per-class", "1", "--duration", "1.0",
              "--out", str(epochs), "--seed", "1"])
        model = tmp_path / "model.json"
        model.write_text('{"format": "other"}')
        epoch = sorted(epochs.glob("*.eeg"))[0]
        rc = main(["spectrum", "--epoch", str(epoch), "--firing-strengths",
                   "--model", str(model), "--out", str(tmp_path / "s.csv")])
        assert rc == 3


class TestSimulateCommand:
    def _micro_decoder(self, tmp_path):
        model = tmp_path / "model.json"
        main(["train-decoder", "--per-class", "2", "--duration", "1.0",
              "--passes", "2", "--out", str(model), "--seed", "30"])
        return model

    def test_one_round_writes_18_records(self, tmp_path):
        model = self._micro_decoder(tmp_path)
        out = tmp_path / "sim"
        rc = main(["simulate", "--rounds", "1", "--decoder", str(model),
                   "--batch", "60", "--train-samples", "300",
                   "--out", str(out), "--seed", "31"])
        assert rc == 0
        lines = (tmp_path / "sim.trials.jsonl").read_text().strip().splitlines()
        assert len(lines) == 18
        methods = {json.loads(ln)["method"] for ln in lines}
        assert methods == {"JOLI", "LOO", "NO"}
        csv_lines = (tmp_path / "sim.metrics.csv").read_text().strip().splitlines()
        assert len(csv_lines) == 7

    def test_fixed_seed_byte_reproducible(self, tmp_path):
        model = self._micro_decoder(tmp_path)
        for name in ("a", "b"):
            main(["simulate", "--rounds", "1", "--decoder", str(model),
                  "--batch", "60", "--train-samples", "200",
                  "--out", str(tmp_path / name), "--seed", "32"])
        assert (tmp_path / "a.metrics.csv").read_bytes() == (tmp_path / "b.metrics.csv").read_bytes()
        assert (tmp_path / "a.trials.jsonl").read_bytes() == (tmp_path / "b.trials.jsonl").read_bytes()
