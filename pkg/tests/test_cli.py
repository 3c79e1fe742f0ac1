import json
import shutil

import numpy as np
import pytest
from PIL import Image

from wavetex.cli import main


@pytest.fixture
def obs_png(tmp_path, data_dir):
    im = np.asarray(Image.open(f"{data_dir}/gravel128.png"))[:32, :32]
    path = tmp_path / "obs.png"
    Image.fromarray(im).save(path)
    return path


SMALL = ["--scales", "2", "--orients", "2", "--iters", "10", "--restarts", "2", "--quiet"]


def test_synth_writes_outputs_and_replays(tmp_path, obs_png, capsys):
    out = tmp_path / "s.png"
    assert main(["synth", "--input", str(obs_png), "--variant", "i", "--seed", "7",
                 "--out", str(out)] + SMALL) == 0
    manifest = tmp_path / "s.manifest.json"
    assert out.exists() and manifest.exists() and (tmp_path / "s.history.jsonl").exists()
    doc = json.loads(manifest.read_text())
    assert doc["config"]["seed"] == 7 and doc["config"]["boundary"] == "windowed"
    assert doc["window_margins"] == {"0": 1, "1": 2, "2": 4}
    assert doc["statistic_counts"]["covariances"] > 0
    replay = tmp_path / "r.png"
    assert main(["synth", "--manifest", str(manifest), "--out", str(replay), "--quiet"]) == 0
    assert replay.read_bytes() == out.read_bytes()


def test_replay_detects_changed_input(tmp_path, obs_png):
    out = tmp_path / "s.png"
    main(["synth", "--input", str(obs_png), "--out", str(out)] + SMALL)
    Image.fromarray(np.zeros((32, 32), np.uint8)).save(obs_png)
    assert main(["synth", "--manifest", str(tmp_path / "s.manifest.json"), "--quiet"]) == 1


def test_synth_missing_input(capsys):
    assert main(["synth"]) == 1
    err = capsys.readouterr().err
    assert "usage" in err and "--input" in err


def test_synth_bad_config(tmp_path, obs_png, capsys):
    assert main(["synth", "--input", str(obs_png), "--scales", "4", "--out",
                 str(tmp_path / "x.png")]) == 1
    assert "error" in capsys.readouterr().err
    assert main(["synth", "--input", str(tmp_path / "missing.png")]) == 1
    assert main(["synth", "--input", str(obs_png), "--variant", "bogus"]) == 1


def test_config_file_precedence(tmp_path, obs_png):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"j_max": 2, "l_count": 2, "seed": 5, "iterations_per_restart": 3,
                               "restarts": 1, "boundary": "periodic"}))
    out = tmp_path / "s.png"
    assert main(["synth", "--input", str(obs_png), "--config", str(cfg), "--seed", "9",
                 "--out", str(out), "--quiet"]) == 0
    doc = json.loads((tmp_path / "s.manifest.json").read_text())
    assert doc["config"]["seed"] == 9 and doc["config"]["boundary"] == "periodic"
    assert doc["config"]["j_max"] == 2 and doc["window_margins"] is None


def test_windowed_j6_on_256(tmp_path, data_dir):
    img = np.asarray(Image.open(f"{data_dir}/gravel128.png"))
    big = tmp_path / "big.png"
    Image.fromarray(np.tile(img, (2, 2))).save(big)
    out = tmp_path / "j6.png"
    assert main(["synth", "--input", str(big), "--variant", "s", "--scales", "6", "--orients",
                 "2", "--alphas", "2", "--iters", "1", "--restarts", "1", "--boundary",
                 "windowed", "--out", str(out), "--quiet"]) == 0
    doc = json.loads((tmp_path / "j6.manifest.json").read_text())
    assert doc["window_margins"]["6"] == 64


def test_stats_shift_invariance_and_compare(tmp_path, obs_png, capsys):
    im = np.asarray(Image.open(obs_png))
    shifted = tmp_path / "shift.png"
    Image.fromarray(np.roll(im, (5, -3), axis=(0, 1))).save(shifted)
    flags = ["--scales", "2", "--orients", "2", "--boundary", "periodic"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["stats", "--input", str(obs_png), "--out", str(a)] + flags) == 0
    assert main(["stats", "--input", str(shifted), "--out", str(b)] + flags) == 0
    va = [e["value"] for e in json.loads(a.read_text())["entries"]]
    vb = [e["value"] for e in json.loads(b.read_text())["entries"]]
    assert np.abs(np.subtract(va, vb)).max() < 1e-10
    capsys.readouterr()
    assert main(["stats", "--compare", str(a), str(b)]) == 0
    assert float(capsys.readouterr().out) < 1e-9
    means = tmp_path / "m.json"
    assert main(["stats", "--input", str(obs_png), "--dump-means", str(means),
                 "--target", str(a)] + flags) == 0
    assert "relative distance" in capsys.readouterr().out
    assert len(json.loads(means.read_text())) == 2 * 2 * 4


def test_stats_layout_mismatch(tmp_path, obs_png):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["stats", "--input", str(obs_png), "--scales", "2", "--orients", "2", "--out", str(a)])
    main(["stats", "--input", str(obs_png), "--scales", "1", "--orients", "2", "--out", str(b)])
    assert main(["stats", "--compare", str(a), str(b)]) == 1
    assert main(["stats"]) == 1


def test_count_outputs(capsys):
    assert main(["count", "--model", "ps-gray", "--scales", "4", "--orients", "4",
                 "--delta", "3"]) == 0
    out = capsys.readouterr().out
    assert "792" in out and "710" in out
    assert main(["count", "--model", "alpha-i", "--scales", "5", "--orients", "4",
                 "--alphas", "4", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["bounds"]["upper bound, |T| = 41 (nominal)"] == 39360
    assert 33000 <= doc["paper_counted"] <= 39360
    assert main(["count", "--model", "alpha-s"]) == 0
    assert "3856" in capsys.readouterr().out


def test_filters(tmp_path):
    out = tmp_path / "f"
    assert main(["filters", "--scales", "3", "--orients", "4", "--size", "64", "--out",
                 str(out)]) == 0
    assert len(list(out.glob("*.png"))) == 13
    assert main(["filters", "--scales", "6", "--size", "64", "--out", str(out)]) == 1


def test_verify_subset(capsys):
    assert main(["verify", "--only", "prop2"]) == 0
    reports = json.loads(capsys.readouterr().out)
    assert [r["name"] for r in reports] == ["prop2"] and reports[0]["passed"]


def test_console_script_installed():
    assert shutil.which("wavetex") is not None
