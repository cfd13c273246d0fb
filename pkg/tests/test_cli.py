import hashlib
import json

import numpy as np
import pytest
from PIL import Image

from inkjetid.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "tiny.yaml"
    cfg.write_text("crops:\n  count: 4\ntrain:\n  hidden: [32]\n  max_epochs: 40\n  patience: 10\n")
    assert main(["synth", "--profiles", "3", "--docs", "2", "--size", "384", "--out", str(root / "data")]) == 0
    assert main(["extract", "--config", str(cfg), "--manifest", str(root / "data" / "manifest.jsonl"),
                 "--out", str(root / "f.npz")]) == 0
    assert main(["train", "--config", str(cfg), "--features", str(root / "f.npz"),
                 "--out", str(root / "m.npz")]) == 0
    return root, cfg


def test_synth_is_repeatable(workspace, tmp_path):
    root, _ = workspace
    assert main(["synth", "--profiles", "3", "--docs", "2", "--size", "384", "--out", str(tmp_path)]) == 0
    for png in sorted((root / "data" / "scans").glob("*.png")):
        again = tmp_path / "scans" / png.name
        assert hashlib.sha256(png.read_bytes()).hexdigest() == hashlib.sha256(again.read_bytes()).hexdigest()


def test_eval_prints_report(workspace, capsys):
    root, cfg = workspace
    capsys.readouterr()
    assert main(["eval", "--config", str(cfg), "--checkpoint", str(root / "m.npz"),
                 "--features", str(root / "f.npz"), "--out", str(root / "r.json")]) == 0
    out = capsys.readouterr().out
    assert "Top1 F1" in out and "per_document" in out
    assert set(json.loads((root / "r.json").read_text())["f1_top_n"]) == {"1", "2", "3"}


def test_fit_scaler_then_train(workspace, tmp_path):
    root, cfg = workspace
    assert main(["fit-scaler", "--features", str(root / "f.npz"), "--out", str(tmp_path / "s.json")]) == 0
    assert json.loads((tmp_path / "s.json").read_text())["fitted_on"] == 12
    assert main(["train", "--config", str(cfg), "--features", str(root / "f.npz"),
                 "--scaler", str(tmp_path / "s.json"), "--out", str(tmp_path / "m.npz")]) == 0


def test_csv_features(workspace, tmp_path):
    root, cfg = workspace
    assert main(["extract", "--config", str(cfg), "--crops", "1",
                 "--manifest", str(root / "data" / "manifest.jsonl"), "--out", str(tmp_path / "f.csv")]) == 0
    assert len((tmp_path / "f.csv").read_text().splitlines()) == 2 + 1 + 6


def test_predict_ranks(workspace, capsys):
    root, _ = workspace
    image = sorted((root / "data" / "scans").glob("*doc1.png"))[0]
    capsys.readouterr()
    assert main(["predict", "--checkpoint", str(root / "m.npz"), "--image", str(image), "--top", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3  # only 3 classes exist
    scores = [float(line.split("\t")[1]) for line in lines]
    assert scores == sorted(scores, reverse=True)


def test_predict_blank_page(workspace, tmp_path, capsys):
    root, _ = workspace
    Image.fromarray(np.full((300, 300, 3), 255, np.uint8)).save(tmp_path / "w.png", dpi=(2400, 2400))
    assert main(["predict", "--checkpoint", str(root / "m.npz"), "--image", str(tmp_path / "w.png")]) == 1
    assert "no valid crops found" in capsys.readouterr().err


def test_eval_rejects_other_feature_config(workspace, tmp_path, capsys):
    root, cfg = workspace
    assert main(["extract", "--config", str(cfg), "--method", "fft",
                 "--manifest", str(root / "data" / "manifest.jsonl"), "--out", str(tmp_path / "g.npz")]) == 0
    assert main(["eval", "--checkpoint", str(root / "m.npz"), "--features", str(tmp_path / "g.npz")]) == 1
    assert "different configuration" in capsys.readouterr().err


def test_corrupt_checkpoint(workspace, tmp_path, capsys):
    root, _ = workspace
    (tmp_path / "bad.npz").write_bytes(b"junk")
    assert main(["eval", "--checkpoint", str(tmp_path / "bad.npz"), "--features", str(root / "f.npz")]) == 1
    assert "error:" in capsys.readouterr().err


def test_bad_manifest(tmp_path, capsys):
    (tmp_path / "m.jsonl").write_text("")
    assert main(["extract", "--manifest", str(tmp_path / "m.jsonl"), "--out", str(tmp_path / "f.npz")]) == 1
    assert "manifest is empty" in capsys.readouterr().err
