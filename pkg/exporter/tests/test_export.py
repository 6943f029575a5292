import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from matchexport.backends import ModelUnavailable, match_sift
from matchexport.cli import main
from matchexport.export import ExportRequest, export_matches, validate_document


def textured_image(seed: int, w: int = 320, h: int = 240) -> np.ndarray:
    """Deterministic blobby texture that SIFT handles well."""
    rng = np.random.default_rng(seed)
    coarse = rng.random((h // 8 + 2, w // 8 + 2))
    up = np.kron(coarse, np.ones((8, 8)))[:h, :w]
    img = (40 + 170 * up + rng.normal(0, 2.0, size=(h, w))).clip(0, 255)
    for _ in range(12):
        x0, y0 = rng.integers(0, w - 40), rng.integers(0, h - 40)
        img[y0:y0 + 24, x0:x0 + 32] = rng.integers(30, 220)
    return np.repeat(img.astype(np.uint8)[:, :, None], 3, axis=2)


def save(tmp_path, name: str, img: np.ndarray):
    path = tmp_path / name
    Image.fromarray(img).save(path)
    return path


def shifted_pair(seed: int, dx: int):
    base = textured_image(seed, w=360, h=240)
    target = base[:, : 360 - dx]
    source = base[:, dx:]
    return source, target


def test_sift_self_match_accuracy():
    img = textured_image(1)
    src, tgt, scores = match_sift(img, img, 1000)
    assert src.shape[0] >= 50
    err = np.hypot(*(src - tgt).T)
    assert np.mean(err <= 1.0) >= 0.9
    assert scores.min() >= 0.0 and scores.max() <= 1.0


def test_sift_translation_disparity_mode():
    source, target = shifted_pair(2, dx=24)
    src, tgt, _ = match_sift(source, target, 1000)
    assert src.shape[0] >= 30
    disp = src[:, 0] - tgt[:, 0]
    hist_mode = np.median(disp)
    assert abs(hist_mode - (-24.0)) <= 2.0  # source content sits 24 px left


def test_export_writes_schema_valid_file(tmp_path):
    source, target = shifted_pair(3, dx=16)
    sp = save(tmp_path, "s.png", source)
    tp = save(tmp_path, "t.png", target)
    out = tmp_path / "m.json"
    summary = export_matches(ExportRequest(str(sp), str(tp), str(out),
                                           max_matches=500, backend="sift"))
    assert summary["matches"] >= 30
    doc = json.loads(out.read_text())
    validate_document(doc)
    assert doc["source_dims"] == [source.shape[1], source.shape[0]]
    sw, sh = doc["source_dims"]
    for row in doc["matches"]:
        assert 0.0 <= row["xs"] <= sw and 0.0 <= row["ys"] <= sh


def test_auto_backend_falls_back_offline(tmp_path):
    img = textured_image(4)
    sp = save(tmp_path, "s.png", img)
    out = tmp_path / "m.json"
    summary = export_matches(ExportRequest(str(sp), str(sp), str(out), backend="auto"))
    assert summary["backend"] in ("sift", "xfeat")
    assert summary["matches"] > 0


def test_cli_roundtrip(tmp_path, capsys):
    source, target = shifted_pair(5, dx=12)
    sp = save(tmp_path, "s.png", source)
    tp = save(tmp_path, "t.png", target)
    out = tmp_path / "m.json"
    rc = main(["--source", str(sp), "--target", str(tp), "--out", str(out),
               "--max", "2000", "--model", "sift"])
    assert rc == 0
    assert "matches" in capsys.readouterr().out
    validate_document(json.loads(out.read_text()))


def test_cli_missing_input(tmp_path):
    rc = main(["--source", "/nope/a.png", "--target", "/nope/b.png",
               "--out", str(tmp_path / "m.json")])
    assert rc == 2


def test_cli_entry_point_runs(tmp_path):
    img = textured_image(6)
    sp = save(tmp_path, "s.png", img)
    proc = subprocess.run(
        [sys.executable, "-m", "matchexport.cli", "--source", str(sp),
         "--target", str(sp), "--out", str(tmp_path / "m.json"), "--model", "sift"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def test_learned_backend_reports_unavailable_without_weights(tmp_path):
    pytest.importorskip("torch")
    img = textured_image(7)
    sp = save(tmp_path, "s.png", img)
    req = ExportRequest(str(sp), str(sp), str(tmp_path / "m.json"), backend="xfeat")
    try:
        summary = export_matches(req)
    except ModelUnavailable:
        return  # offline environment: the documented failure mode
    assert summary["backend"] == "xfeat"  # weights were cached: real run
