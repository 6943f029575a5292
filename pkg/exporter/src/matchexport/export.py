"""Export matched features as the stitching pipeline's JSON match file.

Schema (the contract with the consuming pipeline):

    {"source_dims": [W, H], "target_dims": [W, H],
     "matches": [{"xs": f, "ys": f, "xt": f, "yt": f, "score": f}, ...]}

Coordinates are pixels in the original image frames; scores lie in [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .backends import run_backend


@dataclass
class ExportRequest:
    source_path: str
    target_path: str
    out_path: str
    max_matches: int = 2000
    backend: str = "auto"


def load_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("RGB", "L"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.uint8)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return arr


def build_document(src_pts, tgt_pts, scores, source_dims, target_dims) -> dict:
    """Assemble and bounds-check the match document before it is written."""
    sw, sh = source_dims
    tw, th = target_dims
    ok = (
        (src_pts[:, 0] >= 0) & (src_pts[:, 0] <= sw)
        & (src_pts[:, 1] >= 0) & (src_pts[:, 1] <= sh)
        & (tgt_pts[:, 0] >= 0) & (tgt_pts[:, 0] <= tw)
        & (tgt_pts[:, 1] >= 0) & (tgt_pts[:, 1] <= th)
        & np.isfinite(scores) & (scores >= 0.0) & (scores <= 1.0)
    )
    src_pts = src_pts[ok]
    tgt_pts = tgt_pts[ok]
    scores = scores[ok]
    doc = {
        "source_dims": [int(sw), int(sh)],
        "target_dims": [int(tw), int(th)],
        "matches": [
            {"xs": float(s[0]), "ys": float(s[1]),
             "xt": float(t[0]), "yt": float(t[1]), "score": float(sc)}
            for s, t, sc in zip(src_pts, tgt_pts, scores)
        ],
    }
    validate_document(doc)
    return doc


def validate_document(doc: dict) -> None:
    """Schema self-check; a failure here is a bug, not an input problem."""
    assert set(doc) == {"source_dims", "target_dims", "matches"}
    for key in ("source_dims", "target_dims"):
        dims = doc[key]
        assert isinstance(dims, list) and len(dims) == 2
        assert all(isinstance(v, int) and v > 0 for v in dims)
    for row in doc["matches"]:
        assert set(row) == {"xs", "ys", "xt", "yt", "score"}
        assert all(isinstance(v, float) for v in row.values())
        assert 0.0 <= row["score"] <= 1.0


def export_matches(req: ExportRequest) -> dict:
    """Run the matcher and write the match file; returns a small summary."""
    source = load_rgb(req.source_path)
    target = load_rgb(req.target_path)
    (src_pts, tgt_pts, scores), used = run_backend(
        req.backend, source, target, req.max_matches)
    doc = build_document(
        src_pts.reshape(-1, 2), tgt_pts.reshape(-1, 2), scores,
        (source.shape[1], source.shape[0]), (target.shape[1], target.shape[0]))
    out = Path(req.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return {"backend": used, "matches": len(doc["matches"]), "path": str(out)}
