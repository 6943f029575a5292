"""Correspondence acquisition: built-in classical matcher and match-file IO.

The JSON match file is the language-neutral boundary for external feature
exporters:

    {"source_dims": [W, H], "target_dims": [W, H],
     "matches": [{"xs": f, "ys": f, "xt": f, "yt": f, "score": f}, ...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import maximum_filter

from . import kernels
from .errors import BoundsError, ImageTooSmall, NoMatchesFound, ParseError
from .imgio import to_gray

PATCH = 16          # descriptor patch side
BORDER = PATCH // 2
RATIO_TEST = 0.85
BASE_THRESHOLD = 12.0
MIN_KEYPOINTS = 64
NMS_RADIUS = 4


@dataclass
class MatchSet:
    """Correspondences as parallel arrays plus the image dimensions (W, H)."""

    xs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ys: np.ndarray = field(default_factory=lambda: np.zeros(0))
    xt: np.ndarray = field(default_factory=lambda: np.zeros(0))
    yt: np.ndarray = field(default_factory=lambda: np.zeros(0))
    score: np.ndarray = field(default_factory=lambda: np.zeros(0))
    source_dims: tuple[int, int] = (0, 0)
    target_dims: tuple[int, int] = (0, 0)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=np.float64)
        self.ys = np.asarray(self.ys, dtype=np.float64)
        self.xt = np.asarray(self.xt, dtype=np.float64)
        self.yt = np.asarray(self.yt, dtype=np.float64)
        self.score = np.asarray(self.score, dtype=np.float64)

    def __len__(self) -> int:
        return int(self.xs.shape[0])

    def src_points(self) -> np.ndarray:
        return np.column_stack([self.xs, self.ys])

    def tgt_points(self) -> np.ndarray:
        return np.column_stack([self.xt, self.yt])

    def subset(self, indices) -> "MatchSet":
        idx = np.asarray(indices)
        return MatchSet(
            self.xs[idx], self.ys[idx], self.xt[idx], self.yt[idx], self.score[idx],
            self.source_dims, self.target_dims,
        )

    def validate_bounds(self) -> None:
        sw, sh = self.source_dims
        tw, th = self.target_dims
        ok = (
            (self.xs >= 0) & (self.xs <= sw) & (self.ys >= 0) & (self.ys <= sh)
            & (self.xt >= 0) & (self.xt <= tw) & (self.yt >= 0) & (self.yt <= th)
            & np.isfinite(self.score)
        )
        bad = np.flatnonzero(~ok)
        if bad.size:
            raise BoundsError(int(bad[0]))


# ----------------------------------------------------------------------
# Built-in matcher: segment-test corners + normalized patch descriptors
# ----------------------------------------------------------------------

def _detect_corners(gray: np.ndarray, cap: int) -> np.ndarray:
    """Corner (x, y) list, strongest first, deterministic tie order."""
    thr = BASE_THRESHOLD
    pts = np.zeros((0, 2), dtype=np.int64)
    score = None
    while thr >= 1.5:
        score = kernels.corner_score(gray, thr)
        local_max = score == maximum_filter(score, size=2 * NMS_RADIUS + 1, mode="constant")
        ys, xs = np.nonzero(local_max & (score > 0))
        if xs.size >= MIN_KEYPOINTS:
            break
        thr *= 0.5
    if score is None or xs.size == 0:
        return pts
    s = score[ys, xs]
    order = np.lexsort((xs, ys, -s))
    keep = order[:cap]
    return np.column_stack([xs[keep], ys[keep]])


def _descriptors(gray: np.ndarray, pts: np.ndarray):
    """Mean-free, unit-norm PATCHxPATCH intensity descriptors."""
    h, w = gray.shape
    inb = (
        (pts[:, 0] >= BORDER) & (pts[:, 0] < w - BORDER)
        & (pts[:, 1] >= BORDER) & (pts[:, 1] < h - BORDER)
    )
    pts = pts[inb]
    if pts.shape[0] == 0:
        return pts, np.zeros((0, PATCH * PATCH))
    off = np.arange(-BORDER, BORDER)
    oy, ox = np.meshgrid(off, off, indexing="ij")
    rows = pts[:, 1][:, None, None] + oy[None]
    cols = pts[:, 0][:, None, None] + ox[None]
    patches = gray[rows, cols].reshape(pts.shape[0], -1).astype(np.float64)
    patches -= patches.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(patches, axis=1, keepdims=True)
    good = norms[:, 0] > 1e-6
    return pts[good], patches[good] / norms[good]


def _mutual_matches(da: np.ndarray, db: np.ndarray):
    """Mutual nearest neighbors under cosine distance with a ratio test."""
    if da.shape[0] == 0 or db.shape[0] == 0:
        return []
    dist = 1.0 - da @ db.T
    j1 = np.argmin(dist, axis=1)
    best = dist[np.arange(dist.shape[0]), j1]
    masked = dist.copy()
    masked[np.arange(dist.shape[0]), j1] = np.inf
    second = masked.min(axis=1)
    keep = best < RATIO_TEST * second
    i_best = np.argmin(dist, axis=0)
    out = []
    for i in np.flatnonzero(keep):
        j = int(j1[i])
        if i_best[j] == i:
            out.append((i, j, 1.0 - float(best[i])))
    return out


def detect_and_match_builtin(source: np.ndarray, target: np.ndarray,
                             max_matches: int = 2000, seed: int = 0) -> MatchSet:
    """Classical feature matching between two images.

    Fully deterministic for fixed inputs; ``seed`` is accepted for interface
    stability but the detector does not randomize.
    """
    del seed
    for img, name in ((source, "source"), (target, "target")):
        if img.shape[0] < 32 or img.shape[1] < 32:
            raise ImageTooSmall(f"{name} is smaller than 32x32")
    gs = to_gray(source)
    gt = to_gray(target)
    cap = max(4 * max_matches, 512)
    ps, ds = _descriptors(gs, _detect_corners(gs, cap))
    pt, dt = _descriptors(gt, _detect_corners(gt, cap))
    pairs = _mutual_matches(ds, dt)
    if not pairs:
        raise NoMatchesFound("no mutual matches survived the ratio test")
    sim = np.array([p[2] for p in pairs])
    si = np.array([p[0] for p in pairs])
    ti = np.array([p[1] for p in pairs])
    score = np.clip((1.0 + sim) / 2.0, 0.0, 1.0)
    order = np.lexsort((ps[si, 0], ps[si, 1], -score))[:max_matches]
    return MatchSet(
        xs=ps[si[order], 0].astype(np.float64),
        ys=ps[si[order], 1].astype(np.float64),
        xt=pt[ti[order], 0].astype(np.float64),
        yt=pt[ti[order], 1].astype(np.float64),
        score=score[order],
        source_dims=(source.shape[1], source.shape[0]),
        target_dims=(target.shape[1], target.shape[0]),
    )


# ----------------------------------------------------------------------
# Match-file IO
# ----------------------------------------------------------------------

def save_match_file(ms: MatchSet, path) -> None:
    doc = {
        "source_dims": [int(ms.source_dims[0]), int(ms.source_dims[1])],
        "target_dims": [int(ms.target_dims[0]), int(ms.target_dims[1])],
        "matches": [
            {
                "xs": float(ms.xs[i]), "ys": float(ms.ys[i]),
                "xt": float(ms.xt[i]), "yt": float(ms.yt[i]),
                "score": float(ms.score[i]),
            }
            for i in range(len(ms))
        ],
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def load_match_file(path) -> MatchSet:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot parse match file {path}: {exc}") from exc
    try:
        sw, sh = (int(v) for v in doc["source_dims"])
        tw, th = (int(v) for v in doc["target_dims"])
        rows = doc["matches"]
        xs = np.array([float(m["xs"]) for m in rows])
        ys = np.array([float(m["ys"]) for m in rows])
        xt = np.array([float(m["xt"]) for m in rows])
        yt = np.array([float(m["yt"]) for m in rows])
        sc = np.array([float(m["score"]) for m in rows])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"match file {path} does not follow the schema: {exc}") from exc
    ms = MatchSet(xs, ys, xt, yt, sc, (sw, sh), (tw, th))
    ms.validate_bounds()
    return ms
