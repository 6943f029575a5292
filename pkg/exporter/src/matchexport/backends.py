"""Feature-matching backends.

Every backend returns (src_pts, tgt_pts, scores): float64 arrays of matched
pixel coordinates in the original image frames plus scores in [0, 1].
"""

from __future__ import annotations

import numpy as np


class ModelUnavailable(RuntimeError):
    """The requested matcher cannot be loaded in this environment."""


def _to_gray_u8(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        return img
    r, g, b = img[:, :, 0], img[:, :, 1], img[:, :, 2]
    return (0.299 * r + 0.587 * g + 0.114 * b).astype(np.uint8)


def match_sift(source: np.ndarray, target: np.ndarray, max_matches: int):
    """OpenCV SIFT with Lowe ratio matching; works fully offline."""
    import cv2

    sift = cv2.SIFT_create()
    ks, ds = sift.detectAndCompute(_to_gray_u8(source), None)
    kt, dt = sift.detectAndCompute(_to_gray_u8(target), None)
    if ds is None or dt is None or len(ks) < 2 or len(kt) < 2:
        return (np.zeros((0, 2)),) * 2 + (np.zeros(0),)
    matcher = cv2.BFMatcher(cv2.NORM_L2)
    raw = matcher.knnMatch(ds, dt, k=2)
    good = [m for m, n in raw if m.distance < 0.75 * n.distance]
    good.sort(key=lambda m: m.distance)
    good = good[:max_matches]
    if not good:
        return (np.zeros((0, 2)),) * 2 + (np.zeros(0),)
    src = np.array([ks[m.queryIdx].pt for m in good], dtype=np.float64)
    tgt = np.array([kt[m.trainIdx].pt for m in good], dtype=np.float64)
    dist = np.array([m.distance for m in good], dtype=np.float64)
    scores = 1.0 - dist / (dist.max() + 1e-12)
    return src, tgt, np.clip(scores, 0.0, 1.0)


def match_xfeat(source: np.ndarray, target: np.ndarray, max_matches: int):
    """Learned matcher via torch.hub (needs the pretrained weights).

    Raises ModelUnavailable when torch or the weights cannot be loaded, e.g.
    without network access and an empty hub cache.
    """
    try:
        import torch
    except ImportError as exc:
        raise ModelUnavailable("torch is not installed") from exc
    try:
        model = torch.hub.load("verlab/accelerated_features", "XFeat",
                               pretrained=True, top_k=max(max_matches, 2048))
    except Exception as exc:
        raise ModelUnavailable(f"cannot load pretrained weights: {exc}") from exc

    def tensor_of(img: np.ndarray):
        arr = img if img.ndim == 3 else np.repeat(img[:, :, None], 3, axis=2)
        return torch.from_numpy(arr.astype(np.float32)).permute(2, 0, 1)[None] / 255.0

    with torch.inference_mode():
        p0, p1 = model.match_xfeat(tensor_of(source), tensor_of(target))
    src = np.asarray(p0, dtype=np.float64)[:max_matches]
    tgt = np.asarray(p1, dtype=np.float64)[:max_matches]
    scores = np.ones(src.shape[0], dtype=np.float64)
    return src, tgt, scores


BACKENDS = {"sift": match_sift, "xfeat": match_xfeat}


def run_backend(name: str, source: np.ndarray, target: np.ndarray, max_matches: int):
    """Resolve 'auto' to the learned matcher when available, else SIFT."""
    if name == "auto":
        try:
            return match_xfeat(source, target, max_matches), "xfeat"
        except ModelUnavailable:
            return match_sift(source, target, max_matches), "sift"
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from auto, sift, xfeat")
    return BACKENDS[name](source, target, max_matches), name
