"""Keypoint-chain refinement: the ordered, unique-x anchors of the seam."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChainTooShort
from .kernels import bilinear_sample_points


@dataclass
class KeypointChain:
    src_points: np.ndarray       # (N, 2) canvas coords, strictly increasing x
    tgt_points: np.ndarray
    intensities: np.ndarray      # grayscale at each source sample
    fallback: bool = False       # True when the zone midline stood in

    def __len__(self) -> int:
        return int(self.src_points.shape[0])


def refine_chain(zone_src: np.ndarray, zone_tgt: np.ndarray,
                 source_gray: np.ndarray, target_gray: np.ndarray,
                 brightness_tol: float = 20.0) -> KeypointChain:
    """Brightness-filter zone pairs, then greedily walk them left to right.

    source_gray / target_gray are canvas-resolution grayscale layers so the
    pair coordinates can be sampled directly. The walk starts at the pair
    nearest the zone's left edge and repeatedly jumps to the closest unused
    pair with strictly larger x, which enforces unique horizontal positions.
    """
    n = zone_src.shape[0]
    if n < 2:
        raise ChainTooShort(f"{n} zone pairs, need >= 2")

    i_src = bilinear_sample_points(source_gray, zone_src)
    i_tgt = bilinear_sample_points(target_gray, zone_tgt)
    med = float(np.median(i_src))
    keep = (np.abs(i_src - i_tgt) <= brightness_tol) & (np.abs(i_src - med) <= brightness_tol)
    idx = np.flatnonzero(keep)
    if idx.size < 2:
        raise ChainTooShort(f"{idx.size} pairs survive the brightness filter")

    src = zone_src[idx]
    tgt = zone_tgt[idx]
    inten = i_src[idx]

    used = np.zeros(idx.size, dtype=bool)
    cur = int(np.argmin(src[:, 0]))
    order = [cur]
    used[cur] = True
    while True:
        ahead = np.flatnonzero(~used & (src[:, 0] > src[cur, 0]))
        if ahead.size == 0:
            break
        d2 = np.sum((src[ahead] - src[cur]) ** 2, axis=1)
        cur = int(ahead[np.argmin(d2)])
        order.append(cur)
        used[cur] = True

    if len(order) < 2:
        raise ChainTooShort("walk kept a single anchor")
    sel = np.array(order)
    return KeypointChain(src[sel].copy(), tgt[sel].copy(), inten[sel].copy())


def midline_chain(zone: tuple[float, float], frame_height: int) -> KeypointChain:
    """Two-point vertical fallback at the zone midline."""
    mid = 0.5 * (zone[0] + zone[1])
    pts = np.array([[mid, 0.0], [mid, float(frame_height - 1)]])
    return KeypointChain(pts.copy(), pts.copy(), np.zeros(2), fallback=True)


def stitching_line(chain: KeypointChain) -> np.ndarray:
    """The seam polyline: the chain's source points in walk order."""
    return chain.src_points.copy()
