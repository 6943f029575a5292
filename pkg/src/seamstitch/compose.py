"""Anchor-based partitioning and the final blended assembly."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import AllSegmentsInvalid, CoverageHole, NoAnchors
from .chain import KeypointChain
from .imgio import to_gray
from .kernels import gaussian_blur, largest_true_rect
from .render import Canvas


class SliceOwner(Enum):
    SOURCE_ONLY = "source"
    TARGET_ONLY = "target"
    BLEND = "blend"


@dataclass
class SegmentPair:
    a: np.ndarray
    b: np.ndarray
    a2: np.ndarray
    b2: np.ndarray
    valid: bool


@dataclass
class PartitionPlan:
    boundaries: np.ndarray       # strictly increasing anchor x coordinates
    ownership: list[SliceOwner]  # one entry per slice (len(boundaries) + 1)

    @property
    def slice_count(self) -> int:
        return len(self.boundaries) + 1


def segment_direction_valid(ax: float, bx: float, a2x: float, b2x: float) -> bool:
    """Consecutive anchors must step the same horizontal way in both images."""
    return (ax > bx and a2x > b2x) or (ax < bx and a2x < b2x)


def validate_segments(chain: KeypointChain):
    """Drop later anchors until every consecutive pair steps consistently.

    Returns (kept_chain, segments); raises AllSegmentsInvalid when fewer than
    two anchors survive.
    """
    n = len(chain)
    if n < 2:
        raise AllSegmentsInvalid("chain has fewer than two anchors")
    kept = [0]
    segments = []
    for j in range(1, n):
        i = kept[-1]
        ok = segment_direction_valid(
            chain.src_points[i, 0], chain.src_points[j, 0],
            chain.tgt_points[i, 0], chain.tgt_points[j, 0],
        )
        segments.append(
            SegmentPair(chain.src_points[i], chain.src_points[j],
                        chain.tgt_points[i], chain.tgt_points[j], ok)
        )
        if ok:
            kept.append(j)
    if len(kept) < 2:
        raise AllSegmentsInvalid("directional validation rejected every segment")
    sel = np.array(kept)
    out = KeypointChain(
        chain.src_points[sel].copy(), chain.tgt_points[sel].copy(),
        chain.intensities[sel].copy(), chain.fallback,
    )
    return out, segments


def _slice_columns(boundaries: np.ndarray, width: int):
    """Half-open column ranges [start, end) for each of the n+1 slices."""
    edges = [0] + [int(np.ceil(b)) for b in boundaries] + [width]
    edges = [min(max(e, 0), width) for e in edges]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def _column_runs(band: np.ndarray):
    """Contiguous [start, end) runs of set columns."""
    idx = np.flatnonzero(band)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks] + 1, [idx[-1] + 1]])
    return list(zip(starts.tolist(), ends.tolist()))


def partition_slices(chain: KeypointChain, canvas: Canvas) -> PartitionPlan:
    """Vertical slices at anchor x positions with coverage-based ownership."""
    if len(chain) < 1:
        raise NoAnchors("chain carries no anchors")
    boundaries = np.unique(chain.src_points[:, 0])
    width = canvas.frame.width
    src_a = canvas.source_layer[:, :, 3] > 0
    tgt_a = canvas.target_layer[:, :, 3] > 0
    ownership = []
    for c0, c1 in _slice_columns(boundaries, width):
        has_src = bool(src_a[:, c0:c1].any())
        has_tgt = bool(tgt_a[:, c0:c1].any())
        if has_src and has_tgt:
            ownership.append(SliceOwner.BLEND)
        elif has_src:
            ownership.append(SliceOwner.SOURCE_ONLY)
        else:
            ownership.append(SliceOwner.TARGET_ONLY)
    return PartitionPlan(boundaries, ownership)


def _leading_layer(plan: PartitionPlan, src_a: np.ndarray, tgt_a: np.ndarray) -> SliceOwner:
    """Layer that exclusively covers ground left of the first boundary."""
    c1 = int(np.ceil(plan.boundaries[0])) if len(plan.boundaries) else src_a.shape[1]
    src_only = int((src_a[:, :c1] & ~tgt_a[:, :c1]).sum())
    tgt_only = int((tgt_a[:, :c1] & ~src_a[:, :c1]).sum())
    if src_only == tgt_only:
        src_only = int((src_a & ~tgt_a).sum())
        tgt_only = int((tgt_a & ~src_a).sum())
    return SliceOwner.SOURCE_ONLY if src_only >= tgt_only else SliceOwner.TARGET_ONLY


def _source_weights(plan: PartitionPlan, canvas: Canvas) -> np.ndarray:
    """Per-pixel source weight on dual-coverage ground; linear per Blend slice."""
    h, w = canvas.frame.height, canvas.frame.width
    src_a = canvas.source_layer[:, :, 3] > 0
    tgt_a = canvas.target_layer[:, :, 3] > 0
    weights = np.zeros((h, w), dtype=np.float64)
    weights[src_a & ~tgt_a] = 1.0

    lead = _leading_layer(plan, src_a, tgt_a)
    cols = _slice_columns(plan.boundaries, w)
    bounds = [0.0] + [float(b) for b in plan.boundaries] + [float(w)]
    prev_exclusive = lead
    prev_was_blend = False
    for k, ((c0, c1), owner) in enumerate(zip(cols, plan.ownership)):
        if c1 <= c0:
            continue  # zero-width slice: no columns, no say in alternation
        if owner is not SliceOwner.BLEND:
            prev_exclusive = owner
            prev_was_blend = False
            continue
        if prev_was_blend:
            lead = (SliceOwner.TARGET_ONLY if lead is SliceOwner.SOURCE_ONLY
                    else SliceOwner.SOURCE_ONLY)
        else:
            lead = prev_exclusive
        prev_was_blend = True
        lo, hi = bounds[k], bounds[k + 1]
        ramp = 1.0 - (np.arange(c0, c1, dtype=np.float64) - lo) / (hi - lo)
        ramp = np.clip(ramp, 0.0, 1.0)
        w_src = ramp if lead is SliceOwner.SOURCE_ONLY else 1.0 - ramp
        block = np.broadcast_to(w_src, (h, c1 - c0))
        dual = src_a[:, c0:c1] & tgt_a[:, c0:c1]
        weights[:, c0:c1] = np.where(dual, block, weights[:, c0:c1])
    return weights


def blend_and_assemble(canvas: Canvas, plan: PartitionPlan,
                       seam_sigma: float = 2.0, seam_band: int = 8,
                       disagreement_scale: float = 8.0):
    """Composite both layers, smooth genuine seams, crop to full coverage.

    The seam-band Gaussian is modulated by the local disagreement between the
    two layers so perfectly consistent content passes through untouched.
    Returns (rgb_uint8, crop_rect) with crop_rect = (x0, y0, x1, y1).
    """
    src = canvas.source_layer[:, :, :3].astype(np.float64)
    tgt = canvas.target_layer[:, :, :3].astype(np.float64)
    src_a = canvas.source_layer[:, :, 3] > 0
    tgt_a = canvas.target_layer[:, :, 3] > 0
    cov = src_a | tgt_a
    if not cov.any():
        raise CoverageHole("no coverage from either layer")

    w_src = _source_weights(plan, canvas)
    out = w_src[:, :, None] * src + (1.0 - w_src[:, :, None]) * tgt
    out[~cov] = 0.0

    if seam_sigma > 0 and seam_band > 0 and len(plan.boundaries):
        xs = np.arange(canvas.frame.width, dtype=np.float64)
        band = np.zeros(canvas.frame.width, dtype=bool)
        for b in plan.boundaries:
            band |= np.abs(xs - b) <= seam_band
        dual = src_a & tgt_a
        diff = np.zeros(dual.shape, dtype=np.float64)
        diff[dual] = np.abs(to_gray(canvas.source_layer[:, :, :3])
                            - to_gray(canvas.target_layer[:, :, :3]))[dual]
        # blur only padded band strips; band columns sit at least one kernel
        # radius from every strip edge, so values match a full-image blur.
        # normalized convolution keeps zeroed uncovered pixels from bleeding
        # darkness into the band, and all strips read the pristine composite
        radius = max(1, int(np.ceil(3.0 * seam_sigma)))
        updates = []
        for c0, c1 in _column_runs(band):
            p0 = max(0, c0 - radius)
            p1 = min(canvas.frame.width, c1 + radius)
            s0, s1 = c0 - p0, c0 - p0 + (c1 - c0)
            strength = np.clip(
                gaussian_blur(diff[:, p0:p1], seam_sigma)[:, s0:s1]
                / disagreement_scale, 0.0, 1.0)
            strength *= cov[:, c0:c1]
            if not strength.any():
                continue
            cov_strip = cov[:, p0:p1].astype(np.float64)
            norm = np.maximum(gaussian_blur(cov_strip, seam_sigma)[:, s0:s1], 1e-9)
            blurred = np.stack(
                [gaussian_blur(out[:, p0:p1, c] * cov_strip, seam_sigma)[:, s0:s1] / norm
                 for c in range(3)], axis=2)
            strip = out[:, c0:c1]
            updates.append((c0, c1, strip + strength[:, :, None] * (blurred - strip)))
        for c0, c1, value in updates:
            out[:, c0:c1] = value

    rect = largest_true_rect(cov)
    if rect is None:
        raise CoverageHole("coverage admits no full rectangle")
    x0, y0, x1, y1 = rect
    cropped = out[y0:y1, x0:x1]
    if not cov[y0:y1, x0:x1].all():
        raise CoverageHole("crop still contains uncovered pixels")
    return np.clip(np.round(cropped), 0, 255).astype(np.uint8), (x0, y0, x1, y1)
