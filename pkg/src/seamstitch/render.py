"""Canvas assembly inputs: warped source, pasted target, match transport."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OffsetOutOfFrame
from .field import CanvasFrame
from .geometry import apply_affine, image_corners, invert_affine
from .kernels import bilinear_warp, bilinear_warp_numpy


@dataclass
class Canvas:
    frame: CanvasFrame
    source_layer: np.ndarray     # (H, W, 4) uint8, binary alpha
    target_layer: np.ndarray


def compute_canvas_frame(a_glob: np.ndarray, source_dims, target_dims) -> CanvasFrame:
    """Bbox of the target frame and projected source corners, integer offset."""
    sw, sh = source_dims
    tw, th = target_dims
    pts = np.vstack([apply_affine(a_glob, image_corners(sw, sh)), image_corners(tw, th)])
    # snap away sub-1e-6 roundoff so near-identity motions keep a tight frame
    min_x = math.floor(round(pts[:, 0].min(), 6))
    min_y = math.floor(round(pts[:, 1].min(), 6))
    max_x = math.ceil(round(pts[:, 0].max(), 6))
    max_y = math.ceil(round(pts[:, 1].max(), 6))
    return CanvasFrame(width=max_x - min_x, height=max_y - min_y,
                       offset=(float(-min_x), float(-min_y)))


def warp_source(source: np.ndarray, a_glob: np.ndarray, guarded_field: np.ndarray,
                frame: CanvasFrame) -> np.ndarray:
    """Backward-warp the source onto the canvas with bilinear sampling.

    Sample coordinate per canvas pixel u: inv(A_glob) (u - o) + field(u).
    Pixels whose bilinear footprint leaves the source get alpha 0.
    """
    if guarded_field.shape[:2] != (frame.height, frame.width):
        raise ValueError("field dims do not match the canvas frame")
    ox, oy = frame.offset
    a_inv = invert_affine(a_glob)
    xs = np.arange(frame.width, dtype=np.float64) - ox
    ys = np.arange(frame.height, dtype=np.float64) - oy
    px, py = np.meshgrid(xs, ys)
    qx = a_inv[0, 0] * px + a_inv[0, 1] * py + a_inv[0, 2] + guarded_field[:, :, 0]
    qy = a_inv[1, 0] * px + a_inv[1, 1] * py + a_inv[1, 2] + guarded_field[:, :, 1]
    val, inside = bilinear_warp(source, qx, qy)
    out = np.zeros((frame.height, frame.width, 4), dtype=np.uint8)
    out[:, :, :3] = np.clip(np.round(val), 0, 255).astype(np.uint8)
    out[:, :, :3][~inside] = 0
    out[:, :, 3] = np.where(inside, 255, 0).astype(np.uint8)
    return out


def paste_target(target: np.ndarray, frame: CanvasFrame) -> np.ndarray:
    """Copy the target verbatim at the integer-rounded canvas offset."""
    ox = int(round(frame.offset[0]))
    oy = int(round(frame.offset[1]))
    th, tw = target.shape[:2]
    if ox < 0 or oy < 0 or ox + tw > frame.width or oy + th > frame.height:
        raise OffsetOutOfFrame(
            f"target {tw}x{th} at offset ({ox},{oy}) exceeds canvas "
            f"{frame.width}x{frame.height}"
        )
    out = np.zeros((frame.height, frame.width, 4), dtype=np.uint8)
    out[oy:oy + th, ox:ox + tw, :3] = target[:, :, :3]
    out[oy:oy + th, ox:ox + tw, 3] = 255
    return out


def sample_field(field: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Bilinear field samples at canvas points, edge-clamped."""
    h, w = field.shape[:2]
    qx = np.clip(pts[:, 0], 0.0, w - 1.0)
    qy = np.clip(pts[:, 1], 0.0, h - 1.0)
    out = np.empty_like(pts)
    for k in range(2):
        val, _ = bilinear_warp_numpy(field[:, :, k], qx, qy)
        out[:, k] = val
    return out


def transform_match_points(src_pts: np.ndarray, tgt_pts: np.ndarray,
                           a_glob: np.ndarray, guarded_field: np.ndarray,
                           frame: CanvasFrame, tol: float = 0.01,
                           max_iter: int = 20, damping: float = 0.8):
    """Transport matches to canvas coordinates.

    Target points translate by the offset. Source points solve the inverse
    of the sampling map by damped fixed-point iteration; points that do not
    reach ``tol`` within ``max_iter`` are dropped and counted.

    Returns (canvas_src, canvas_tgt, kept_indices, n_excluded).
    """
    ox, oy = frame.offset
    off = np.array([ox, oy])
    canvas_tgt = tgt_pts + off

    a_inv = invert_affine(a_glob)
    u = apply_affine(a_glob, src_pts) + off
    converged = np.zeros(src_pts.shape[0], dtype=bool)
    for _ in range(max_iter):
        pt = u - off
        base = np.column_stack([
            a_inv[0, 0] * pt[:, 0] + a_inv[0, 1] * pt[:, 1] + a_inv[0, 2],
            a_inv[1, 0] * pt[:, 0] + a_inv[1, 1] * pt[:, 1] + a_inv[1, 2],
        ])
        residual = base + sample_field(guarded_field, u) - src_pts
        err = np.sqrt(np.sum(residual * residual, axis=1))
        converged = err < tol
        if converged.all():
            break
        active = ~converged
        u[active] -= damping * residual[active]

    kept = np.flatnonzero(converged)
    return u[kept], canvas_tgt[kept], kept, int(src_pts.shape[0] - kept.size)
