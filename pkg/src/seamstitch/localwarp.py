"""Overlap gridding and per-cell local affine refinement.

Each surviving grid cell gets a local affine fitted by ridge regression
biased toward the global transform, a spatial confidence score from the
weight mass of its supporting matches, and stability diagnostics that decide
whether a stronger-regularization refit is kept instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoOverlap, NumericalFailure
from .geometry import (
    apply_affine,
    clip_polygon,
    image_corners,
    mask_centroid,
    rasterize_polygon_mask,
)


@dataclass(frozen=True)
class WarpConfig:
    grid_x: int = 8
    grid_y: int = 8
    lambda1: float = 1e-3        # per-support-match ridge weight, floor lambda1
    lambda2: float = 1e-1
    alpha: float = 0.5           # sigma_j = alpha * cell diagonal
    beta: float = 4.0
    kappa_min: float = 0.05
    kappa_max: float = 1.0
    omega_cond: float = 1e-3
    omega_det: float = 10.0
    omega_delta: float = 0.1
    tau_det: float = 0.2
    eval_grid: int = 5
    cond_max: float = 20.0
    rmse_max: float = 5.0
    det_min: float = 0.2
    delta_max: float = 24.0

    def __post_init__(self):
        if self.lambda1 >= self.lambda2:
            raise ValueError("lambda1 must be < lambda2")
        if not self.kappa_min < self.kappa_max:
            raise ValueError("kappa_min must be < kappa_max")


@dataclass
class GridCell:
    index: tuple[int, int]       # (col, row)
    mask: np.ndarray             # boolean raster cropped to the cell's pixels
    mask_origin: tuple[int, int]  # frame position (x, y) of mask[0, 0]
    centroid: np.ndarray         # (x, y), frame coordinates
    bbox: tuple[float, float, float, float]   # (x0, x1, y0, y1)
    diag: float


@dataclass
class Diagnostics:
    rmse: float
    det: float
    cond: float
    delta_mean: float
    composite_score: float


@dataclass
class LocalFit:
    transform: np.ndarray
    conf: float
    diagnostics: Diagnostics
    chosen_lambda: float


@dataclass
class OverlapGrid:
    mask: np.ndarray             # overlap raster at target resolution
    cells: list[GridCell]
    polygon: np.ndarray
    origin: tuple[float, float]  # bbox min corner (bx0, by0)
    cell_size: tuple[float, float]
    dims: tuple[int, int]        # (grid_x, grid_y)


def build_overlap_grid(a_glob: np.ndarray, source_dims, target_dims,
                       cfg: WarpConfig) -> OverlapGrid:
    """Project the source frame, clip to target bounds, grid the overlap."""
    sw, sh = source_dims
    tw, th = target_dims
    projected = apply_affine(a_glob, image_corners(sw, sh))
    poly = clip_polygon(projected, (0.0, 0.0, float(tw), float(th)))
    if len(poly) == 0:
        raise NoOverlap("projected source does not intersect the target frame")
    mask = rasterize_polygon_mask(poly, tw, th)
    if not mask.any():
        raise NoOverlap("overlap polygon rasterizes to an empty mask")

    bx0, by0 = poly.min(axis=0)
    bx1, by1 = poly.max(axis=0)
    cw = (bx1 - bx0) / cfg.grid_x
    ch = (by1 - by0) / cfg.grid_y
    if cw <= 0 or ch <= 0:
        raise NoOverlap("degenerate overlap bounding box")

    ys, xs = np.nonzero(mask)
    cx = xs + 0.5
    cy = ys + 0.5
    cols = np.clip(np.floor((cx - bx0) / cw), 0, cfg.grid_x - 1).astype(np.int64)
    rows = np.clip(np.floor((cy - by0) / ch), 0, cfg.grid_y - 1).astype(np.int64)

    diag = math.hypot(cw, ch)
    cells = []
    for row in range(cfg.grid_y):
        for col in range(cfg.grid_x):
            sel = (cols == col) & (rows == row)
            if not sel.any():
                continue
            cx_px = xs[sel]
            cy_px = ys[sel]
            x_min, y_min = int(cx_px.min()), int(cy_px.min())
            crop = np.zeros((int(cy_px.max()) - y_min + 1,
                             int(cx_px.max()) - x_min + 1), dtype=bool)
            crop[cy_px - y_min, cx_px - x_min] = True
            centroid = mask_centroid(crop) + np.array([x_min, y_min])
            cells.append(
                GridCell(
                    index=(col, row),
                    mask=crop,
                    mask_origin=(x_min, y_min),
                    centroid=centroid,
                    bbox=(bx0 + col * cw, bx0 + (col + 1) * cw,
                          by0 + row * ch, by0 + (row + 1) * ch),
                    diag=diag,
                )
            )
    return OverlapGrid(mask, cells, poly, (float(bx0), float(by0)), (cw, ch),
                       (cfg.grid_x, cfg.grid_y))


def support_indices(grid: OverlapGrid, tgt_pts: np.ndarray) -> dict:
    """Match indices supporting each cell: target point in cell or 8 neighbors."""
    bx0, by0 = grid.origin
    cw, ch = grid.cell_size
    cols = np.floor((tgt_pts[:, 0] - bx0) / cw).astype(np.int64)
    rows = np.floor((tgt_pts[:, 1] - by0) / ch).astype(np.int64)
    out = {}
    for cell in grid.cells:
        c, r = cell.index
        near = (np.abs(cols - c) <= 1) & (np.abs(rows - r) <= 1)
        out[cell.index] = np.flatnonzero(near)
    return out


def fit_local_affine(src_pts: np.ndarray, tgt_pts: np.ndarray,
                     a_glob: np.ndarray, lam: float) -> np.ndarray:
    """Ridge fit of a local affine biased toward the global transform.

    Minimizes sum ||T p_s - p_t||^2 + lam * ||T - A_glob||_F^2 over the six
    affine parameters; with no matches the solution is A_glob exactly.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    n = src_pts.shape[0]
    if n == 0:
        return a_glob.copy()
    phi = np.hstack([src_pts, np.ones((n, 1))])
    m = phi.T @ phi + lam * np.eye(3)
    t = np.eye(3, dtype=np.float64)
    for k in range(2):
        rhs = phi.T @ tgt_pts[:, k] + lam * a_glob[k, :]
        try:
            t[k, :] = np.linalg.solve(m, rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - SPD for lam>0
            raise NumericalFailure("ridge normal equations singular") from exc
    return t


def confidence_score(cell: GridCell, tgt_support: np.ndarray, cfg: WarpConfig) -> float:
    """Clamped weight-mass confidence of a cell's supporting matches."""
    if tgt_support.shape[0] == 0:
        return cfg.kappa_min
    sigma = cfg.alpha * cell.diag
    d2 = np.sum((tgt_support - cell.centroid) ** 2, axis=1)
    w = np.exp(-d2 / (2.0 * sigma * sigma))
    raw = float(w.sum() / (cfg.beta * w.max()))
    return float(min(cfg.kappa_max, max(cfg.kappa_min, raw)))


def diagnose_transform(t: np.ndarray, a_glob: np.ndarray, src_pts: np.ndarray,
                       tgt_pts: np.ndarray, cell: GridCell, cfg: WarpConfig) -> Diagnostics:
    """Stability metrics and the composite instability score (lower = stabler)."""
    if src_pts.shape[0]:
        res = apply_affine(t, src_pts) - tgt_pts
        rmse = float(np.sqrt(np.mean(np.sum(res * res, axis=1))))
    else:
        rmse = 0.0
    lin = t[:2, :2]
    det = float(lin[0, 0] * lin[1, 1] - lin[0, 1] * lin[1, 0])
    sv = np.linalg.svd(lin, compute_uv=False)
    cond = float(sv[0] / sv[1]) if sv[1] > 1e-15 else math.inf
    x0, x1, y0, y1 = cell.bbox
    gx, gy = np.meshgrid(np.linspace(x0, x1, cfg.eval_grid),
                         np.linspace(y0, y1, cfg.eval_grid))
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    delta = apply_affine(t, pts) - apply_affine(a_glob, pts)
    delta_mean = float(np.mean(np.sqrt(np.sum(delta * delta, axis=1))))
    score = (
        rmse
        + cfg.omega_cond * cond
        + cfg.omega_det * max(0.0, cfg.tau_det - abs(det))
        + cfg.omega_delta * delta_mean
    )
    return Diagnostics(rmse, det, cond, delta_mean, score)


def select_cell_transform(cell: GridCell, src_pts: np.ndarray, tgt_pts: np.ndarray,
                          a_glob: np.ndarray, cfg: WarpConfig) -> LocalFit:
    """Fit with lambda1; refit with lambda2 when unstable; keep the lower score."""
    n = src_pts.shape[0]
    lam1 = cfg.lambda1 * max(1, n)
    t1 = fit_local_affine(src_pts, tgt_pts, a_glob, lam1)
    d1 = diagnose_transform(t1, a_glob, src_pts, tgt_pts, cell, cfg)
    conf = confidence_score(cell, tgt_pts, cfg)

    unstable = (
        d1.cond > cfg.cond_max
        or abs(d1.det) < cfg.det_min
        or d1.rmse > cfg.rmse_max
        or d1.delta_mean > cfg.delta_max
    )
    if not unstable:
        return LocalFit(t1, conf, d1, lam1)

    lam2 = cfg.lambda2 * max(1, n)
    t2 = fit_local_affine(src_pts, tgt_pts, a_glob, lam2)
    d2 = diagnose_transform(t2, a_glob, src_pts, tgt_pts, cell, cfg)
    if d2.composite_score < d1.composite_score:
        return LocalFit(t2, conf, d2, lam2)
    return LocalFit(t1, conf, d1, lam1)


def fit_all_cells(grid: OverlapGrid, src_pts: np.ndarray, tgt_pts: np.ndarray,
                  a_glob: np.ndarray, cfg: WarpConfig) -> list[LocalFit]:
    """Per-cell selection over the whole grid, ordered like grid.cells."""
    support = support_indices(grid, tgt_pts)
    fits = []
    for cell in grid.cells:
        idx = support[cell.index]
        fits.append(select_cell_transform(cell, src_pts[idx], tgt_pts[idx], a_glob, cfg))
    return fits
