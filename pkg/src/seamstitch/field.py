"""Confidence-weighted displacement lattice, dual-channel gate, guarded field.

The lattice holds source-space displacements of the inverse sampling map:
for canvas point u with target coordinate p_t = u - o, the warped source is
sampled at inv(A_glob) p_t + disp(u). Local fits contribute displacements
inv(T_j) p_t - inv(A_glob) p_t blended by confidence-weighted Gaussians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import (
    DimensionMismatch,
    EmptyOverlap,
    LatticeTooSmall,
    SingularTransform,
)
from .geometry import invert_affine
from .kernels import bicubic_upsample, gaussian_blur
from .localwarp import GridCell, LocalFit


@dataclass(frozen=True)
class FieldConfig:
    nx: int = 64
    ny: int = 64
    alpha_f: float = 0.75        # sigma_f = alpha_f * mean surviving-cell diagonal
    d_max: float = 48.0
    sigma_l: float = 1.0         # lattice-units blur before upsampling
    rho: float = 0.02            # ramp bandwidth = rho * image diagonal
    sigma_d: float = 25.0
    gamma_p: float = 1.5
    gamma_min: float = 0.15
    sigma_g: float = 3.0
    blur_guarded: bool = True    # final blur of the gated field


@dataclass(frozen=True)
class CanvasFrame:
    width: int
    height: int
    offset: tuple[float, float]  # adds to target coords to give canvas coords


@dataclass
class DeformationLattice:
    disp: np.ndarray             # (ny, nx, 2) source-space displacements
    frame: CanvasFrame

    @property
    def nx(self) -> int:
        return self.disp.shape[1]

    @property
    def ny(self) -> int:
        return self.disp.shape[0]


def smootherstep(t):
    """Quintic step 6t^5 - 15t^4 + 10t^3 with inputs clamped to [0, 1].

    Evaluated in float64; the output is clipped to [0, 1], the exact range of
    the clamped polynomial, to absorb roundoff near t = 1.
    """
    x = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    out = np.clip(x * x * x * (x * (x * 6.0 - 15.0) + 10.0), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def _lattice_axes(frame: CanvasFrame, nx: int, ny: int):
    lx = np.linspace(0.0, frame.width - 1.0, nx)
    ly = np.linspace(0.0, frame.height - 1.0, ny)
    return lx, ly


def blend_displacement_lattice(fits: list[LocalFit], cells: list[GridCell],
                               a_glob: np.ndarray, frame: CanvasFrame,
                               cfg: FieldConfig) -> DeformationLattice:
    """Normalized confidence-weighted blend of per-cell displacements."""
    if not fits:
        raise ValueError("need at least one local fit")
    if len(fits) != len(cells):
        raise DimensionMismatch("fits and cells differ in length")

    lx, ly = _lattice_axes(frame, cfg.nx, cfg.ny)
    gx, gy = np.meshgrid(lx, ly)
    ox, oy = frame.offset
    pt = np.column_stack([(gx - ox).ravel(), (gy - oy).ravel()])   # (L, 2)
    ones = np.ones((pt.shape[0], 1))
    pth = np.hstack([pt, ones])

    a_inv = invert_affine(a_glob)
    base = pth @ a_inv[:2, :].T

    sigma_f = cfg.alpha_f * float(np.mean([c.diag for c in cells]))
    weights = np.empty((pt.shape[0], len(fits)))
    disps = np.empty((pt.shape[0], len(fits), 2))
    for j, (fit, cell) in enumerate(zip(fits, cells)):
        try:
            t_inv = invert_affine(fit.transform)
        except SingularTransform as exc:
            raise SingularTransform(f"cell {cell.index} transform not invertible") from exc
        disps[:, j, :] = pth @ t_inv[:2, :].T - base
        d2 = np.sum((pt - cell.centroid) ** 2, axis=1)
        weights[:, j] = fit.conf * np.exp(-d2 / (2.0 * sigma_f * sigma_f))

    denom = weights.sum(axis=1)
    safe = denom > 1e-12
    out = np.zeros((pt.shape[0], 2))
    out[safe] = (
        np.einsum("lj,ljk->lk", weights[safe], disps[safe]) / denom[safe, None]
    )
    return DeformationLattice(out.reshape(cfg.ny, cfg.nx, 2), frame)


def regularize_lattice(lat: DeformationLattice, cfg: FieldConfig) -> np.ndarray:
    """Clip to +-d_max, blur (sigma_l, lattice units), bicubic upsample."""
    if lat.ny < 4 or lat.nx < 4:
        raise LatticeTooSmall(f"lattice {lat.ny}x{lat.nx} below bicubic support")
    h, w = lat.frame.height, lat.frame.width
    out = np.empty((h, w, 2), dtype=np.float32)
    for k in range(2):
        chan = np.clip(lat.disp[:, :, k], -cfg.d_max, cfg.d_max)
        chan = gaussian_blur(chan, cfg.sigma_l)
        out[:, :, k] = bicubic_upsample(chan, h, w).astype(np.float32)
    return out


def signed_distance(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean signed distance, positive inside the mask."""
    inside = distance_transform_edt(mask)
    outside = distance_transform_edt(~mask)
    return (inside - outside).astype(np.float64)


def build_ramp(overlap_mask: np.ndarray, image_diag: float, cfg: FieldConfig) -> np.ndarray:
    """Smootherstepped signed-distance ramp of the overlap region."""
    if not overlap_mask.any():
        raise EmptyOverlap("overlap mask has no set pixels")
    b = cfg.rho * image_diag
    d = signed_distance(overlap_mask)
    return smootherstep(d / b).astype(np.float32)


def build_density_map(points: np.ndarray, frame: CanvasFrame, cfg: FieldConfig) -> np.ndarray:
    """Max-normalized Gaussian heatmap of inlier locations on the canvas."""
    h, w = frame.height, frame.width
    acc = np.zeros((h, w), dtype=np.float64)
    if points.shape[0]:
        xi = np.round(points[:, 0]).astype(np.int64)
        yi = np.round(points[:, 1]).astype(np.int64)
        ok = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        np.add.at(acc, (yi[ok], xi[ok]), 1.0)
    if acc.any():
        acc = gaussian_blur(acc, cfg.sigma_d)
        acc /= acc.max()
    return acc.astype(np.float32)


def build_gate(ramp: np.ndarray, density: np.ndarray, cfg: FieldConfig) -> np.ndarray:
    """Geometric falloff times density-aware modulation, in [0, 1]."""
    if ramp.shape != density.shape:
        raise DimensionMismatch(f"ramp {ramp.shape} vs density {density.shape}")
    geometric = smootherstep(ramp) ** cfg.gamma_p
    modulation = cfg.gamma_min + (1.0 - cfg.gamma_min) * smootherstep(density)
    return (geometric * modulation).astype(np.float32)


def gate_field(disp: np.ndarray, gate: np.ndarray, cfg: FieldConfig) -> np.ndarray:
    """Per-pixel gate multiply, then the guarded-field blur (sigma_g)."""
    if disp.shape[:2] != gate.shape:
        raise DimensionMismatch(f"field {disp.shape[:2]} vs gate {gate.shape}")
    out = np.empty_like(disp, dtype=np.float32)
    for k in range(2):
        gated = disp[:, :, k].astype(np.float64) * gate
        if cfg.blur_guarded and cfg.sigma_g > 0:
            gated = gaussian_blur(gated, cfg.sigma_g)
        out[:, :, k] = gated.astype(np.float32)
    return out


def mean_cell_diag(cells: list[GridCell]) -> float:
    return float(np.mean([c.diag for c in cells]))


def image_diagonal(dims: tuple[int, int]) -> float:
    return math.hypot(dims[0], dims[1])
