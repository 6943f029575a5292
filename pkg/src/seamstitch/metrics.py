"""Alignment quality over the overlap region: PSNR and SSIM."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_erosion

from .errors import EmptyMask, MaskTooSmall
from .kernels import gaussian_blur

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0


@dataclass
class OverlapReport:
    psnr_db: float
    ssim: float
    overlap_pixels: int

    def as_dict(self) -> dict:
        return {
            "psnr_db": self.psnr_db,
            "ssim": self.ssim,
            "overlap_pixels": self.overlap_pixels,
        }


def psnr_overlap(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float:
    """10 log10(255^2 / MSE) over masked pixels; +inf for identical content."""
    if a.shape != b.shape:
        raise ValueError("images differ in shape")
    if not mask.any():
        raise EmptyMask("empty evaluation mask")
    da = a[mask].astype(np.float64)
    db = b[mask].astype(np.float64)
    mse = float(np.mean((da - db) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(DYNAMIC_RANGE * DYNAMIC_RANGE / mse)


def _ssim_map(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Local SSIM with the standard Gaussian window (biased covariances)."""
    radius = (SSIM_WINDOW - 1) // 2
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2

    def filt(img):
        return gaussian_blur(img, SSIM_SIGMA, radius=radius)

    mu_a = filt(a)
    mu_b = filt(b)
    var_a = filt(a * a) - mu_a * mu_a
    var_b = filt(b * b) - mu_b * mu_b
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim_overlap(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float:
    """Mean local SSIM over window centers whose window fits in the mask."""
    if a.shape != b.shape:
        raise ValueError("images differ in shape")
    valid = binary_erosion(mask, structure=np.ones((SSIM_WINDOW, SSIM_WINDOW)),
                           border_value=0)
    if not valid.any():
        raise MaskTooSmall("masked region smaller than the SSIM window")
    # every window at a valid center lies inside the mask, so cropping to the
    # padded mask bbox leaves the statistics unchanged
    ys, xs = np.nonzero(mask)
    r = (SSIM_WINDOW - 1) // 2
    y0 = max(0, ys.min() - r)
    y1 = min(mask.shape[0], ys.max() + r + 1)
    x0 = max(0, xs.min() - r)
    x1 = min(mask.shape[1], xs.max() + r + 1)
    valid = valid[y0:y1, x0:x1]
    fa = a[y0:y1, x0:x1].astype(np.float64)
    fb = b[y0:y1, x0:x1].astype(np.float64)
    if fa.ndim == 2:
        fa = fa[:, :, None]
        fb = fb[:, :, None]
    vals = [float(np.mean(_ssim_map(fa[:, :, c], fb[:, :, c])[valid]))
            for c in range(fa.shape[2])]
    return float(np.mean(vals))


def overlap_report(src_layer: np.ndarray, tgt_layer: np.ndarray) -> OverlapReport:
    """Metrics between the warped source and pasted target where both cover."""
    mask = (src_layer[:, :, 3] > 0) & (tgt_layer[:, :, 3] > 0)
    if not mask.any():
        raise EmptyMask("layers do not overlap")
    a = src_layer[:, :, :3]
    b = tgt_layer[:, :, :3]
    mask3 = np.repeat(mask[:, :, None], 3, axis=2)
    psnr = psnr_overlap(a, b, mask3)
    try:
        ssim = ssim_overlap(a, b, mask)
    except MaskTooSmall:
        ssim = math.nan
    return OverlapReport(psnr, ssim, int(mask.sum()))
