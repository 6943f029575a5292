"""Hot numeric kernels with two interchangeable backends.

Every kernel here exists twice: a pure-numpy implementation (``*_numpy``)
and, when numba is importable, an ``@njit``-compiled loop version
(``*_numba``). The public names dispatch to one backend, chosen once at
import time:

  * ``SEAMSTITCH_NUMBA=0`` (or ``false`` / ``off``) forces the numpy path;
  * otherwise numba is used whenever it is installed.

Both paths implement identical semantics (clamp-to-edge boundaries,
identical kernel radii) so results agree to floating-point roundoff;
``benchmarks/bench_kernels.py`` times them side by side.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    njit = None
    HAS_NUMBA = False


def _env_wants_numba() -> bool:
    return os.environ.get("SEAMSTITCH_NUMBA", "1").strip().lower() not in ("0", "false", "off")


USE_NUMBA = HAS_NUMBA and _env_wants_numba()
ACTIVE_BACKEND = "numba" if USE_NUMBA else "numpy"


# ----------------------------------------------------------------------
# Gaussian kernels / separable convolution (clamp-to-edge)
# ----------------------------------------------------------------------

def gaussian_kernel1d(sigma: float, radius: int | None = None) -> np.ndarray:
    """Normalized 1-D Gaussian; radius defaults to ceil(3*sigma)."""
    if radius is None:
        radius = max(1, int(math.ceil(3.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _convolve_rows_numpy(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    r = (k.shape[0] - 1) // 2
    pad = np.pad(img, ((0, 0), (r, r)), mode="edge").astype(np.float64)
    out = np.empty(img.shape, dtype=np.float64)
    for y in range(img.shape[0]):
        out[y] = np.convolve(pad[y], k[::-1], mode="valid")
    return out


def convolve_separable_numpy(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    tmp = _convolve_rows_numpy(img, k)
    return _convolve_rows_numpy(tmp.T, k).T


def _convolve_separable_py(img, k, out, tmp):
    h, w = img.shape
    r = (k.shape[0] - 1) // 2
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(k.shape[0]):
                xx = x + i - r
                if xx < 0:
                    xx = 0
                elif xx > w - 1:
                    xx = w - 1
                acc += img[y, xx] * k[i]
            tmp[y, x] = acc
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for i in range(k.shape[0]):
                yy = y + i - r
                if yy < 0:
                    yy = 0
                elif yy > h - 1:
                    yy = h - 1
                acc += tmp[yy, x] * k[i]
            out[y, x] = acc


if USE_NUMBA:
    _convolve_separable_jit = njit(cache=True)(_convolve_separable_py)


def convolve_separable_numba(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    img64 = np.ascontiguousarray(img, dtype=np.float64)
    out = np.empty(img64.shape, dtype=np.float64)
    tmp = np.empty(img64.shape, dtype=np.float64)
    _convolve_separable_jit(img64, np.ascontiguousarray(k, dtype=np.float64), out, tmp)
    return out


# benchmarks/bench_kernels.py: np.convolve wins for wide kernels, the jit
# loop for narrow ones; crossover sits near 40 taps on this workload
_NUMBA_BLUR_MAX_TAPS = 40


def gaussian_blur(img: np.ndarray, sigma: float, radius: int | None = None) -> np.ndarray:
    """Separable Gaussian blur, clamp-to-edge, float64 output."""
    if sigma <= 0:
        return img.astype(np.float64) if img.dtype != np.float64 else img.copy()
    k = gaussian_kernel1d(sigma, radius)
    if USE_NUMBA and k.shape[0] <= _NUMBA_BLUR_MAX_TAPS:
        return convolve_separable_numba(img, k)
    return convolve_separable_numpy(img.astype(np.float64), k)


# ----------------------------------------------------------------------
# Bilinear sampling / warping
# ----------------------------------------------------------------------

_EDGE_EPS = 1e-6  # roundoff tolerance so exact edge hits stay inside


def bilinear_warp_numpy(src: np.ndarray, qx: np.ndarray, qy: np.ndarray):
    """Sample src (H,W) or (H,W,C) at float coords; returns (values, inside).

    A sample is inside only when its full 2x2 bilinear footprint fits in the
    source; hits within _EDGE_EPS of the frame edge count as inside.
    """
    h, w = src.shape[:2]
    inside = (
        (qx >= -_EDGE_EPS) & (qx <= w - 1.0 + _EDGE_EPS)
        & (qy >= -_EDGE_EPS) & (qy <= h - 1.0 + _EDGE_EPS)
    )
    x0 = np.clip(np.floor(qx), 0, w - 2).astype(np.int64)
    y0 = np.clip(np.floor(qy), 0, h - 2).astype(np.int64)
    fx = np.clip(qx - x0, 0.0, 1.0)
    fy = np.clip(qy - y0, 0.0, 1.0)
    s = src.astype(np.float64)
    if s.ndim == 2:
        s = s[:, :, None]
    fx3 = fx[..., None]
    fy3 = fy[..., None]
    val = (
        s[y0, x0] * (1 - fx3) * (1 - fy3)
        + s[y0, x0 + 1] * fx3 * (1 - fy3)
        + s[y0 + 1, x0] * (1 - fx3) * fy3
        + s[y0 + 1, x0 + 1] * fx3 * fy3
    )
    if src.ndim == 2:
        val = val[..., 0]
    return val, inside


def _bilinear_warp_py(src, qx, qy, out, inside):
    h, w, c = src.shape
    oh, ow = qx.shape
    eps = 1e-6
    for y in range(oh):
        for x in range(ow):
            sx = qx[y, x]
            sy = qy[y, x]
            if sx < -eps or sx > w - 1.0 + eps or sy < -eps or sy > h - 1.0 + eps:
                inside[y, x] = False
                for ch in range(c):
                    out[y, x, ch] = 0.0
                continue
            inside[y, x] = True
            x0 = int(math.floor(sx))
            y0 = int(math.floor(sy))
            if x0 < 0:
                x0 = 0
            elif x0 > w - 2:
                x0 = w - 2
            if y0 < 0:
                y0 = 0
            elif y0 > h - 2:
                y0 = h - 2
            fx = sx - x0
            fy = sy - y0
            if fx < 0.0:
                fx = 0.0
            elif fx > 1.0:
                fx = 1.0
            if fy < 0.0:
                fy = 0.0
            elif fy > 1.0:
                fy = 1.0
            for ch in range(c):
                v00 = src[y0, x0, ch]
                v01 = src[y0, x0 + 1, ch]
                v10 = src[y0 + 1, x0, ch]
                v11 = src[y0 + 1, x0 + 1, ch]
                out[y, x, ch] = (
                    v00 * (1 - fx) * (1 - fy)
                    + v01 * fx * (1 - fy)
                    + v10 * (1 - fx) * fy
                    + v11 * fx * fy
                )


if USE_NUMBA:
    _bilinear_warp_jit = njit(cache=True)(_bilinear_warp_py)


def bilinear_warp_numba(src: np.ndarray, qx: np.ndarray, qy: np.ndarray):
    s = np.ascontiguousarray(src, dtype=np.float64)
    squeeze = s.ndim == 2
    if squeeze:
        s = s[:, :, None]
    out = np.empty(qx.shape + (s.shape[2],), dtype=np.float64)
    inside = np.empty(qx.shape, dtype=np.bool_)
    _bilinear_warp_jit(
        s,
        np.ascontiguousarray(qx, dtype=np.float64),
        np.ascontiguousarray(qy, dtype=np.float64),
        out,
        inside,
    )
    if squeeze:
        out = out[..., 0]
    return out, inside


def bilinear_warp(src: np.ndarray, qx: np.ndarray, qy: np.ndarray):
    if USE_NUMBA:
        return bilinear_warp_numba(src, qx, qy)
    return bilinear_warp_numpy(src, qx, qy)


def bilinear_sample_points(img: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Bilinear samples at an (N,2) point list with edge clamping."""
    h, w = img.shape[:2]
    qx = np.clip(pts[:, 0], 0.0, w - 1.0)
    qy = np.clip(pts[:, 1], 0.0, h - 1.0)
    val, _ = bilinear_warp_numpy(img, qx, qy)
    return val


# ----------------------------------------------------------------------
# Bicubic upsampling (Catmull-Rom, a = -0.5, endpoint aligned)
# ----------------------------------------------------------------------

def _cubic_weights(f: np.ndarray):
    # Keys kernel with a=-0.5; weights at taps -1..2 sum to 1 exactly.
    f2 = f * f
    f3 = f2 * f
    w0 = -0.5 * f3 + f2 - 0.5 * f
    w1 = 1.5 * f3 - 2.5 * f2 + 1.0
    w2 = -1.5 * f3 + 2.0 * f2 + 0.5 * f
    w3 = 0.5 * f3 - 0.5 * f2
    return w0, w1, w2, w3


def _axis_coords(n_out: int, n_in: int):
    if n_out == 1 or n_in == 1:
        t = np.zeros(n_out, dtype=np.float64)
    else:
        t = np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)
    i = np.floor(t).astype(np.int64)
    return i, t - i


def bicubic_upsample_numpy(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = grid.shape
    ix, fx = _axis_coords(out_w, w)
    iy, fy = _axis_coords(out_h, h)
    wx = _cubic_weights(fx)
    wy = _cubic_weights(fy)
    cols = np.zeros((h, out_w), dtype=np.float64)
    for k in range(4):
        idx = np.clip(ix + k - 1, 0, w - 1)
        cols += grid[:, idx] * wx[k][None, :]
    out = np.zeros((out_h, out_w), dtype=np.float64)
    for k in range(4):
        idx = np.clip(iy + k - 1, 0, h - 1)
        out += cols[idx, :] * wy[k][:, None]
    return out


def _bicubic_upsample_py(grid, out):
    h, w = grid.shape
    oh, ow = out.shape
    sx = (w - 1) / (ow - 1) if ow > 1 else 0.0
    sy = (h - 1) / (oh - 1) if oh > 1 else 0.0
    for oy in range(oh):
        ty = oy * sy
        y0 = int(math.floor(ty))
        fy = ty - y0
        fy2 = fy * fy
        fy3 = fy2 * fy
        wy0 = -0.5 * fy3 + fy2 - 0.5 * fy
        wy1 = 1.5 * fy3 - 2.5 * fy2 + 1.0
        wy2 = -1.5 * fy3 + 2.0 * fy2 + 0.5 * fy
        wy3 = 0.5 * fy3 - 0.5 * fy2
        for ox in range(ow):
            tx = ox * sx
            x0 = int(math.floor(tx))
            fx = tx - x0
            fx2 = fx * fx
            fx3 = fx2 * fx
            wx0 = -0.5 * fx3 + fx2 - 0.5 * fx
            wx1 = 1.5 * fx3 - 2.5 * fx2 + 1.0
            wx2 = -1.5 * fx3 + 2.0 * fx2 + 0.5 * fx
            wx3 = 0.5 * fx3 - 0.5 * fx2
            acc = 0.0
            for ky in range(4):
                yy = y0 + ky - 1
                if yy < 0:
                    yy = 0
                elif yy > h - 1:
                    yy = h - 1
                if ky == 0:
                    wyk = wy0
                elif ky == 1:
                    wyk = wy1
                elif ky == 2:
                    wyk = wy2
                else:
                    wyk = wy3
                row = 0.0
                for kx in range(4):
                    xx = x0 + kx - 1
                    if xx < 0:
                        xx = 0
                    elif xx > w - 1:
                        xx = w - 1
                    if kx == 0:
                        wxk = wx0
                    elif kx == 1:
                        wxk = wx1
                    elif kx == 2:
                        wxk = wx2
                    else:
                        wxk = wx3
                    row += grid[yy, xx] * wxk
                acc += row * wyk
            out[oy, ox] = acc


if USE_NUMBA:
    _bicubic_upsample_jit = njit(cache=True)(_bicubic_upsample_py)


def bicubic_upsample_numba(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    out = np.empty((out_h, out_w), dtype=np.float64)
    _bicubic_upsample_jit(np.ascontiguousarray(grid, dtype=np.float64), out)
    return out


def bicubic_upsample(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    if USE_NUMBA:
        return bicubic_upsample_numba(grid, out_h, out_w)
    return bicubic_upsample_numpy(grid, out_h, out_w)


# ----------------------------------------------------------------------
# Segment-test corner score (16-pixel Bresenham circle, arc >= 9)
# ----------------------------------------------------------------------

_CIRCLE = np.array(
    [
        (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
        (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
    ],
    dtype=np.int64,
)
_ARC_LEN = 9


def corner_score_numpy(gray: np.ndarray, threshold: float) -> np.ndarray:
    """Per-pixel corner response; zero where the segment test fails."""
    g = gray.astype(np.float64)
    h, w = g.shape
    score = np.zeros((h, w), dtype=np.float64)
    if h <= 6 or w <= 6:
        return score
    center = g[3:h - 3, 3:w - 3]
    diffs = np.empty((16,) + center.shape, dtype=np.float64)
    for i, (dx, dy) in enumerate(_CIRCLE):
        diffs[i] = g[3 + dy:h - 3 + dy, 3 + dx:w - 3 + dx] - center
    bright = diffs > threshold
    dark = diffs < -threshold
    # contiguous circular arc of length >= _ARC_LEN
    bright2 = np.concatenate([bright, bright[: _ARC_LEN - 1]], axis=0)
    dark2 = np.concatenate([dark, dark[: _ARC_LEN - 1]], axis=0)
    csb = np.cumsum(bright2, axis=0, dtype=np.int32)
    csd = np.cumsum(dark2, axis=0, dtype=np.int32)
    run_b = np.zeros(center.shape, dtype=bool)
    run_d = np.zeros(center.shape, dtype=bool)
    for s in range(16):
        top = csb[s + _ARC_LEN - 1] - (csb[s - 1] if s > 0 else 0)
        run_b |= top == _ARC_LEN
        top = csd[s + _ARC_LEN - 1] - (csd[s - 1] if s > 0 else 0)
        run_d |= top == _ARC_LEN
    sb = np.where(bright, diffs - threshold, 0.0).sum(axis=0)
    sd = np.where(dark, -diffs - threshold, 0.0).sum(axis=0)
    resp = np.where(run_b, sb, 0.0)
    resp = np.maximum(resp, np.where(run_d, sd, 0.0))
    score[3:h - 3, 3:w - 3] = resp
    return score


def _corner_score_py(gray, cdx, cdy, threshold, score):
    h, w = gray.shape
    n = cdx.shape[0]
    for y in range(3, h - 3):
        for x in range(3, w - 3):
            c = gray[y, x]
            nb = 0
            nd = 0
            for i in range(n):
                d = gray[y + cdy[i], x + cdx[i]] - c
                if d > threshold:
                    nb += 1
                elif d < -threshold:
                    nd += 1
            if nb < 9 and nd < 9:
                continue
            run_b = False
            run_d = False
            for s in range(n):
                okb = True
                okd = True
                for j in range(9):
                    i = s + j
                    if i >= n:
                        i -= n
                    d = gray[y + cdy[i], x + cdx[i]] - c
                    if d <= threshold:
                        okb = False
                    if d >= -threshold:
                        okd = False
                    if not okb and not okd:
                        break
                if okb:
                    run_b = True
                if okd:
                    run_d = True
                if run_b or run_d:
                    break
            if not (run_b or run_d):
                continue
            sb = 0.0
            sd = 0.0
            for i in range(n):
                d = gray[y + cdy[i], x + cdx[i]] - c
                if d > threshold:
                    sb += d - threshold
                elif d < -threshold:
                    sd += -d - threshold
            if run_b and (not run_d or sb >= sd):
                score[y, x] = sb
            else:
                score[y, x] = sd


if USE_NUMBA:
    _corner_score_jit = njit(cache=True)(_corner_score_py)


def corner_score_numba(gray: np.ndarray, threshold: float) -> np.ndarray:
    g = np.ascontiguousarray(gray, dtype=np.float64)
    score = np.zeros(g.shape, dtype=np.float64)
    _corner_score_jit(g, _CIRCLE[:, 0].copy(), _CIRCLE[:, 1].copy(), float(threshold), score)
    return score


def corner_score(gray: np.ndarray, threshold: float) -> np.ndarray:
    if USE_NUMBA:
        return corner_score_numba(gray, threshold)
    return corner_score_numpy(gray, threshold)


# ----------------------------------------------------------------------
# Largest all-true rectangle (histogram-stack scan over rows)
# ----------------------------------------------------------------------

def largest_true_rect_numpy(cov: np.ndarray):
    """Largest axis-aligned all-true rectangle as (x0, y0, x1, y1) or None."""
    h, w = cov.shape
    heights = np.zeros(w, dtype=np.int64)
    best_area = 0
    best = None
    for y in range(h):
        heights = np.where(cov[y], heights + 1, 0)
        hs = heights.tolist()
        stack = []
        for x in range(w + 1):
            cur = hs[x] if x < w else 0
            start = x
            while stack and stack[-1][1] >= cur:
                sx, sh = stack.pop()
                area = sh * (x - sx)
                if area > best_area:
                    best_area = area
                    best = (sx, y - sh + 1, x, y + 1)
                start = sx
            if not stack or cur > 0:
                stack.append((start, cur))
    return best


def _largest_true_rect_py(cov, out):
    h, w = cov.shape
    heights = np.zeros(w, dtype=np.int64)
    stack_x = np.empty(w + 1, dtype=np.int64)
    stack_h = np.empty(w + 1, dtype=np.int64)
    best_area = 0
    for y in range(h):
        for x in range(w):
            heights[x] = heights[x] + 1 if cov[y, x] else 0
        top = 0
        for x in range(w + 1):
            cur = heights[x] if x < w else 0
            start = x
            while top > 0 and stack_h[top - 1] >= cur:
                top -= 1
                sx = stack_x[top]
                sh = stack_h[top]
                area = sh * (x - sx)
                if area > best_area:
                    best_area = area
                    out[0] = sx
                    out[1] = y - sh + 1
                    out[2] = x
                    out[3] = y + 1
                start = sx
            if top == 0 or cur > 0:
                stack_x[top] = start
                stack_h[top] = cur
                top += 1
    return best_area


if USE_NUMBA:
    _largest_true_rect_jit = njit(cache=True)(_largest_true_rect_py)


def largest_true_rect_numba(cov: np.ndarray):
    out = np.zeros(4, dtype=np.int64)
    area = _largest_true_rect_jit(np.ascontiguousarray(cov, dtype=np.bool_), out)
    if area == 0:
        return None
    return int(out[0]), int(out[1]), int(out[2]), int(out[3])


def largest_true_rect(cov: np.ndarray):
    if USE_NUMBA:
        return largest_true_rect_numba(cov)
    return largest_true_rect_numpy(cov)
