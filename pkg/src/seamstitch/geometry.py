"""Planar affine algebra, robust estimation, polygon clipping and mask moments.

Conventions used throughout the package:

  * points are float64 arrays, a single point ``(x, y)`` or a stack ``(N, 2)``;
  * an affine transform is a 3x3 float64 matrix whose last row is [0, 0, 1];
  * polygons are ``(K, 2)`` float64 arrays with counter-clockwise vertices;
  * binary masks are boolean ``(H, W)`` arrays; pixel (x, y) covers the unit
    square ``[x, x+1) x [y, y+1)`` and its center sits at (x+0.5, y+0.5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConfiguration,
    EmptyMask,
    SingularProjection,
    SingularTransform,
    TooFewMatches,
)

_DET_EPS = 1e-12


@dataclass(frozen=True)
class RansacConfig:
    inlier_threshold: float = 3.0
    iterations: int = 2000
    min_matches: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if self.inlier_threshold <= 0:
            raise ValueError("inlier_threshold must be positive")
        if self.min_matches < 3:
            raise ValueError("min_matches must be >= 3")


# ----------------------------------------------------------------------
# Affine algebra
# ----------------------------------------------------------------------

def identity_affine() -> np.ndarray:
    return np.eye(3, dtype=np.float64)


def translation_affine(dx: float, dy: float) -> np.ndarray:
    t = np.eye(3, dtype=np.float64)
    t[0, 2] = dx
    t[1, 2] = dy
    return t


def make_affine(linear: np.ndarray, offset: np.ndarray) -> np.ndarray:
    t = np.eye(3, dtype=np.float64)
    t[:2, :2] = linear
    t[:2, 2] = offset
    return t


def is_affine(t: np.ndarray) -> bool:
    return (
        t.shape == (3, 3)
        and np.all(np.isfinite(t))
        and t[2, 0] == 0.0
        and t[2, 1] == 0.0
        and t[2, 2] == 1.0
    )


def apply_affine(t: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Apply t to one point or a stack of points, with perspective division.

    Affines always carry z = 1, but the division is performed regardless so
    the operation matches the projective formulation used by the warp.
    """
    p = np.asarray(pts, dtype=np.float64)
    single = p.ndim == 1
    p2 = np.atleast_2d(p)
    ones = np.ones((p2.shape[0], 1), dtype=np.float64)
    q = np.hstack([p2, ones]) @ t.T
    z = q[:, 2]
    if np.any(np.abs(z) < _DET_EPS):
        raise SingularProjection("projected z-component vanishes")
    out = q[:, :2] / z[:, None]
    return out[0] if single else out


def invert_affine(t: np.ndarray) -> np.ndarray:
    lin = t[:2, :2]
    det = lin[0, 0] * lin[1, 1] - lin[0, 1] * lin[1, 0]
    if abs(det) <= _DET_EPS:
        raise SingularTransform(f"linear part is singular (det={det:.3e})")
    inv_lin = np.array([[lin[1, 1], -lin[0, 1]], [-lin[1, 0], lin[0, 0]]]) / det
    return make_affine(inv_lin, -inv_lin @ t[:2, 2])


def fit_affine_lstsq(src: np.ndarray, tgt: np.ndarray) -> np.ndarray:
    """Least-squares affine src -> tgt for N >= 3 point pairs."""
    n = src.shape[0]
    if n < 3:
        raise TooFewMatches(f"{n} matches, need >= 3")
    phi = np.hstack([src, np.ones((n, 1))])
    sol, _, rank, _ = np.linalg.lstsq(phi, tgt, rcond=None)
    if rank < 3:
        raise DegenerateConfiguration("source points are collinear")
    return make_affine(sol[:2].T.copy(), sol[2].copy())


# ----------------------------------------------------------------------
# RANSAC
# ----------------------------------------------------------------------

def _sample_is_degenerate(p: np.ndarray) -> bool:
    # collinearity via twice the triangle area
    a = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0])
    return abs(a) < 1e-9


def estimate_affine_ransac(src: np.ndarray, tgt: np.ndarray, cfg: RansacConfig):
    """Robust affine fit; returns (transform, inlier_indices).

    The transform is the least-squares refit on the best consensus set and
    inliers are re-evaluated under that refit. Deterministic per rng_seed.
    """
    src = np.asarray(src, dtype=np.float64)
    tgt = np.asarray(tgt, dtype=np.float64)
    n = src.shape[0]
    if n < 3:
        raise TooFewMatches(f"{n} matches, need >= 3")
    if n < cfg.min_matches:
        raise TooFewMatches(f"{n} matches, config requires >= {cfg.min_matches}")

    rng = np.random.default_rng(cfg.rng_seed)
    thr2 = cfg.inlier_threshold ** 2
    best_count = -1
    best_inliers = None
    any_valid_sample = False

    for _ in range(cfg.iterations):
        idx = rng.choice(n, size=3, replace=False)
        sp = src[idx]
        if _sample_is_degenerate(sp):
            continue
        any_valid_sample = True
        tp = tgt[idx]
        # exact affine through 3 points
        phi = np.hstack([sp, np.ones((3, 1))])
        try:
            sol = np.linalg.solve(phi, tp)
        except np.linalg.LinAlgError:
            continue
        res = np.hstack([src, np.ones((n, 1))]) @ sol - tgt
        d2 = np.einsum("ij,ij->i", res, res)
        inl = d2 <= thr2
        count = int(inl.sum())
        if count > best_count:
            best_count = count
            best_inliers = inl

    if not any_valid_sample:
        raise DegenerateConfiguration("all sampled minimal sets are collinear")
    if best_inliers is None or best_count < 3:
        raise DegenerateConfiguration("no consensus set of size >= 3 found")

    consensus = np.flatnonzero(best_inliers)
    t = fit_affine_lstsq(src[consensus], tgt[consensus])
    res = apply_affine(t, src) - tgt
    d2 = np.einsum("ij,ij->i", res, res)
    inlier_indices = np.flatnonzero(d2 <= thr2)
    return t, inlier_indices


# ----------------------------------------------------------------------
# Polygons
# ----------------------------------------------------------------------

def polygon_area(poly: np.ndarray) -> float:
    """Signed area (positive for counter-clockwise vertex order)."""
    if len(poly) < 3:
        return 0.0
    x = poly[:, 0]
    y = poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def ensure_ccw(poly: np.ndarray) -> np.ndarray:
    if len(poly) >= 3 and polygon_area(poly) < 0:
        return poly[::-1].copy()
    return poly


def image_corners(width: int, height: int) -> np.ndarray:
    """Corners of the image domain [0,W] x [0,H] in positive-area order."""
    return np.array(
        [[0.0, 0.0], [float(width), 0.0], [float(width), float(height)], [0.0, float(height)]]
    )


def clip_polygon(subject: np.ndarray, rect: tuple[float, float, float, float]) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon against an axis rectangle.

    rect is (x0, y0, x1, y1); the result keeps CCW orientation and may be
    empty (shape (0, 2)).
    """
    x0, y0, x1, y1 = rect
    out = [tuple(v) for v in np.asarray(subject, dtype=np.float64)]

    def clip_edge(verts, inside, intersect):
        res = []
        m = len(verts)
        for i in range(m):
            cur = verts[i]
            prev = verts[i - 1]
            cin = inside(cur)
            pin = inside(prev)
            if cin:
                if not pin:
                    res.append(intersect(prev, cur))
                res.append(cur)
            elif pin:
                res.append(intersect(prev, cur))
        return res

    def cross_x(bound):
        def f(p, q):
            t = (bound - p[0]) / (q[0] - p[0])
            return (bound, p[1] + t * (q[1] - p[1]))

        return f

    def cross_y(bound):
        def f(p, q):
            t = (bound - p[1]) / (q[1] - p[1])
            return (p[0] + t * (q[0] - p[0]), bound)

        return f

    for inside, intersect in (
        (lambda p: p[0] >= x0, cross_x(x0)),
        (lambda p: p[0] <= x1, cross_x(x1)),
        (lambda p: p[1] >= y0, cross_y(y0)),
        (lambda p: p[1] <= y1, cross_y(y1)),
    ):
        if not out:
            break
        out = clip_edge(out, inside, intersect)

    if len(out) < 3:
        return np.zeros((0, 2), dtype=np.float64)
    arr = np.array(out, dtype=np.float64)
    # drop duplicate consecutive vertices emitted on touching edges
    keep = np.ones(len(arr), dtype=bool)
    for i in range(len(arr)):
        if np.allclose(arr[i], arr[(i + 1) % len(arr)], atol=1e-9):
            keep[(i + 1) % len(arr)] = False
    arr = arr[keep]
    if len(arr) < 3 or abs(polygon_area(arr)) < 1e-12:
        return np.zeros((0, 2), dtype=np.float64)
    return ensure_ccw(arr)


def rasterize_polygon_mask(poly: np.ndarray, width: int, height: int) -> np.ndarray:
    """Boolean mask: pixel set iff its center (x+0.5, y+0.5) is inside poly.

    Convex polygons only; points on an edge count as inside.
    """
    mask = np.zeros((height, width), dtype=bool)
    if len(poly) < 3:
        return mask
    p = ensure_ccw(np.asarray(poly, dtype=np.float64))
    cx = np.arange(width, dtype=np.float64) + 0.5
    cy = np.arange(height, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(cx, cy)
    inside = np.ones((height, width), dtype=bool)
    for i in range(len(p)):
        ax, ay = p[i]
        bx, by = p[(i + 1) % len(p)]
        cross = (bx - ax) * (gy - ay) - (by - ay) * (gx - ax)
        inside &= cross >= -1e-9
    mask[:] = inside
    return mask


def mask_centroid(mask: np.ndarray) -> np.ndarray:
    """Centroid of set-pixel centers via raw image moments."""
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise EmptyMask("mask has no set pixels")
    return np.array([xs.mean() + 0.5, ys.mean() + 0.5])


def mask_bbox(mask: np.ndarray):
    """Inclusive pixel-index bbox (x0, y0, x1, y1) of the set pixels."""
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise EmptyMask("mask has no set pixels")
    return int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())
