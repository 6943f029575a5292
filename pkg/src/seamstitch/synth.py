"""Synthetic image-pair generator with exact ground-truth correspondences.

A procedural texture is rendered over a domain large enough to cover the
requested inter-view motion. The target image is the central crop; the
source image shows the same scene under the true affine, with optional
horizontally shifted depth layers. Ground-truth matches are sampled on a
grid and are exact under the known per-layer motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec
from .geometry import apply_affine, identity_affine, invert_affine
from .kernels import bilinear_warp_numpy, gaussian_blur
from .matching import MatchSet


@dataclass
class SceneSpec:
    """Recipe for one synthetic pair; fully determined by its fields."""

    base_dims: tuple[int, int] = (640, 480)          # output pair dims (W, H)
    affine: np.ndarray = field(default_factory=identity_affine)  # target -> source
    parallax_layers: list = field(default_factory=list)  # (shift_px, (x0, y0, x1, y1))
    texture_seed: int = 0
    noise_sigma: float = 0.0
    grid_step: int = 16                               # ground-truth sampling step

    def validate(self) -> None:
        w, h = self.base_dims
        if w < 48 or h < 48:
            raise InvalidSpec("base_dims must be at least 48x48")
        try:
            invert_affine(self.affine)
        except Exception as exc:
            raise InvalidSpec(f"affine is not invertible: {exc}") from exc
        for shift, region in self.parallax_layers:
            x0, y0, x1, y1 = region
            if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
                raise InvalidSpec(f"layer region {region} outside base dims")
            if not math.isfinite(shift):
                raise InvalidSpec("layer shift must be finite")
        if self.noise_sigma < 0:
            raise InvalidSpec("noise_sigma must be >= 0")


def _texture(rng: np.random.Generator, w: int, h: int) -> np.ndarray:
    """Multi-octave value noise plus primitives, lightly band-limited."""
    tex = np.zeros((h, w), dtype=np.float64)
    amp = 1.0
    for cell in (64, 32, 16, 8):
        gw = w // cell + 3
        gh = h // cell + 3
        lattice = rng.random((gh, gw))
        ys = np.arange(h) / cell
        xs = np.arange(w) / cell
        x0 = xs.astype(np.int64)
        y0 = ys.astype(np.int64)
        fx = (xs - x0)[None, :]
        fy = (ys - y0)[:, None]
        v = (
            lattice[np.ix_(y0, x0)] * (1 - fx) * (1 - fy)
            + lattice[np.ix_(y0, x0 + 1)] * fx * (1 - fy)
            + lattice[np.ix_(y0 + 1, x0)] * (1 - fx) * fy
            + lattice[np.ix_(y0 + 1, x0 + 1)] * fx * fy
        )
        tex += amp * v
        amp *= 0.55
    tex = (tex - tex.min()) / (tex.max() - tex.min() + 1e-12)

    # sharp-ish primitives guarantee corner features for patch matching
    yy, xx = np.mgrid[0:h, 0:w]
    n_prims = max(24, (w * h) // 12000)
    for _ in range(n_prims):
        kind = rng.integers(0, 2)
        level = rng.uniform(0.0, 1.0)
        if kind == 0:
            rw = rng.integers(8, max(9, w // 6))
            rh = rng.integers(8, max(9, h // 6))
            rx = rng.integers(0, max(1, w - rw))
            ry = rng.integers(0, max(1, h - rh))
            tex[ry:ry + rh, rx:rx + rw] = 0.65 * level + 0.35 * tex[ry:ry + rh, rx:rx + rw]
        else:
            r = rng.integers(5, max(6, min(w, h) // 8))
            cx = rng.integers(r, max(r + 1, w - r))
            cy = rng.integers(r, max(r + 1, h - r))
            m = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
            tex[m] = 0.65 * level + 0.35 * tex[m]

    # band-limit so resampling under sub-pixel motion stays above 50 dB
    tex = gaussian_blur(tex, 1.4)
    return 15.0 + 225.0 * np.clip(tex, 0.0, 1.0)


def _motion_margin(spec: SceneSpec) -> int:
    w, h = spec.base_dims
    corners = np.array([[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])
    moved = apply_affine(spec.affine, corners)
    disp = float(np.abs(moved - corners).max())
    shift = max((abs(s) for s, _ in spec.parallax_layers), default=0.0)
    return int(math.ceil(disp + shift)) + 16


def _layer_of(points: np.ndarray, layers) -> np.ndarray:
    """Index of the last layer containing each target point, -1 for none."""
    owner = np.full(points.shape[0], -1, dtype=np.int64)
    for i, (_, region) in enumerate(layers):
        x0, y0, x1, y1 = region
        inside = (
            (points[:, 0] >= x0) & (points[:, 0] < x1)
            & (points[:, 1] >= y0) & (points[:, 1] < y1)
        )
        owner[inside] = i
    return owner


def generate_pair(spec: SceneSpec):
    """Returns (source, target, ground_truth) for a validated scene spec."""
    spec.validate()
    w, h = spec.base_dims
    margin = _motion_margin(spec)
    rng = np.random.default_rng(spec.texture_seed)
    tex = _texture(rng, w + 2 * margin, h + 2 * margin)
    # each depth layer carries its own texture so its motion is unambiguous
    layer_tex = [
        _texture(rng, int(math.ceil(r[2] - r[0])) + 2, int(math.ceil(r[3] - r[1])) + 2)
        for _, r in spec.parallax_layers
    ]

    def sample_tex(pts_x: np.ndarray, pts_y: np.ndarray) -> np.ndarray:
        val, _ = bilinear_warp_numpy(
            tex,
            np.clip(pts_x + margin, 0, tex.shape[1] - 1),
            np.clip(pts_y + margin, 0, tex.shape[0] - 1),
        )
        return val

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    target = sample_tex(xx, yy)
    for (shift, region), ltex in zip(spec.parallax_layers, layer_tex):
        x0, y0, x1, y1 = region
        inside = (xx >= x0) & (xx < x1) & (yy >= y0) & (yy < y1)
        vals, _ = bilinear_warp_numpy(ltex, xx - x0, yy - y0)
        target[inside] = vals[inside]

    # static source content, then shifted layer content pasted over it
    inv = invert_affine(spec.affine)
    sx = inv[0, 0] * xx + inv[0, 1] * yy + inv[0, 2]
    sy = inv[1, 0] * xx + inv[1, 1] * yy + inv[1, 2]
    source = sample_tex(sx, sy)
    for (shift, region), ltex in zip(spec.parallax_layers, layer_tex):
        x0, y0, x1, y1 = region
        cx = inv[0, 0] * (xx - shift) + inv[0, 1] * yy + inv[0, 2]
        cy = inv[1, 0] * (xx - shift) + inv[1, 1] * yy + inv[1, 2]
        inside = (cx >= x0) & (cx < x1) & (cy >= y0) & (cy < y1)
        vals, _ = bilinear_warp_numpy(ltex, cx - x0, cy - y0)
        source[inside] = vals[inside]

    if spec.noise_sigma > 0:
        source = source + rng.normal(0.0, spec.noise_sigma, source.shape)
        target = target + rng.normal(0.0, spec.noise_sigma, target.shape)

    src_u8 = np.clip(np.round(source), 0, 255).astype(np.uint8)
    tgt_u8 = np.clip(np.round(target), 0, 255).astype(np.uint8)
    src_rgb = np.repeat(src_u8[:, :, None], 3, axis=2)
    tgt_rgb = np.repeat(tgt_u8[:, :, None], 3, axis=2)

    gt = _ground_truth(spec, w, h)
    return src_rgb, tgt_rgb, gt


def _ground_truth(spec: SceneSpec, w: int, h: int) -> MatchSet:
    step = spec.grid_step
    gx = np.arange(step // 2, w - step // 4, step, dtype=np.float64)
    gy = np.arange(step // 2, h - step // 4, step, dtype=np.float64)
    px, py = np.meshgrid(gx, gy)
    p_t = np.column_stack([px.ravel(), py.ravel()])
    owner = _layer_of(p_t, spec.parallax_layers)
    p_s = apply_affine(spec.affine, p_t)
    for i, (shift, _) in enumerate(spec.parallax_layers):
        p_s[owner == i, 0] += shift
    keep = (
        (p_s[:, 0] >= 0) & (p_s[:, 0] <= w - 1)
        & (p_s[:, 1] >= 0) & (p_s[:, 1] <= h - 1)
    )
    p_s = p_s[keep]
    p_t = p_t[keep]
    return MatchSet(
        xs=p_s[:, 0], ys=p_s[:, 1], xt=p_t[:, 0], yt=p_t[:, 1],
        score=np.ones(p_s.shape[0]),
        source_dims=(w, h), target_dims=(w, h),
    )
