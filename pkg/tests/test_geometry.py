import numpy as np
import pytest

from seamstitch.errors import (
    DegenerateConfiguration,
    EmptyMask,
    SingularProjection,
    SingularTransform,
    TooFewMatches,
)
from seamstitch.geometry import (
    RansacConfig,
    apply_affine,
    clip_polygon,
    estimate_affine_ransac,
    identity_affine,
    image_corners,
    invert_affine,
    make_affine,
    mask_centroid,
    polygon_area,
    rasterize_polygon_mask,
    translation_affine,
)

from oracles import halfspace_intersection_area, random_convex_quad


# ----------------------------------------------------------------------
# affine algebra
# ----------------------------------------------------------------------

def test_apply_identity():
    assert np.allclose(apply_affine(identity_affine(), np.array([7.0, 9.0])), [7.0, 9.0])


def test_apply_hand_product():
    t = np.array([[2.0, 0, 1], [0, 2.0, -1], [0, 0, 1.0]])
    assert np.allclose(apply_affine(t, np.array([3.0, 4.0])), [7.0, 7.0])


def test_apply_rotation_quarter_turn():
    t = np.array([[0.0, -1, 0], [1, 0.0, 0], [0, 0, 1.0]])
    assert np.allclose(apply_affine(t, np.array([1.0, 0.0])), [0.0, 1.0])


def test_apply_singular_projection():
    t = identity_affine()
    t[2, 2] = 1e-14
    with pytest.raises(SingularProjection):
        apply_affine(t, np.array([1.0, 2.0]))


def test_invert_identity_translation_scale():
    assert np.allclose(invert_affine(identity_affine()), identity_affine())
    inv = invert_affine(translation_affine(5.0, -3.0))
    assert np.allclose(inv, translation_affine(-5.0, 3.0))
    scale = make_affine(2.0 * np.eye(2), np.zeros(2))
    assert np.allclose(invert_affine(scale), make_affine(0.5 * np.eye(2), np.zeros(2)))


def test_invert_singular():
    t = make_affine(np.array([[1.0, 2.0], [2.0, 4.0]]), np.zeros(2))
    with pytest.raises(SingularTransform):
        invert_affine(t)


def test_round_trip_many_random_transforms():
    rng = np.random.default_rng(42)
    for _ in range(100):
        ang = rng.uniform(-np.pi, np.pi)
        scale = rng.uniform(0.3, 3.0, size=2)
        shear = rng.uniform(-0.5, 0.5)
        rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
        lin = rot @ np.diag(scale) @ np.array([[1.0, shear], [0.0, 1.0]])
        t = make_affine(lin, rng.uniform(-500, 500, size=2))
        pts = rng.uniform(-1e4, 1e4, size=(100, 2))
        back = apply_affine(invert_affine(t), apply_affine(t, pts))
        assert np.max(np.abs(back - pts)) < 1e-9


# ----------------------------------------------------------------------
# RANSAC
# ----------------------------------------------------------------------

def test_ransac_pure_translation():
    rng = np.random.default_rng(0)
    src = rng.uniform(0, 100, size=(20, 2))
    tgt = src + np.array([5.0, -3.0])
    t, inliers = estimate_affine_ransac(src, tgt, RansacConfig(rng_seed=1))
    assert np.allclose(t, translation_affine(5.0, -3.0), atol=1e-9)
    assert len(inliers) == 20


def test_ransac_recovers_planted_inliers():
    rng = np.random.default_rng(3)
    true = make_affine(np.array([[1.02, 0.05], [-0.03, 0.98]]), np.array([12.0, -4.0]))
    src_in = rng.uniform(0, 200, size=(30, 2))
    tgt_in = apply_affine(true, src_in)
    src_out = rng.uniform(0, 200, size=(10, 2))
    offsets = rng.uniform(-100, 100, size=(10, 2))
    offsets[np.abs(offsets).max(axis=1) < 20] += 40.0  # keep outliers gross
    tgt_out = apply_affine(true, src_out) + offsets
    src = np.vstack([src_in, src_out])
    tgt = np.vstack([tgt_in, tgt_out])
    _, inliers = estimate_affine_ransac(src, tgt, RansacConfig(inlier_threshold=3.0, rng_seed=5))
    assert set(inliers.tolist()) == set(range(30))


def test_ransac_too_few_matches():
    with pytest.raises(TooFewMatches):
        estimate_affine_ransac(np.zeros((2, 2)), np.zeros((2, 2)), RansacConfig())


def test_ransac_collinear_degenerate():
    src = np.column_stack([np.arange(10.0), np.arange(10.0) * 2.0])
    tgt = src + 1.0
    with pytest.raises(DegenerateConfiguration):
        estimate_affine_ransac(src, tgt, RansacConfig(rng_seed=0))


def test_ransac_deterministic_per_seed():
    rng = np.random.default_rng(8)
    src = rng.uniform(0, 100, size=(50, 2))
    tgt = apply_affine(translation_affine(7.0, 1.0), src)
    tgt[:10] += rng.uniform(20, 40, size=(10, 2))
    a1, i1 = estimate_affine_ransac(src, tgt, RansacConfig(rng_seed=123))
    a2, i2 = estimate_affine_ransac(src, tgt, RansacConfig(rng_seed=123))
    assert a1.tobytes() == a2.tobytes()
    assert np.array_equal(i1, i2)


# ----------------------------------------------------------------------
# clipping
# ----------------------------------------------------------------------

def _canon(poly: np.ndarray) -> np.ndarray:
    i = np.lexsort((poly[:, 1], poly[:, 0]))[0]
    return np.roll(poly, -i, axis=0)


def test_clip_self_identity():
    square = image_corners(1, 1)
    out = clip_polygon(square, (0.0, 0.0, 1.0, 1.0))
    assert np.allclose(_canon(out), _canon(square))


def test_clip_offset_squares():
    square = np.array([[0.0, 0], [2, 0], [2, 2], [0, 2]])
    out = clip_polygon(square, (1.0, 1.0, 3.0, 3.0))
    expect = np.array([[1.0, 1], [2, 1], [2, 2], [1, 2]])
    assert np.allclose(_canon(out), _canon(expect))


def test_clip_disjoint_triangle():
    tri = np.array([[-5.0, 0], [-3, 0], [-4, 2]])
    out = clip_polygon(tri, (0.0, 0.0, 1.0, 1.0))
    assert out.shape == (0, 2)


def test_clip_area_matches_halfspace_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        quad = random_convex_quad(rng)
        rx0, ry0 = rng.uniform(-6, 2, size=2)
        rect = (rx0, ry0, rx0 + rng.uniform(1, 8), ry0 + rng.uniform(1, 8))
        got = abs(polygon_area(clip_polygon(quad, rect)))
        want = halfspace_intersection_area(quad, rect)
        if want < 1e-9:
            assert got < 1e-7
        else:
            assert abs(got - want) / want < 1e-6


# ----------------------------------------------------------------------
# rasterization and moments
# ----------------------------------------------------------------------

def test_rasterize_full_canvas():
    mask = rasterize_polygon_mask(image_corners(8, 6), 8, 6)
    assert mask.all()


def test_rasterize_counts_pixel_centers():
    rect = np.array([[2.0, 3], [5, 3], [5, 6], [2, 6]])
    mask = rasterize_polygon_mask(rect, 8, 8)
    assert mask.sum() == 9
    assert mask[3:6, 2:5].all()


def test_rasterize_empty_polygon():
    mask = rasterize_polygon_mask(np.zeros((0, 2)), 8, 8)
    assert not mask.any()


def test_centroid_full_rect():
    mask = np.ones((6, 10), dtype=bool)
    assert np.allclose(mask_centroid(mask), [5.0, 3.0])


def test_centroid_single_pixel():
    mask = np.zeros((10, 10), dtype=bool)
    mask[7, 3] = True
    assert np.allclose(mask_centroid(mask), [3.5, 7.5])


def test_centroid_l_shape():
    mask = np.zeros((4, 4), dtype=bool)
    mask[0, 0] = mask[0, 1] = mask[1, 0] = True
    assert np.allclose(mask_centroid(mask), [2.5 / 3, 2.5 / 3])


def test_centroid_empty():
    with pytest.raises(EmptyMask):
        mask_centroid(np.zeros((4, 4), dtype=bool))


def test_rasterized_centroid_matches_analytic_center():
    rng = np.random.default_rng(5)
    for _ in range(20):
        w = int(rng.integers(20, 120))
        h = int(rng.integers(20, 120))
        x0 = int(rng.integers(0, 20))
        y0 = int(rng.integers(0, 20))
        rect = np.array([[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]], float)
        mask = rasterize_polygon_mask(rect, x0 + w + 5, y0 + h + 5)
        c = mask_centroid(mask)
        center = np.array([x0 + w / 2.0, y0 + h / 2.0])
        assert np.max(np.abs(c - center)) <= 0.5 / min(w, h)
