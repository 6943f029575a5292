import numpy as np
import pytest

from seamstitch.errors import InvalidSpec
from seamstitch.geometry import apply_affine
from seamstitch.kernels import bilinear_warp_numpy
from seamstitch.metrics import psnr_overlap
from seamstitch.seamzone import ZoneConfig, classify_disparities, cluster_disparities
from seamstitch.synth import SceneSpec, generate_pair

from conftest import rotation_about, translation


def test_determinism_bit_identical():
    spec = SceneSpec(base_dims=(160, 120), affine=translation(9.0, -4.0),
                     texture_seed=42, noise_sigma=1.5)
    a = generate_pair(spec)
    b = generate_pair(spec)
    for x, y in zip(a[:2], b[:2]):
        assert np.array_equal(x, y)
    assert np.array_equal(a[2].xs, b[2].xs)


def test_identity_scene_pair_identical():
    src, tgt, gt = generate_pair(SceneSpec(base_dims=(128, 96), texture_seed=1))
    assert np.array_equal(src, tgt)
    assert np.allclose(gt.xs - gt.xt, 0.0) and np.allclose(gt.ys - gt.yt, 0.0)


def test_translation_scene_exact_disparities():
    spec = SceneSpec(base_dims=(200, 150), affine=translation(40.0, 0.0), texture_seed=2)
    _, _, gt = generate_pair(spec)
    assert len(gt) > 20
    assert np.allclose(gt.xs - gt.xt, 40.0)
    assert np.allclose(gt.ys - gt.yt, 0.0)


def test_two_layer_scene_shows_two_disparity_modes():
    # full-height layer band so abscissa classes stay depth-pure
    spec = SceneSpec(
        base_dims=(400, 300), affine=translation(40.0, 0.0),
        parallax_layers=[(15.0, (240.0, 0.0, 360.0, 300.0))], texture_seed=21)
    _, _, gt = generate_pair(spec)
    disp = gt.xs - gt.xt
    modes = set(np.round(disp, 9))
    assert modes == {40.0, 55.0}

    # zone machinery on the raw ground truth: two clusters, gap 15 >> v = 2
    cfg = ZoneConfig(v=2.0)
    classes = classify_disparities(gt.src_points(), gt.tgt_points(), 400.0, cfg)
    means = np.array([c.mean_disparity for c in classes])
    ranges = cluster_disparities(means, cfg.v)
    assert len(ranges) == 2
    cluster_means = [float(np.mean(means[s:e])) for s, e in ranges]
    assert any(abs(m - 40.0) < 1e-9 for m in cluster_means)
    assert any(abs(m - 55.0) < 1e-9 for m in cluster_means)


def _static_region_psnr(spec: SceneSpec) -> float:
    """Warp the source by the true motion and compare against the target."""
    src, tgt, _ = generate_pair(spec)
    w, h = spec.base_dims
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    p_s = apply_affine(spec.affine, np.column_stack([xx.ravel(), yy.ravel()]))
    val, inside = bilinear_warp_numpy(src[:, :, 0].astype(np.float64),
                                      p_s[:, 0].reshape(h, w), p_s[:, 1].reshape(h, w))
    mask = inside.copy()
    pad = max((abs(s) for s, _ in spec.parallax_layers), default=0.0) + 2.0
    for _, (x0, y0, x1, y1) in spec.parallax_layers:
        mask &= ~((xx >= x0 - pad) & (xx < x1 + pad) & (yy >= y0 - pad) & (yy < y1 + pad))
    a = np.clip(np.round(val), 0, 255).astype(np.uint8)
    return psnr_overlap(a, tgt[:, :, 0], mask)


def test_ground_truth_self_consistency_translation():
    spec = SceneSpec(base_dims=(240, 180), affine=translation(17.3, -6.4), texture_seed=31)
    assert _static_region_psnr(spec) >= 50.0


def test_ground_truth_self_consistency_rotation():
    spec = SceneSpec(base_dims=(240, 180),
                     affine=rotation_about(4.0, 120.0, 90.0, 12.0, 3.0), texture_seed=33)
    assert _static_region_psnr(spec) >= 50.0


def test_ground_truth_self_consistency_with_layers():
    spec = SceneSpec(base_dims=(320, 240), affine=translation(30.0, 0.0),
                     parallax_layers=[(12.0, (200.0, 50.0, 280.0, 190.0))], texture_seed=35)
    assert _static_region_psnr(spec) >= 50.0


def test_invalid_specs_rejected():
    with pytest.raises(InvalidSpec):
        generate_pair(SceneSpec(base_dims=(32, 32)))
    bad = np.eye(3)
    bad[0, 0] = 0.0
    bad[0, 1] = 0.0
    with pytest.raises(InvalidSpec):
        generate_pair(SceneSpec(base_dims=(128, 128), affine=bad))
    with pytest.raises(InvalidSpec):
        generate_pair(SceneSpec(base_dims=(128, 128),
                                parallax_layers=[(5.0, (100.0, 0.0, 200.0, 50.0))]))
    with pytest.raises(InvalidSpec):
        generate_pair(SceneSpec(base_dims=(128, 128), noise_sigma=-1.0))
