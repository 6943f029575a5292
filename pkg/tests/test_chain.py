import numpy as np
import pytest

from seamstitch.chain import KeypointChain, midline_chain, refine_chain, stitching_line
from seamstitch.errors import ChainTooShort


def flat_gray(h: int = 60, w: int = 120, value: float = 100.0) -> np.ndarray:
    return np.full((h, w), value, dtype=np.float64)


def test_monotone_pairs_kept_in_order():
    src = np.array([[10.0, 30], [25.0, 32], [40.0, 28], [70.0, 31]])
    tgt = src + 1.0
    g = flat_gray()
    chain = refine_chain(src, tgt, g, g, 20.0)
    assert np.array_equal(chain.src_points, src)
    assert np.array_equal(chain.tgt_points, tgt)


def test_duplicate_x_keeps_single_anchor():
    src = np.array([[10.0, 30], [40.0, 20], [40.0, 45], [70.0, 31]])
    tgt = src.copy()
    g = flat_gray()
    chain = refine_chain(src, tgt, g, g, 20.0)
    xs = chain.src_points[:, 0]
    assert np.all(np.diff(xs) > 0)
    assert np.sum(xs == 40.0) == 1
    # the nearer of the two same-x pairs to the previous anchor survives
    picked = chain.src_points[xs == 40.0][0]
    assert picked[1] == 20.0


def test_brightness_outlier_pruned():
    g = flat_gray()
    g[28:32, 38:42] = 220.0  # bright spot under one source point
    src = np.array([[10.0, 30], [40.0, 30], [70.0, 30], [90.0, 30]])
    tgt = src.copy()
    chain = refine_chain(src, tgt, g, flat_gray(), 20.0)
    assert 40.0 not in chain.src_points[:, 0]
    assert len(chain) == 3


def test_pair_brightness_filter_uses_both_layers():
    gs = flat_gray()
    gt = flat_gray()
    gt[28:32, 68:72] = 200.0  # target much brighter than source at x=70
    src = np.array([[10.0, 30], [40.0, 30], [70.0, 30]])
    chain = refine_chain(src, src.copy(), gs, gt, 20.0)
    assert 70.0 not in chain.src_points[:, 0]


def test_anchor_starts_at_left_edge():
    src = np.array([[55.0, 10], [12.0, 40], [80.0, 20]])
    g = flat_gray()
    chain = refine_chain(src, src.copy(), g, g, 20.0)
    assert chain.src_points[0, 0] == 12.0


def test_chain_too_short():
    g = flat_gray()
    with pytest.raises(ChainTooShort):
        refine_chain(np.array([[5.0, 5]]), np.array([[5.0, 5]]), g, g, 20.0)


def test_output_pairs_subset_of_input():
    rng = np.random.default_rng(3)
    src = np.column_stack([rng.uniform(0, 119, 30), rng.uniform(0, 59, 30)])
    tgt = src + rng.uniform(-2, 2, size=src.shape)
    g = flat_gray()
    chain = refine_chain(src, tgt, g, g, 20.0)
    rows = {tuple(r) for r in src}
    assert all(tuple(r) in rows for r in chain.src_points)
    assert np.all(np.diff(chain.src_points[:, 0]) > 0)


def test_refine_is_idempotent():
    rng = np.random.default_rng(4)
    src = np.column_stack([rng.uniform(0, 119, 20), rng.uniform(0, 59, 20)])
    tgt = src + 0.5
    g = flat_gray()
    first = refine_chain(src, tgt, g, g, 20.0)
    second = refine_chain(first.src_points, first.tgt_points, g, g, 20.0)
    assert np.array_equal(first.src_points, second.src_points)
    assert np.array_equal(first.tgt_points, second.tgt_points)


def test_stitching_line_two_points():
    chain = KeypointChain(np.array([[5.0, 1], [9.0, 3]]), np.array([[5.0, 1], [9.0, 3]]),
                          np.zeros(2))
    line = stitching_line(chain)
    assert line.shape == (2, 2)
    assert np.array_equal(line, chain.src_points)


def test_midline_fallback_flagged():
    chain = midline_chain((40.0, 60.0), 100)
    assert chain.fallback
    assert np.allclose(chain.src_points[:, 0], 50.0)
    assert len(chain) == 2
