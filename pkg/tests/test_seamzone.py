import numpy as np
import pytest

from seamstitch.errors import NoClusters, NoPairs
from seamstitch.seamzone import (
    DisparityClass,
    ZoneConfig,
    classify_disparities,
    cluster_disparities,
    fallback_zone,
    score_and_select,
)

from oracles import brute_force_threshold_trace


def pairs_from_disparities(xs: np.ndarray, disp: np.ndarray):
    src = np.column_stack([xs, np.zeros_like(xs)])
    tgt = np.column_stack([xs - disp, np.zeros_like(xs)])
    return src, tgt


def mk_class(index: int, mean: float, count: int, width: float = 10.0) -> DisparityClass:
    return DisparityClass(index=index, x_range=(index * width, (index + 1) * width),
                          members=np.arange(count), mean_disparity=mean)


# ----------------------------------------------------------------------
# classification
# ----------------------------------------------------------------------

def test_class_width_is_canvas_fraction():
    src, tgt = pairs_from_disparities(np.array([5.0, 15.0, 195.0]), np.zeros(3))
    classes = classify_disparities(src, tgt, 200.0, ZoneConfig(range_divisor=20))
    widths = {c.x_range[1] - c.x_range[0] for c in classes}
    assert widths == {10.0}


def test_constant_disparity_everywhere():
    xs = np.linspace(5, 195, 40)
    src, tgt = pairs_from_disparities(xs, np.full(40, 7.0))
    classes = classify_disparities(src, tgt, 200.0, ZoneConfig())
    assert all(abs(c.mean_disparity - 7.0) < 1e-12 for c in classes)


def test_class_mean_is_arithmetic_mean():
    src, tgt = pairs_from_disparities(np.array([2.0, 7.0]), np.array([4.0, 6.0]))
    classes = classify_disparities(src, tgt, 200.0, ZoneConfig())
    assert len(classes) == 1
    assert classes[0].mean_disparity == 5.0


def test_classify_empty_raises():
    with pytest.raises(NoPairs):
        classify_disparities(np.zeros((0, 2)), np.zeros((0, 2)), 100.0, ZoneConfig())


def test_classify_orders_by_x():
    xs = np.array([150.0, 15.0, 85.0])
    src, tgt = pairs_from_disparities(xs, np.zeros(3))
    classes = classify_disparities(src, tgt, 200.0, ZoneConfig())
    los = [c.x_range[0] for c in classes]
    assert los == sorted(los)


# ----------------------------------------------------------------------
# threshold clustering (hand traces + oracle)
# ----------------------------------------------------------------------

def test_cluster_hand_trace_two_groups():
    assert cluster_disparities(np.array([5.0, 6, 12, 13, 14]), 2.0) == [(0, 2), (2, 5)]


def test_cluster_hand_trace_all_singletons():
    assert cluster_disparities(np.array([1.0, 10.0, 20.0]), 2.0) == []


def test_cluster_boundary_equality_zero_threshold():
    assert cluster_disparities(np.array([3.0, 3.0, 3.0]), 0.0) == [(0, 3)]


def test_cluster_empty_input():
    assert cluster_disparities(np.array([]), 1.0) == []


def test_cluster_matches_brute_force_trace():
    rng = np.random.default_rng(77)
    for _ in range(1000):
        n = int(rng.integers(0, 50))
        means = rng.uniform(-30, 30, size=n)
        v = float(rng.choice([0.5, 1.0, 2.0, 5.0]))
        assert cluster_disparities(means, v) == brute_force_threshold_trace(means, v)


def test_every_cluster_has_two_consecutive_classes():
    rng = np.random.default_rng(78)
    for _ in range(200):
        means = rng.uniform(-10, 10, size=int(rng.integers(0, 30)))
        for s, e in cluster_disparities(means, 1.0):
            assert e - s >= 2


# ----------------------------------------------------------------------
# cluster scoring
# ----------------------------------------------------------------------

def test_score_direct_evaluation():
    # cluster {9.5, 10.5}: sigma = 0.5, mu_c = 10; global mean 8 -> delta 2
    classes = [mk_class(0, 9.5, 5), mk_class(1, 10.5, 5),
               mk_class(2, 5.0, 3), mk_class(3, 7.0, 3)]
    cfg = ZoneConfig(lam=1.0, epsilon=1e-6)
    best, zone = score_and_select(classes, [(0, 2)], cfg)
    assert abs(best.sigma - 0.5) < 1e-12
    assert abs(best.delta_mu - 2.0) < 1e-12
    assert best.cardinality == 10
    expect = 10.0 / (2.5 + 1e-6)
    assert abs(best.score - expect) / expect < 1e-9
    assert zone == (0.0, 20.0)


def test_score_single_cluster_of_everything():
    classes = [mk_class(0, 4.0, 6), mk_class(1, 6.0, 4)]
    cfg = ZoneConfig(lam=0.5, epsilon=1e-6)
    best, _ = score_and_select(classes, [(0, 2)], cfg)
    assert best.delta_mu == 0.0
    assert abs(best.score - 10.0 / (best.sigma + 1e-6)) < 1e-9


def test_score_monotone_in_cardinality():
    classes = [mk_class(0, 10.0, 10), mk_class(1, 10.0, 10),
               mk_class(2, 10.0, 5), mk_class(3, 10.0, 5)]
    best, zone = score_and_select(classes, [(0, 2), (2, 4)], ZoneConfig())
    assert best.cardinality == 20
    assert zone == (0.0, 20.0)


def test_score_scaling_members_preserves_argmax():
    def clusters_for(scale):
        classes = [mk_class(0, 9.0, 4 * scale), mk_class(1, 10.0, 4 * scale),
                   mk_class(2, 30.0, 3 * scale), mk_class(3, 30.5, 3 * scale)]
        return score_and_select(classes, [(0, 2), (2, 4)], ZoneConfig())

    best1, zone1 = clusters_for(1)
    best7, zone7 = clusters_for(7)
    assert zone1 == zone7
    assert abs(best7.score - 7.0 * best1.score) / best7.score < 1e-6


def test_score_no_clusters_raises():
    with pytest.raises(NoClusters):
        score_and_select([mk_class(0, 1.0, 3)], [], ZoneConfig())


def test_index_gaps_split_clusters():
    from seamstitch.seamzone import split_ranges_at_index_gaps

    # equal means, but classes 0-1 and 13-15 are separated by empty classes
    classes = [mk_class(0, 5.0, 3), mk_class(1, 5.0, 3),
               mk_class(13, 5.0, 3), mk_class(14, 5.0, 3), mk_class(15, 5.0, 3)]
    means = np.array([c.mean_disparity for c in classes])
    merged = cluster_disparities(means, 2.0)
    assert merged == [(0, 5)]   # the walk alone cannot see the spatial gap
    split = split_ranges_at_index_gaps(classes, merged)
    assert split == [(0, 2), (2, 5)]
    for s, e in split:
        idx = [classes[i].index for i in range(s, e)]
        assert idx == list(range(idx[0], idx[0] + len(idx)))


def test_index_gap_split_drops_singleton_fragments():
    from seamstitch.seamzone import split_ranges_at_index_gaps

    classes = [mk_class(0, 5.0, 3), mk_class(4, 5.0, 3), mk_class(5, 5.0, 3)]
    split = split_ranges_at_index_gaps(classes, [(0, 3)])
    assert split == [(1, 3)]


def test_fallback_zone_widens_biggest_class():
    classes = [mk_class(0, 1.0, 2), mk_class(1, 2.0, 9), mk_class(2, 3.0, 4)]
    assert fallback_zone(classes) == (0.0, 30.0)
    classes = [mk_class(0, 1.0, 9), mk_class(1, 2.0, 2)]
    assert fallback_zone(classes) == (0.0, 20.0)
