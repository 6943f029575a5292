"""Low-parallax stitch-zone selection from canvas-space disparity statistics.

Post-warp correspondences are binned into fixed-width abscissa classes; runs
of classes with consistent mean disparity form clusters, and the best-scored
cluster's x-extent becomes the zone the stitching line is drawn in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoClusters, NoPairs


@dataclass(frozen=True)
class ZoneConfig:
    range_divisor: int = 20      # class width = canvas_width / range_divisor
    v: float = 2.0               # clustering threshold on mean-disparity steps
    lam: float = 0.5             # weight of the deviation-from-global term
    epsilon: float = 1e-6
    frontal_filter: bool = False  # optional x_s > x_t predicate, off by default


@dataclass
class DisparityClass:
    index: int
    x_range: tuple[float, float]
    members: np.ndarray          # indices into the pair list
    mean_disparity: float


@dataclass
class DisparityCluster:
    classes: list[DisparityClass]
    mu_c: float
    sigma: float
    cardinality: int
    delta_mu: float
    score: float

    @property
    def x_range(self) -> tuple[float, float]:
        return (self.classes[0].x_range[0], self.classes[-1].x_range[1])


def classify_disparities(canvas_src: np.ndarray, canvas_tgt: np.ndarray,
                         canvas_width: float, cfg: ZoneConfig) -> list[DisparityClass]:
    """Bin pairs by source abscissa into width/divisor classes, mean per class."""
    if canvas_src.shape[0] == 0:
        raise NoPairs("no correspondences to classify")
    sel = np.arange(canvas_src.shape[0])
    if cfg.frontal_filter:
        sel = sel[canvas_src[sel, 0] > canvas_tgt[sel, 0]]
        if sel.size == 0:
            raise NoPairs("frontal-position filter removed every pair")
    r = canvas_width / cfg.range_divisor
    disparity = canvas_src[:, 0] - canvas_tgt[:, 0]
    bins = np.clip(np.floor(canvas_src[sel, 0] / r), 0, cfg.range_divisor - 1).astype(np.int64)
    classes = []
    for b in np.unique(bins):
        members = sel[bins == b]
        classes.append(
            DisparityClass(
                index=int(b),
                x_range=(b * r, (b + 1) * r),
                members=members,
                mean_disparity=float(disparity[members].mean()),
            )
        )
    return classes


def cluster_disparities(means: np.ndarray, v: float) -> list[tuple[int, int]]:
    """Threshold clustering of an ordered mean-disparity list.

    Walks the list growing a run while consecutive means differ by at most v;
    runs of fewer than two classes are dropped. Returns half-open index
    ranges [start, end) into the input list. v = 0 keeps only exact ties.
    """
    if v < 0:
        raise ValueError("threshold v must not be negative")
    n = len(means)
    if n == 0:
        return []
    clusters = []
    start = 0
    for i in range(1, n):
        if abs(means[i] - means[i - 1]) <= v:
            continue
        if i - start >= 2:
            clusters.append((start, i))
        start = i
    if n - start >= 2:
        clusters.append((start, n))
    return clusters


def split_ranges_at_index_gaps(classes: list[DisparityClass],
                               ranges: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Split candidate clusters wherever omitted empty classes leave a gap.

    Keeps every cluster spatially contiguous (member class indices
    consecutive); fragments reduced below two classes are dropped, matching
    the singleton rule of the clustering walk.
    """
    out = []
    for start, end in ranges:
        run_start = start
        for i in range(start + 1, end):
            if classes[i].index != classes[i - 1].index + 1:
                if i - run_start >= 2:
                    out.append((run_start, i))
                run_start = i
        if end - run_start >= 2:
            out.append((run_start, end))
    return out


def score_and_select(classes: list[DisparityClass], ranges: list[tuple[int, int]],
                     cfg: ZoneConfig):
    """Score clusters by cardinality vs spread and pick the winner.

    Returns (best: DisparityCluster, zone: (x_lo, x_hi)). Raises NoClusters
    when no range survived clustering so the caller can fall back.
    """
    if not ranges:
        raise NoClusters("threshold clustering produced no multi-class cluster")
    all_means = np.array([c.mean_disparity for c in classes])
    mu_g = float(all_means.mean())
    clusters = []
    for start, end in ranges:
        member = classes[start:end]
        means = all_means[start:end]
        mu_c = float(means.mean())
        sigma = float(means.std())     # population form
        card = int(sum(len(c.members) for c in member))
        delta_mu = abs(mu_c - mu_g)
        score = card / ((sigma + cfg.lam * delta_mu) + cfg.epsilon)
        clusters.append(DisparityCluster(member, mu_c, sigma, card, delta_mu, score))

    def rank(c: DisparityCluster):
        return (-c.score, -c.cardinality, c.classes[0].index)

    best = min(clusters, key=rank)
    return best, best.x_range


def fallback_zone(classes: list[DisparityClass]) -> tuple[float, float]:
    """Most-populated class widened to its two neighbors in the class list."""
    i = int(np.argmax([len(c.members) for c in classes]))
    lo = classes[max(0, i - 1)].x_range[0]
    hi = classes[min(len(classes) - 1, i + 1)].x_range[1]
    return (lo, hi)
