"""End-to-end orchestration of the stitching stages."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import chain as chain_mod
from . import compose as compose_mod
from . import field as field_mod
from . import localwarp, matching, metrics, render, seamzone
from .config import PipelineConfig
from .errors import (
    AllSegmentsInvalid,
    ChainTooShort,
    NoClusters,
    PipelineError,
    StitchError,
)
from .geometry import estimate_affine_ransac
from .imgio import IoError, load_image, save_png, save_pfm, to_gray


@dataclass
class PipelineResult:
    panorama: np.ndarray
    report: metrics.OverlapReport
    crop_rect: tuple
    fallbacks: list[str]
    timings_ms: dict
    excluded_points: int
    guarded_field_max_px: float = 0.0
    mean_reproj_px: float = 0.0
    p95_reproj_px: float = 0.0

    def report_dict(self) -> dict:
        doc = self.report.as_dict()
        doc["stage_timings_ms"] = {k: round(v, 3) for k, v in self.timings_ms.items()}
        doc["fallbacks"] = list(self.fallbacks)
        return doc


class _Stages:
    """Times each stage and tags exceptions with the failing stage name."""

    def __init__(self):
        self.timings = {}
        self._name = None
        self._t0 = 0.0

    def __call__(self, name: str):
        self._name = name
        return self

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self._name] = (time.perf_counter() - self._t0) * 1e3
        if exc is not None and not isinstance(exc, PipelineError):
            raise PipelineError(self._name, exc) from exc
        return False


def stitch_images(source: np.ndarray, target: np.ndarray, cfg: PipelineConfig,
                  matches: matching.MatchSet | None = None,
                  debug_dir=None) -> PipelineResult:
    """Run the full stitch on in-memory images.

    ``matches`` supplies external correspondences (file mode); otherwise the
    built-in matcher runs. ``cfg.seed`` seeds the robust estimator.
    """
    stage = _Stages()
    fallbacks = []
    debug = Path(debug_dir) if debug_dir else None

    with stage("match"):
        if matches is None:
            matches = matching.detect_and_match_builtin(
                source, target, cfg.matcher.max_matches, cfg.seed)
        matches.validate_bounds()

    with stage("ransac"):
        rcfg = replace(cfg.ransac, rng_seed=cfg.seed)
        a_glob, inlier_idx = estimate_affine_ransac(
            matches.src_points(), matches.tgt_points(), rcfg)
        inliers = matches.subset(inlier_idx)

    source_dims = (source.shape[1], source.shape[0])
    target_dims = (target.shape[1], target.shape[0])

    with stage("grid"):
        grid = localwarp.build_overlap_grid(a_glob, source_dims, target_dims, cfg.warp)

    with stage("local_fits"):
        fits = localwarp.fit_all_cells(
            grid, inliers.src_points(), inliers.tgt_points(), a_glob, cfg.warp)

    with stage("field"):
        frame = render.compute_canvas_frame(a_glob, source_dims, target_dims)
        lattice = field_mod.blend_displacement_lattice(
            fits, grid.cells, a_glob, frame, cfg.field_)
        disp = field_mod.regularize_lattice(lattice, cfg.field_)

        off = np.array(frame.offset)
        canvas_overlap = np.zeros((frame.height, frame.width), dtype=bool)
        oy, ox = int(round(off[1])), int(round(off[0]))
        canvas_overlap[oy:oy + target.shape[0], ox:ox + target.shape[1]] = grid.mask
        ramp = field_mod.build_ramp(
            canvas_overlap, field_mod.image_diagonal(target_dims), cfg.field_)
        density = field_mod.build_density_map(inliers.tgt_points() + off, frame, cfg.field_)
        gate = field_mod.build_gate(ramp, density, cfg.field_)
        guarded = field_mod.gate_field(disp, gate, cfg.field_)

    with stage("render"):
        src_layer = render.warp_source(source, a_glob, guarded, frame)
        tgt_layer = render.paste_target(target, frame)
        canvas = render.Canvas(frame, src_layer, tgt_layer)

    with stage("match_transform"):
        canvas_src, canvas_tgt, kept, excluded = render.transform_match_points(
            inliers.src_points(), inliers.tgt_points(), a_glob, guarded, frame)
        if excluded:
            fallbacks.append(f"match_transform:excluded:{excluded}")
        reproj = np.hypot(*(canvas_src - canvas_tgt).T)
        mean_reproj = float(reproj.mean()) if reproj.size else 0.0
        p95_reproj = float(np.percentile(reproj, 95)) if reproj.size else 0.0

    with stage("zone"):
        classes = seamzone.classify_disparities(
            canvas_src, canvas_tgt, frame.width, cfg.zone)
        means = np.array([c.mean_disparity for c in classes])
        ranges = seamzone.cluster_disparities(means, cfg.zone.v)
        ranges = seamzone.split_ranges_at_index_gaps(classes, ranges)
        try:
            cluster, zone = seamzone.score_and_select(classes, ranges, cfg.zone)
        except NoClusters:
            cluster = None
            zone = seamzone.fallback_zone(classes)
            fallbacks.append("zone:fallback")

    with stage("chain"):
        in_zone = (canvas_src[:, 0] >= zone[0]) & (canvas_src[:, 0] < zone[1])
        src_gray = to_gray(src_layer[:, :, :3])
        tgt_gray = to_gray(tgt_layer[:, :, :3])
        try:
            kchain = chain_mod.refine_chain(
                canvas_src[in_zone], canvas_tgt[in_zone],
                src_gray, tgt_gray, cfg.chain.brightness_tol)
        except ChainTooShort:
            kchain = chain_mod.midline_chain(zone, frame.height)
            fallbacks.append("chain:midline")

    with stage("partition"):
        if kchain.fallback:
            valid_chain = kchain
        else:
            try:
                valid_chain, _segments = compose_mod.validate_segments(kchain)
            except AllSegmentsInvalid:
                valid_chain = chain_mod.midline_chain(zone, frame.height)
                fallbacks.append("chain:midline")
        plan = compose_mod.partition_slices(valid_chain, canvas)

    with stage("compose"):
        panorama, crop_rect = compose_mod.blend_and_assemble(
            canvas, plan, cfg.compose.seam_sigma, cfg.compose.seam_band,
            cfg.compose.disagreement_scale)

    with stage("metrics"):
        report = metrics.overlap_report(src_layer, tgt_layer)

    if debug is not None:
        with stage("debug_dump"):
            _dump_debug(debug, guarded, gate, ramp, density, canvas,
                        classes, cluster, zone, valid_chain, plan)

    return PipelineResult(panorama, report, crop_rect, fallbacks,
                          stage.timings, excluded,
                          guarded_field_max_px=float(np.abs(guarded).max()),
                          mean_reproj_px=mean_reproj,
                          p95_reproj_px=p95_reproj)


def run_pipeline(source_path, target_path, cfg: PipelineConfig, out_path,
                 matches_path=None, debug_dir=None) -> PipelineResult:
    """File-level wrapper: load inputs, stitch, write panorama and report."""
    stage = _Stages()
    with stage("io"):
        source = load_image(source_path)
        target = load_image(target_path)
        matches = None
        if matches_path is not None or cfg.matcher.mode == "file":
            if matches_path is None:
                raise IoError("matcher mode 'file' needs a match file path")
            matches = matching.load_match_file(matches_path)

    result = stitch_images(source, target, cfg, matches, debug_dir)
    result.timings_ms = {**stage.timings, **result.timings_ms}

    with stage("write"):
        save_png(out_path, result.panorama)
        report_path = Path(out_path).with_suffix(".report.json")
        report_path.write_text(
            json.dumps(result.report_dict(), indent=2) + "\n", encoding="utf-8")
    return result


def _draw_disc(img: np.ndarray, x: float, y: float, color, r: int = 2) -> None:
    h, w = img.shape[:2]
    xi, yi = int(round(x)), int(round(y))
    img[max(0, yi - r):min(h, yi + r + 1), max(0, xi - r):min(w, xi + r + 1)] = color


def _draw_polyline(img: np.ndarray, pts: np.ndarray, color) -> None:
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        n = max(2, int(np.hypot(*(b - a))) * 2)
        for t in np.linspace(0.0, 1.0, n):
            p = a + t * (b - a)
            xi, yi = int(round(p[0])), int(round(p[1]))
            if 0 <= yi < img.shape[0] and 0 <= xi < img.shape[1]:
                img[yi, xi] = color


def _dump_debug(debug: Path, guarded, gate, ramp, density, canvas,
                classes, cluster, zone, kchain, plan) -> None:
    debug.mkdir(parents=True, exist_ok=True)
    save_pfm(debug / "field_dx.pfm", guarded[:, :, 0])
    save_pfm(debug / "field_dy.pfm", guarded[:, :, 1])
    save_pfm(debug / "gate.pfm", gate)
    save_png(debug / "ramp.png", np.round(ramp * 255.0))
    save_png(debug / "density.png", np.round(density * 255.0))
    save_png(debug / "warped_source.png", canvas.source_layer)
    save_png(debug / "pasted_target.png", canvas.target_layer)

    with open(debug / "zone_classes.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_lo", "x_hi", "count", "mean_disparity"])
        for c in classes:
            writer.writerow([c.x_range[0], c.x_range[1], len(c.members), c.mean_disparity])
    zone_doc = {
        "zone": [zone[0], zone[1]],
        "selected_cluster": None if cluster is None else {
            "score": cluster.score,
            "cardinality": cluster.cardinality,
            "sigma": cluster.sigma,
            "delta_mu": cluster.delta_mu,
        },
    }
    (debug / "zone.json").write_text(json.dumps(zone_doc, indent=2), encoding="utf-8")

    overlay = canvas.target_layer[:, :, :3].copy()
    dual = (canvas.source_layer[:, :, 3] > 0)
    overlay[dual] = (0.5 * overlay[dual] + 0.5 * canvas.source_layer[:, :, :3][dual]).astype(np.uint8)
    _draw_polyline(overlay, kchain.src_points, (255, 64, 64))
    for p in kchain.src_points:
        _draw_disc(overlay, p[0], p[1], (255, 255, 0))
    save_png(debug / "chain_overlay.png", overlay)

    slices = canvas.target_layer[:, :, :3].copy()
    for b in plan.boundaries:
        xi = int(round(b))
        if 0 <= xi < slices.shape[1]:
            slices[:, xi] = (64, 255, 64)
    save_png(debug / "slice_overlay.png", slices)


def error_exit_code(exc: StitchError) -> int:
    """2 for IO/config-side failures, 1 for pipeline-stage failures."""
    if isinstance(exc, PipelineError):
        if exc.stage in ("io", "write"):
            return 2
        return 1
    return 2
