"""Parallax-aware stitching of an image pair into a panorama.

The pipeline coarsely aligns the source to the target with a robust global
affine, refines the overlap with per-cell ridge-regularized local affines
blended into a seam-guarded deformation field, picks a low-parallax stitch
zone from disparity statistics, and reassembles the pair along an anchored
keypoint chain with linear alpha transitions.
"""

from .config import PipelineConfig, config_from_dict, load_config
from .errors import PipelineError, StitchError
from .matching import MatchSet, detect_and_match_builtin, load_match_file, save_match_file
from .metrics import OverlapReport, psnr_overlap, ssim_overlap
from .pipeline import PipelineResult, run_pipeline, stitch_images
from .synth import SceneSpec, generate_pair

__version__ = "0.1.0"

__all__ = [
    "MatchSet",
    "OverlapReport",
    "PipelineConfig",
    "PipelineError",
    "PipelineResult",
    "SceneSpec",
    "StitchError",
    "config_from_dict",
    "detect_and_match_builtin",
    "generate_pair",
    "load_config",
    "load_match_file",
    "psnr_overlap",
    "run_pipeline",
    "save_match_file",
    "ssim_overlap",
    "stitch_images",
]
