"""Standalone match exporter for the pair-stitching pipeline.

Communicates with the stitcher only through the JSON match-file format; the
two packages never import each other.
"""

from .backends import ModelUnavailable, match_sift, match_xfeat, run_backend
from .export import ExportRequest, export_matches, validate_document

__version__ = "0.1.0"

__all__ = [
    "ExportRequest",
    "ModelUnavailable",
    "export_matches",
    "match_sift",
    "match_xfeat",
    "run_backend",
    "validate_document",
]
