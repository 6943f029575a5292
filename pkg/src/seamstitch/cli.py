"""Command-line interface: stitch, synth, eval, config init."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import PipelineConfig, load_config
from .errors import PipelineError, StitchError
from .imgio import load_image, save_png
from .matching import save_match_file
from .metrics import psnr_overlap, ssim_overlap
from .pipeline import error_exit_code, run_pipeline
from .synth import SceneSpec, generate_pair


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seamstitch",
                                description="Stitch an image pair into a panorama.")
    sub = p.add_subparsers(dest="command", required=True)

    st = sub.add_parser("stitch", help="stitch a source/target pair")
    st.add_argument("--source", required=True)
    st.add_argument("--target", required=True)
    st.add_argument("--matches", default=None, help="JSON match file (file mode)")
    st.add_argument("--config", default=None, help="pipeline config JSON")
    st.add_argument("--out", required=True, help="output panorama PNG")
    st.add_argument("--dump-debug", default=None, metavar="DIR")
    st.add_argument("--seed", type=int, default=None)

    sy = sub.add_parser("synth", help="generate a synthetic pair + ground truth")
    sy.add_argument("--out", required=True, metavar="DIR")
    sy.add_argument("--width", type=int, default=640)
    sy.add_argument("--height", type=int, default=480)
    sy.add_argument("--dx", type=float, default=0.0, help="x disparity of the static scene")
    sy.add_argument("--dy", type=float, default=0.0)
    sy.add_argument("--angle", type=float, default=0.0, help="rotation in degrees")
    sy.add_argument("--layer", action="append", default=[],
                    metavar="SHIFT:X0,Y0,X1,Y1", help="extra depth layer (repeatable)")
    sy.add_argument("--noise", type=float, default=0.0)
    sy.add_argument("--seed", type=int, default=0)

    ev = sub.add_parser("eval", help="PSNR/SSIM between two equal-size images")
    ev.add_argument("--a", required=True)
    ev.add_argument("--b", required=True)
    ev.add_argument("--out", default=None, help="write the report JSON here")

    cf = sub.add_parser("config", help="configuration utilities")
    cf_sub = cf.add_subparsers(dest="config_command", required=True)
    ci = cf_sub.add_parser("init", help="write the full default config")
    ci.add_argument("--out", default="seamstitch.json")
    return p


def _cmd_stitch(args) -> int:
    try:
        cfg = load_config(args.config) if args.config else PipelineConfig()
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
    except StitchError as exc:
        print(f"STAGE=config CODE={exc.code}: {exc}", file=sys.stderr)
        return 2
    try:
        result = run_pipeline(args.source, args.target, cfg, args.out,
                              matches_path=args.matches, debug_dir=args.dump_debug)
    except PipelineError as exc:
        print(str(exc), file=sys.stderr)
        return error_exit_code(exc)
    print(json.dumps(result.report_dict(), indent=2))
    return 0


def scene_from_args(args) -> SceneSpec:
    """Build a scene recipe from CLI motion parameters.

    --dx/--dy give the disparity of the static scene (source minus target
    coordinates), so the stored affine maps target points to source points.
    """
    rad = math.radians(args.angle)
    c, s = math.cos(rad), math.sin(rad)
    cx, cy = args.width / 2.0, args.height / 2.0
    affine = np.array([
        [c, -s, args.dx + cx - c * cx + s * cy],
        [s, c, args.dy + cy - s * cx - c * cy],
        [0.0, 0.0, 1.0],
    ])
    layers = []
    for text in args.layer:
        try:
            shift_text, rect_text = text.split(":")
            rect = tuple(float(v) for v in rect_text.split(","))
            if len(rect) != 4:
                raise ValueError
            layers.append((float(shift_text), rect))
        except ValueError:
            raise StitchError(f"bad --layer value: {text!r}") from None
    return SceneSpec(base_dims=(args.width, args.height), affine=affine,
                     parallax_layers=layers, texture_seed=args.seed,
                     noise_sigma=args.noise)


def _cmd_synth(args) -> int:
    try:
        spec = scene_from_args(args)
        source, target, gt = generate_pair(spec)
    except StitchError as exc:
        print(f"STAGE=synth CODE={exc.code}: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_png(out / "source.png", source)
    save_png(out / "target.png", target)
    save_match_file(gt, out / "matches.json")
    print(f"wrote {out}/source.png, target.png, matches.json ({len(gt)} matches)")
    return 0


def _cmd_eval(args) -> int:
    try:
        a = load_image(args.a)
        b = load_image(args.b)
    except StitchError as exc:
        print(f"STAGE=io CODE={exc.code}: {exc}", file=sys.stderr)
        return 2
    if a.shape != b.shape:
        print("STAGE=eval CODE=DimensionMismatch: images differ in size", file=sys.stderr)
        return 1
    mask = np.ones(a.shape[:2], dtype=bool)
    doc = {
        "psnr_db": psnr_overlap(a, b, mask),
        "ssim": ssim_overlap(a, b, mask),
        "overlap_pixels": int(mask.sum()),
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def _cmd_config(args) -> int:
    if args.config_command == "init":
        PipelineConfig().to_json(args.out)
        print(f"wrote {args.out}")
        return 0
    return 2


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "stitch": _cmd_stitch,
        "synth": _cmd_synth,
        "eval": _cmd_eval,
        "config": _cmd_config,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
