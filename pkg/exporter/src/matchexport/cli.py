"""export-matches command line entry point."""

from __future__ import annotations

import argparse
import sys

from .backends import ModelUnavailable
from .export import ExportRequest, export_matches


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="export-matches",
        description="Match an image pair and write a pipeline-compatible match file.")
    ap.add_argument("--source", required=True)
    ap.add_argument("--target", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--max", type=int, default=2000, dest="max_matches")
    ap.add_argument("--model", default="auto", choices=["auto", "xfeat", "sift"],
                    help="auto prefers the learned matcher, falling back to SIFT")
    args = ap.parse_args(argv)

    req = ExportRequest(args.source, args.target, args.out,
                        max_matches=args.max_matches, backend=args.model)
    try:
        summary = export_matches(req)
    except ModelUnavailable as exc:
        print(f"ERROR ModelUnavailable: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"ERROR IoError: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {summary['path']}: {summary['matches']} matches "
          f"(backend={summary['backend']})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
